#pragma once

#include "statcom/types.hpp"

#include <cstdint>

namespace statcom::modulation {

/// N triangular carriers in [0, 1], phase-shifted by 2*pi*k/N.
struct CarrierBank {
    std::size_t n_carriers = 3;
    double f_carrier = 5000.0;  ///< hertz

    /// Carrier k value at time t, triangular, rising from 0 at phase 0.
    double value(std::size_t k, double t) const;
};

/// Phase-shifted-carrier comparison: module k is inserted while |v_m|
/// exceeds its carrier.
std::vector<bool> psc_compare(double v_m, double t, const CarrierBank& bank);

struct ClampResult {
    double v_m;      ///< clamped to [-1, 1]
    bool saturated;  ///< input was outside the range
};

ClampResult clamp_modulation(double v_m_raw);

enum class LatchMode : std::uint8_t {
    EligibilityEdge,  ///< toggle direction each time a link becomes eligible
    CarrierPeriod,    ///< additionally toggle every carrier period while held
};

/// Per-link direction latches for the parallel states. A fresh latch yields
/// Parallel- on the first eligibility edge of each link.
class ParallelLatches {
public:
    ParallelLatches() = default;
    explicit ParallelLatches(std::size_t n_links, LatchMode mode = LatchMode::EligibilityEdge);

    std::size_t link_count() const { return next_minus_.size(); }
    LatchMode mode() const { return mode_; }

    /// Called by assign_states for every link each step; returns the
    /// direction to use when `eligible`, updating edge state.
    ModuleState update(std::size_t link, bool eligible, bool carrier_tick);

    /// Total direction toggles seen per link, for fairness diagnostics.
    const std::vector<std::uint64_t>& toggle_counts() const { return toggles_; }

private:
    std::vector<std::uint8_t> next_minus_;      // 1 -> next edge selects Parallel-
    std::vector<std::uint8_t> was_eligible_;
    std::vector<std::uint8_t> current_minus_;   // direction currently held
    std::vector<std::uint64_t> toggles_;
    LatchMode mode_ = LatchMode::EligibilityEdge;
};

/// Map insertion flags to module states. Inserted modules go Series with the
/// polarity of v_m; runs of adjacent non-inserted modules parallelize
/// pairwise along the run (direction per link latch); an isolated or
/// leftover non-inserted module is bypassed on the positive rail.
std::vector<ModuleState> assign_states(const std::vector<bool>& insert_flags,
                                       double v_m_sign, ParallelLatches& latches,
                                       double i_o, bool carrier_tick = false);

}  // namespace statcom::modulation
