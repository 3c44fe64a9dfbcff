#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace statcom {

/// Interconnection state of one 4T4D module during one control interval.
///
/// Series states insert the capacitor with +/- polarity. Parallel states
/// join the module with a neighbour through a diode-gated link that only
/// permits charge flow in one direction (ParallelMinus: lower-index module
/// charges the higher-index one, ParallelPlus the opposite). Bypass routes
/// the load current along one rail without touching the capacitor. Passive
/// leaves all transistors off so the module rectifies.
enum class ModuleState {
    SeriesPlus,
    SeriesMinus,
    ParallelPlus,
    ParallelMinus,
    BypassPlus,
    BypassMinus,
    Passive,
};

const char* to_string(ModuleState s);

inline bool is_parallel(ModuleState s) {
    return s == ModuleState::ParallelPlus || s == ModuleState::ParallelMinus;
}
inline bool is_series(ModuleState s) {
    return s == ModuleState::SeriesPlus || s == ModuleState::SeriesMinus;
}
inline bool is_bypass(ModuleState s) {
    return s == ModuleState::BypassPlus || s == ModuleState::BypassMinus;
}

/// Per-module electrical parameters shared by all modules of an arm.
struct ModuleParams {
    double capacitance = 30e-3;       ///< farads
    double diode_drop = 0.7;          ///< V_f per conducting diode
    double device_resistance = 0.1;   ///< ohms of one transistor-diode path
    double parallel_loop_resistance = 0.1;  ///< ohms of one full link loop
};

/// Grid-side parameters: stiff sinusoidal source behind L_g, R_g.
struct GridParams {
    double v_amp = 100.0;  ///< grid voltage amplitude (peak), volts
    double freq = 60.0;    ///< hertz
    double l_g = 3.58e-3;  ///< henries
    double r_g = 0.0;      ///< ohms

    double omega() const;
};

/// Continuous plant state advanced by the integrator.
struct PlantState {
    std::vector<double> cap_voltages;  ///< per-module capacitor voltage, volts
    double i_o = 0.0;                  ///< arm current flowing into the grid, amperes
    double t = 0.0;                    ///< seconds

    std::size_t module_count() const { return cap_voltages.size(); }
};

/// Running energy tallies for the energy-balance invariant. All entries in
/// joules, accumulated step by step with the same discretization the
/// integrator uses.
struct EnergyLedger {
    double grid_absorbed = 0.0;      ///< energy absorbed by the grid source
    double rg_dissipated = 0.0;      ///< grid-side series resistance
    double device_dissipated = 0.0;  ///< conduction drops in module paths
    double link_dissipated = 0.0;    ///< parallelization loops (diodes + R)
    double throughput = 0.0;         ///< integral of |v_g * i_o| dt

    double total_dissipated() const {
        return rg_dissipated + device_dissipated + link_dissipated;
    }
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when the plant state stops being finite. Carries a snapshot of
/// the state at the moment of detection.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, PlantState snapshot)
        : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
    const PlantState& snapshot() const { return snapshot_; }

private:
    PlantState snapshot_;
};

class WindowError : public std::runtime_error {
public:
    explicit WindowError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace statcom
