#include "statcom/modulation.hpp"

#include <cmath>

namespace statcom::modulation {

double CarrierBank::value(std::size_t k, double t) const {
    double phase = f_carrier * t + static_cast<double>(k) / static_cast<double>(n_carriers);
    phase -= std::floor(phase);
    return phase < 0.5 ? 2.0 * phase : 2.0 * (1.0 - phase);
}

std::vector<bool> psc_compare(double v_m, double t, const CarrierBank& bank) {
    std::vector<bool> flags(bank.n_carriers, false);
    const double level = std::abs(v_m);
    for (std::size_t k = 0; k < bank.n_carriers; ++k) {
        flags[k] = level > bank.value(k, t);
    }
    return flags;
}

ClampResult clamp_modulation(double v_m_raw) {
    if (v_m_raw > 1.0) return {1.0, true};
    if (v_m_raw < -1.0) return {-1.0, true};
    return {v_m_raw, false};
}

ParallelLatches::ParallelLatches(std::size_t n_links, LatchMode mode)
    : next_minus_(n_links, 1),
      was_eligible_(n_links, 0),
      current_minus_(n_links, 1),
      toggles_(n_links, 0),
      mode_(mode) {}

ModuleState ParallelLatches::update(std::size_t link, bool eligible, bool carrier_tick) {
    if (!eligible) {
        was_eligible_[link] = 0;
        return ModuleState::BypassPlus;  // unused by caller
    }
    const bool rising = !was_eligible_[link];
    was_eligible_[link] = 1;
    if (rising || (mode_ == LatchMode::CarrierPeriod && carrier_tick)) {
        current_minus_[link] = next_minus_[link];
        next_minus_[link] = !next_minus_[link];
        ++toggles_[link];
    }
    return current_minus_[link] ? ModuleState::ParallelMinus : ModuleState::ParallelPlus;
}

std::vector<ModuleState> assign_states(const std::vector<bool>& insert_flags,
                                       double v_m_sign, ParallelLatches& latches,
                                       double i_o, bool carrier_tick) {
    (void)i_o;
    const std::size_t n = insert_flags.size();
    const ModuleState series =
        v_m_sign >= 0.0 ? ModuleState::SeriesPlus : ModuleState::SeriesMinus;
    std::vector<ModuleState> states(n, ModuleState::BypassPlus);
    std::vector<std::uint8_t> eligible(n >= 1 ? n - 1 : 0, 0);

    std::size_t idx = 0;
    while (idx < n) {
        if (insert_flags[idx]) {
            states[idx] = series;
            ++idx;
            continue;
        }
        // Maximal run of non-inserted modules starting at idx.
        std::size_t end = idx;
        while (end < n && !insert_flags[end]) ++end;
        std::size_t m = idx;
        for (; m + 1 < end; m += 2) {
            eligible[m] = 1;
            ModuleState dir = latches.update(m, true, carrier_tick);
            states[m] = dir;
            states[m + 1] = dir;
        }
        if (m < end) states[m] = ModuleState::BypassPlus;
        idx = end;
    }
    // Clear edge memory of links that did not pair this step.
    for (std::size_t l = 0; l < eligible.size(); ++l) {
        if (!eligible[l]) latches.update(l, false, carrier_tick);
    }
    return states;
}

}  // namespace statcom::modulation
