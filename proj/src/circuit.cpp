#include "statcom/circuit.hpp"

#include <cmath>
#include <numbers>

namespace statcom {

const char* to_string(ModuleState s) {
    switch (s) {
        case ModuleState::SeriesPlus: return "Series+";
        case ModuleState::SeriesMinus: return "Series-";
        case ModuleState::ParallelPlus: return "Parallel+";
        case ModuleState::ParallelMinus: return "Parallel-";
        case ModuleState::BypassPlus: return "Bypass+";
        case ModuleState::BypassMinus: return "Bypass-";
        case ModuleState::Passive: return "Passive";
    }
    return "?";
}

double GridParams::omega() const { return 2.0 * std::numbers::pi * freq; }

}  // namespace statcom

namespace statcom::circuit {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Conduction drop of one module at load current i, in the direction of i.
double conduction_drop(ModuleState s, double i, const ModuleParams& p) {
    if (i == 0.0) return 0.0;
    // Series states carry the current through two parallel branches.
    double r = is_series(s) ? 0.5 * p.device_resistance : p.device_resistance;
    return p.diode_drop + std::abs(i) * r;
}

}  // namespace

int passive_polarity(double i_o) { return i_o >= 0.0 ? +1 : -1; }

int series_sign(ModuleState s, double i_o) {
    switch (s) {
        case ModuleState::SeriesPlus: return +1;
        case ModuleState::SeriesMinus: return -1;
        // The rectifier opposes the current so the capacitor absorbs: the
        // insertion sign is the negated charging polarity.
        case ModuleState::Passive: return -passive_polarity(i_o);
        default: return 0;
    }
}

double grid_voltage(const GridParams& grid, double t) {
    return grid.v_amp * std::sin(grid.omega() * t);
}

double arm_voltage(const std::vector<ModuleState>& states, const PlantState& plant,
                   const ModuleParams& params) {
    if (states.size() != plant.cap_voltages.size()) {
        throw ConfigError("arm_voltage: state vector length " +
                          std::to_string(states.size()) + " != module count " +
                          std::to_string(plant.cap_voltages.size()));
    }
    double v = 0.0;
    const double i = plant.i_o;
    for (std::size_t n = 0; n < states.size(); ++n) {
        v += series_sign(states[n], i) * plant.cap_voltages[n];
        v -= sign_of(i) * conduction_drop(states[n], i, params);
    }
    return v;
}

std::vector<double> parallel_link_currents(const std::vector<ModuleState>& states,
                                           const std::vector<double>& cap_voltages,
                                           const ModuleParams& params) {
    if (states.size() != cap_voltages.size()) {
        throw ConfigError("parallel_link_currents: state/voltage length mismatch");
    }
    const std::size_t n_mod = states.size();
    std::vector<double> links(n_mod >= 1 ? n_mod - 1 : 0, 0.0);
    bool prev_consumed = false;
    for (std::size_t l = 0; l + 1 < n_mod; ++l) {
        const ModuleState a = states[l];
        const ModuleState b = states[l + 1];
        const bool active = !prev_consumed && is_parallel(a) && a == b;
        if (!active) {
            prev_consumed = false;
            continue;
        }
        prev_consumed = true;
        if (params.parallel_loop_resistance <= 0.0) {
            throw ConfigError("parallel_link_currents: active link with zero loop resistance");
        }
        const std::size_t src = (a == ModuleState::ParallelMinus) ? l : l + 1;
        const std::size_t dst = (a == ModuleState::ParallelMinus) ? l + 1 : l;
        const double headroom =
            cap_voltages[src] - cap_voltages[dst] - 2.0 * params.diode_drop;
        links[l] = headroom > 0.0 ? headroom / params.parallel_loop_resistance : 0.0;
    }
    return links;
}

double stored_energy(const PlantState& plant, const GridParams& grid,
                     const ModuleParams& params) {
    double e = 0.5 * grid.l_g * plant.i_o * plant.i_o;
    for (double v : plant.cap_voltages) e += 0.5 * params.capacitance * v * v;
    return e;
}

PlantState step(PlantState plant, const std::vector<ModuleState>& states,
                const GridParams& grid, const ModuleParams& params, double dt,
                EnergyLedger* ledger) {
    if (dt <= 0.0) throw ConfigError("step: dt must be positive");
    if (states.size() != plant.cap_voltages.size()) {
        throw ConfigError("step: state vector length mismatch");
    }

    const double v_arm = arm_voltage(states, plant, params);
    const double v_g = grid_voltage(grid, plant.t);
    const double i_old = plant.i_o;

    // Semi-implicit: current against the old capacitor voltages, capacitors
    // against the new current.
    const double di = dt / grid.l_g * (v_arm - v_g - grid.r_g * i_old);
    const double i_new = i_old + di;
    const double i_mid = 0.5 * (i_old + i_new);

    const std::vector<double> links =
        parallel_link_currents(states, plant.cap_voltages, params);
    std::vector<double> v_old;
    if (ledger) v_old = plant.cap_voltages;

    const double inv_c = dt / params.capacitance;
    for (std::size_t n = 0; n < plant.cap_voltages.size(); ++n) {
        // A module inserted with sign s delivers s*v*i to the arm, so its
        // capacitor current is -s*i; the midpoint current keeps the discrete
        // energy exchange with the inductor consistent.
        double i_cap = -series_sign(states[n], i_old) * i_mid;
        if (n < links.size() && links[n] > 0.0) {
            const bool n_is_src = states[n] == ModuleState::ParallelMinus;
            i_cap += n_is_src ? -links[n] : links[n];
        }
        if (n >= 1 && links[n - 1] > 0.0) {
            const bool n_is_src = states[n] == ModuleState::ParallelPlus;
            i_cap += n_is_src ? -links[n - 1] : links[n - 1];
        }
        plant.cap_voltages[n] += inv_c * i_cap;
    }

    if (ledger) {
        ledger->grid_absorbed += v_g * i_mid * dt;
        ledger->rg_dissipated += grid.r_g * i_old * i_mid * dt;
        ledger->throughput += std::abs(v_g * i_mid) * dt;
        double drop_sum = 0.0;
        for (ModuleState s : states) drop_sum += conduction_drop(s, i_old, params);
        ledger->device_dissipated += drop_sum * sign_of(i_old) * i_mid * dt;
        for (std::size_t l = 0; l < links.size(); ++l) {
            if (links[l] <= 0.0) continue;
            const bool minus = states[l] == ModuleState::ParallelMinus;
            const std::size_t src = minus ? l : l + 1;
            const std::size_t dst = minus ? l + 1 : l;
            const double v_src_mid = 0.5 * (v_old[src] + plant.cap_voltages[src]);
            const double v_dst_mid = 0.5 * (v_old[dst] + plant.cap_voltages[dst]);
            ledger->link_dissipated += links[l] * (v_src_mid - v_dst_mid) * dt;
        }
    }

    plant.i_o = i_new;
    plant.t += dt;

    if (!std::isfinite(plant.i_o)) {
        throw DivergenceError("plant current became non-finite at t=" +
                                  std::to_string(plant.t),
                              plant);
    }
    return plant;
}

}  // namespace statcom::circuit
