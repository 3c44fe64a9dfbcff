#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "statcom/circuit.hpp"

#include <cmath>
#include <numbers>

using namespace statcom;
using namespace statcom::circuit;

namespace {

ModuleParams ideal() {
    ModuleParams p;
    p.diode_drop = 0.0;
    p.device_resistance = 0.0;
    return p;
}

PlantState make_plant(std::vector<double> v, double i_o) {
    PlantState p;
    p.cap_voltages = std::move(v);
    p.i_o = i_o;
    return p;
}

}  // namespace

TEST_CASE("passive polarity charges the capacitor") {
    CHECK(passive_polarity(5.0) == 1);
    CHECK(passive_polarity(-5.0) == -1);
    CHECK(passive_polarity(0.0) == 1);  // documented tie-break
}

TEST_CASE("series sign per state") {
    CHECK(series_sign(ModuleState::SeriesPlus, 1.0) == 1);
    CHECK(series_sign(ModuleState::SeriesMinus, 1.0) == -1);
    CHECK(series_sign(ModuleState::BypassPlus, 1.0) == 0);
    CHECK(series_sign(ModuleState::ParallelMinus, 1.0) == 0);
    // The passive bridge rectifies: it presents a voltage opposing the
    // current so the capacitor absorbs.
    CHECK(series_sign(ModuleState::Passive, 3.0) == -1);
    CHECK(series_sign(ModuleState::Passive, -3.0) == 1);
}

TEST_CASE("arm voltage: no insertion, no current") {
    auto plant = make_plant({40.0, 41.0, 39.0}, 0.0);
    std::vector<ModuleState> states(3, ModuleState::BypassPlus);
    CHECK(arm_voltage(states, plant, ideal()) == 0.0);
}

TEST_CASE("arm voltage sums inserted capacitors") {
    auto plant = make_plant({40.0, 40.0, 40.0}, 0.0);
    std::vector<ModuleState> states(3, ModuleState::SeriesPlus);
    CHECK(arm_voltage(states, plant, ideal()) == doctest::Approx(120.0));

    auto big = make_plant(std::vector<double>(10, 1396.0), 0.0);
    std::vector<ModuleState> all_plus(10, ModuleState::SeriesPlus);
    CHECK(arm_voltage(all_plus, big, ideal()) == doctest::Approx(13960.0));
}

TEST_CASE("arm voltage subtracts conduction drops in the current direction") {
    ModuleParams p;
    p.diode_drop = 0.7;
    p.device_resistance = 0.1;
    auto plant = make_plant({40.0}, 10.0);
    // Series states run the current through two parallel branches: half the
    // device resistance, one diode drop.
    const double expect = 40.0 - (0.7 + 10.0 * 0.05);
    CHECK(arm_voltage({ModuleState::SeriesPlus}, plant, p) == doctest::Approx(expect));

    plant.i_o = -10.0;
    const double expect_neg = 40.0 + (0.7 + 10.0 * 0.05);
    CHECK(arm_voltage({ModuleState::SeriesPlus}, plant, p) ==
          doctest::Approx(expect_neg));

    // Bypass carries the current through a single path.
    plant.i_o = 10.0;
    CHECK(arm_voltage({ModuleState::BypassPlus}, plant, p) ==
          doctest::Approx(-(0.7 + 10.0 * 0.1)));
}

TEST_CASE("arm voltage rejects mismatched lengths") {
    auto plant = make_plant({40.0, 40.0}, 0.0);
    CHECK_THROWS_AS(arm_voltage({ModuleState::BypassPlus}, plant, ideal()),
                    ConfigError);
}

TEST_CASE("link current gated by the two diode drops") {
    ModuleParams p;
    p.diode_drop = 0.7;
    p.parallel_loop_resistance = 0.1;
    std::vector<ModuleState> pm{ModuleState::ParallelMinus, ModuleState::ParallelMinus};

    // Inside the corridor nothing flows.
    CHECK(parallel_link_currents(pm, {40.0, 40.0}, p) == std::vector<double>{0.0});
    // Above it: (2 - 1.4) / 0.1 = 6 A.
    CHECK(parallel_link_currents(pm, {42.0, 40.0}, p)[0] == doctest::Approx(6.0));
    // Parallel+ permits only the opposite direction.
    std::vector<ModuleState> pp{ModuleState::ParallelPlus, ModuleState::ParallelPlus};
    CHECK(parallel_link_currents(pp, {42.0, 40.0}, p)[0] == 0.0);
    CHECK(parallel_link_currents(pp, {40.0, 42.0}, p)[0] == doctest::Approx(6.0));
}

TEST_CASE("active link with zero loop resistance is rejected") {
    ModuleParams p;
    p.diode_drop = 0.0;
    p.parallel_loop_resistance = 0.0;
    std::vector<ModuleState> pm{ModuleState::ParallelMinus, ModuleState::ParallelMinus};
    CHECK_THROWS_AS(parallel_link_currents(pm, {42.0, 40.0}, p), ConfigError);
}

TEST_CASE("greedy pairing keeps links disjoint") {
    // Three equal Parallel- modules: only the left pair forms a link.
    ModuleParams p;
    p.diode_drop = 0.0;
    p.parallel_loop_resistance = 0.1;
    std::vector<ModuleState> s(3, ModuleState::ParallelMinus);
    const auto links = parallel_link_currents(s, {44.0, 42.0, 40.0}, p);
    CHECK(links[0] > 0.0);
    CHECK(links[1] == 0.0);
}

TEST_CASE("step leaves an idle plant untouched") {
    GridParams grid;
    grid.v_amp = 0.0;
    auto plant = make_plant({40.0, 40.0}, 0.0);
    std::vector<ModuleState> states(2, ModuleState::BypassPlus);
    const auto next = step(plant, states, grid, ideal(), 1e-6);
    CHECK(next.i_o == 0.0);
    CHECK(next.cap_voltages == plant.cap_voltages);
    CHECK(next.t == doctest::Approx(1e-6));
}

TEST_CASE("inserted capacitor integrates the load current") {
    // One module carrying +1 A for 1 ms at C = 1 F. With the current flowing
    // out of the converter, a Series+ module discharges: -1 mV.
    GridParams grid;
    grid.v_amp = 0.0;
    grid.l_g = 1.0;   // large inductor so i_o barely moves over the window
    grid.r_g = 0.0;
    ModuleParams p = ideal();
    p.capacitance = 1.0;
    auto plant = make_plant({40.0}, 1.0);
    for (int k = 0; k < 1000; ++k) {
        plant = step(plant, {ModuleState::SeriesPlus}, grid, p, 1e-6);
    }
    CHECK(plant.cap_voltages[0] ==
          doctest::Approx(40.0 - 1e-3).epsilon(1e-3));
}

TEST_CASE("paralleled pair relaxes with the RC time constant") {
    // Two capacitors joined through R_loop discharge toward each other with
    // tau = R*C/2 once the diode drops are removed. Closed-form oracle:
    // dV(t) = dV0 * exp(-t/tau).
    ModuleParams p = ideal();
    p.capacitance = 30e-3;
    p.parallel_loop_resistance = 0.1;
    GridParams grid;
    grid.v_amp = 0.0;
    grid.l_g = 1.0;
    auto plant = make_plant({42.0, 40.0}, 0.0);
    std::vector<ModuleState> pm{ModuleState::ParallelMinus, ModuleState::ParallelMinus};

    const double tau = p.parallel_loop_resistance * p.capacitance / 2.0;
    const double dt = 1e-6;
    double t = 0.0;
    for (int k = 0; k < 3000; ++k) {
        plant = step(plant, pm, grid, p, dt);
        t += dt;
        const double dv = plant.cap_voltages[0] - plant.cap_voltages[1];
        const double dv_ref = 2.0 * std::exp(-t / tau);
        CHECK(dv == doctest::Approx(dv_ref).epsilon(0.005));
    }
    // Total charge moves only between the two capacitors.
    CHECK(plant.cap_voltages[0] + plant.cap_voltages[1] == doctest::Approx(82.0));
}

TEST_CASE("energy ledger closes over a driven window") {
    GridParams grid;
    grid.v_amp = 100.0;
    grid.freq = 60.0;
    grid.l_g = 3.58e-3;
    grid.r_g = 0.05;
    ModuleParams p;
    p.capacitance = 30e-3;
    p.diode_drop = 0.35;
    p.device_resistance = 0.05;
    auto plant = make_plant({43.0, 43.0, 43.0}, 0.0);

    EnergyLedger ledger;
    const double e0 = stored_energy(plant, grid, p);
    const double dt = 1e-6;
    std::vector<ModuleState> states(3, ModuleState::BypassPlus);
    for (int k = 0; k < 100000; ++k) {  // 0.1 s
        // Crude square-ish modulation so real power flows both ways.
        const double v_g = grid_voltage(grid, plant.t);
        const ModuleState s =
            v_g > 30.0 ? ModuleState::SeriesPlus
                       : (v_g < -30.0 ? ModuleState::SeriesMinus : ModuleState::BypassPlus);
        states.assign(3, s);
        plant = step(plant, states, grid, p, dt, &ledger);
    }
    const double e1 = stored_energy(plant, grid, p);
    const double residual =
        -ledger.grid_absorbed - (e1 - e0) - ledger.total_dissipated();
    CHECK(std::abs(residual) / ledger.throughput < 1e-3);
}

TEST_CASE("divergence carries a snapshot") {
    GridParams grid;
    grid.l_g = 1e-12;  // absurd inductance blows the integration up
    grid.v_amp = 1e6;
    auto plant = make_plant({1e300}, 1e300);
    bool caught = false;
    try {
        for (int k = 0; k < 100; ++k) {
            plant = step(plant, {ModuleState::SeriesPlus}, grid, ideal(), 1e-3);
        }
    } catch (const DivergenceError& e) {
        caught = true;
        CHECK(e.snapshot().cap_voltages.size() == 1);
    }
    CHECK(caught);
}
