#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "statcom/goldens.hpp"
#include "statcom/scenario.hpp"

#include <cmath>
#include <sstream>

using namespace statcom;
using namespace statcom::scenario;
using nlohmann::json;

namespace {

/// Small 3-module bench-scale configuration that runs in well under a second.
ScenarioConfig bench(double duration = 0.2) {
    ScenarioConfig c;
    c.grid.v_amp = 100.0;
    c.grid.freq = 60.0;
    c.grid.l_g = 3.58e-3;
    c.modules.capacitance = 30e-3;
    c.modules.diode_drop = 0.35;
    c.modules.device_resistance = 0.05;
    c.modules.parallel_loop_resistance = 0.05;
    c.n_modules = 3;
    c.controller.i_ref_amp = 2.5;
    c.sim.duration = duration;
    return c;
}

}  // namespace

TEST_CASE("config round-trip is idempotent") {
    const json j1 = to_json(bench());
    const ScenarioConfig parsed = parse_config(j1);
    const json j2 = to_json(parsed);
    CHECK(j1 == j2);
    CHECK(parsed.controller.trim_harmonics == std::vector<std::size_t>{1});
    // Round-trip preserves a non-default trim set and events too.
    ScenarioConfig c = bench();
    c.controller.trim_harmonics = {1, 3, 5};
    c.events.push_back({.time = 0.1, .action = EventSpec::Action::ToggleLeading});
    c.events.push_back({.time = 0.05,
                        .action = EventSpec::Action::SetVInit,
                        .value = 50.0,
                        .module = 1});
    const json j3 = to_json(c);
    CHECK(to_json(parse_config(j3)) == j3);
}

TEST_CASE("schema violations carry the dotted path") {
    json j = to_json(bench());
    j["grid"]["l_g"] = -1.0;
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_config(j)),
                         doctest::Contains("grid.l_g"), ConfigError);

    j = to_json(bench());
    j["modulation"]["carrier_freq"] = 500.0;  // below 20x the grid frequency
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_config(j)),
                         doctest::Contains("modulation.carrier_freq"), ConfigError);

    j = to_json(bench());
    j["controller"].erase("i_ref_amp");
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_config(j)),
                         doctest::Contains("controller.i_ref_amp"), ConfigError);

    j = to_json(bench());
    j["events"] = json::array({{{"time", 9.0}, {"action", "toggle_leading"}}});
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_config(j)),
                         doctest::Contains("events[0].time"), ConfigError);
}

TEST_CASE("dotted-path overrides") {
    json j = to_json(bench());
    apply_override(j, "sim.duration=0.05");
    apply_override(j, "controller.leading=true");
    apply_override(j, "controller.pll_mode=ideal");
    const ScenarioConfig c = parse_config(j);
    CHECK(c.sim.duration == 0.05);
    CHECK(c.controller.leading);
    CHECK(c.controller.pll_mode == control::PllConfig::Mode::Ideal);
    CHECK_THROWS_AS(apply_override(j, "not-an-assignment"), ConfigError);
}

TEST_CASE("equilibrium voltage matches the setpoint formula") {
    const ScenarioConfig c = bench();
    CHECK(equilibrium_voltage(c) ==
          doctest::Approx(control::vsm_setpoint_estimate(
              c.grid, 2.5, false, c.controller.a_m_target, 3)));
}

TEST_CASE("runs are bit-deterministic") {
    const ScenarioConfig c = bench(0.1);
    const RunOutput a = run(c);
    const RunOutput b = run(c);
    CHECK(a.record.digest() == b.record.digest());
    CHECK(a.record.size() == b.record.size());
}

TEST_CASE("events land on their declared sample") {
    ScenarioConfig c = bench(0.1);
    const double t_ev = 0.05;
    c.events.push_back({.time = t_ev,
                        .action = EventSpec::Action::SetVInit,
                        .value = 55.0,
                        .module = 0});
    const RunOutput out = run(c);
    const auto v = out.record.channel("v_sm1_V");
    // The forced jump dwarfs anything the dynamics produce; it must sit at
    // the event sample and nowhere else.
    std::size_t k_jump = 0;
    double biggest = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double d = std::abs(v[k] - v[k - 1]);
        if (d > biggest) {
            biggest = d;
            k_jump = k;
        }
    }
    CHECK(biggest > 5.0);
    CHECK(std::abs(out.record.time_at(k_jump) - t_ev) <= 2.0 / out.record.sample_rate());
}

TEST_CASE("csv round-trip reproduces the summary byte for byte") {
    const ScenarioConfig c = bench(0.3);
    const RunOutput out = run(c);
    std::stringstream ss;
    write_csv(out.record, ss);
    const TimeSeriesRecord back = read_csv(ss);
    CHECK(back.digest() == out.record.digest());
    CHECK(summarize(back, c.grid.freq) == summarize(out.record, c.grid.freq));
}

TEST_CASE("malformed csv reports the line number") {
    std::stringstream ss("t_s,a\n0,1\n1e-5,2\nbroken-row\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(read_csv(ss)), doctest::Contains("line 4"),
                         WindowError);
}

TEST_CASE("sustained modulation saturation raises a warning") {
    ScenarioConfig c = bench(0.4);
    c.controller.a_m_target = 0.98;
    c.events.push_back(
        {.time = 0.15, .action = EventSpec::Action::SetIRefAmp, .value = 8.0});
    const RunOutput out = run(c);
    bool warned = false;
    for (const auto& w : out.warnings) warned = warned || w.find("satur") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("divergence aborts with a snapshot") {
    ScenarioConfig c = bench(0.05);
    c.grid.l_g = 1e-10;  // integration blows up immediately
    c.sim.dt = 1e-5;
    c.controller.rate = 10000.0;
    try {
        run(c);
        FAIL("expected a divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.snapshot().cap_voltages.size() == 3);
    }
}

TEST_CASE("golden library lookups") {
    CHECK_FALSE(golden_scenarios().empty());
    const GoldenScenario* g = find_golden("exp-steady");
    REQUIRE(g != nullptr);
    CHECK(g->name == "exp-steady");
    CHECK(find_golden("no-such-golden") == nullptr);
    for (const auto& golden : golden_scenarios()) {
        CHECK_FALSE(golden.expectations.empty());
        for (const auto& e : golden.expectations) {
            CHECK(e.lo <= e.hi);
            CHECK_FALSE(e.basis.empty());
        }
    }
}

TEST_CASE("empty golden set validates trivially") {
    const auto reports = validate({});
    CHECK(reports.empty());
    CHECK_FALSE(format_report(reports).empty());  // still prints a verdict line
}

TEST_CASE("a tampered expectation is flagged by name") {
    GoldenScenario g = *find_golden("exp-steady");
    bool tampered = false;
    for (auto& e : g.expectations) {
        if (e.metric == "phase_error_deg") {
            e.lo = 100.0;
            e.hi = 200.0;  // impossible band
            tampered = true;
        }
    }
    REQUIRE(tampered);
    const auto reports = validate({g}, 1);
    REQUIRE(reports.size() == 1);
    CHECK_FALSE(reports[0].pass);
    int failed = 0;
    for (const auto& r : reports[0].results) {
        if (!r.pass) {
            ++failed;
            CHECK(r.metric == "phase_error_deg");
        }
    }
    CHECK(failed == 1);
    CHECK(format_report(reports).find("phase_error_deg") != std::string::npos);
}
