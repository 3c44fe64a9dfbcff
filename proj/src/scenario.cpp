#include "statcom/scenario.hpp"

#include "statcom/analysis.hpp"
#include "statcom/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

using nlohmann::json;

namespace statcom::scenario {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& member(const json& j, const std::string& path, const std::string& key,
                   bool required = true) {
    static const json null_json;
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) fail(path + "." + key, "missing required key");
        return null_json;
    }
    return *it;
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_or(const json& parent, const std::string& path, const std::string& key,
              double fallback) {
    const json& j = member(parent, path, key, false);
    return j.is_null() ? fallback : num(j, path + "." + key);
}

bool bool_or(const json& parent, const std::string& path, const std::string& key,
             bool fallback) {
    const json& j = member(parent, path, key, false);
    if (j.is_null()) return fallback;
    if (!j.is_boolean()) fail(path + "." + key, "expected a boolean");
    return j.get<bool>();
}

std::size_t uint_or(const json& parent, const std::string& path, const std::string& key,
                    std::size_t fallback) {
    const json& j = member(parent, path, key, false);
    if (j.is_null()) return fallback;
    if (!j.is_number_unsigned()) fail(path + "." + key, "expected a non-negative integer");
    return j.get<std::size_t>();
}

std::string str_or(const json& parent, const std::string& path, const std::string& key,
                   const std::string& fallback) {
    const json& j = member(parent, path, key, false);
    if (j.is_null()) return fallback;
    if (!j.is_string()) fail(path + "." + key, "expected a string");
    return j.get<std::string>();
}

EventSpec::Action parse_action(const std::string& s, const std::string& path) {
    if (s == "set_i_ref_amp") return EventSpec::Action::SetIRefAmp;
    if (s == "set_a_m_target") return EventSpec::Action::SetAmTarget;
    if (s == "toggle_leading") return EventSpec::Action::ToggleLeading;
    if (s == "grid_scale") return EventSpec::Action::GridScale;
    if (s == "set_v_init") return EventSpec::Action::SetVInit;
    fail(path, "unknown event action '" + s + "'");
}

const char* action_name(EventSpec::Action a) {
    switch (a) {
        case EventSpec::Action::SetIRefAmp: return "set_i_ref_amp";
        case EventSpec::Action::SetAmTarget: return "set_a_m_target";
        case EventSpec::Action::ToggleLeading: return "toggle_leading";
        case EventSpec::Action::GridScale: return "grid_scale";
        case EventSpec::Action::SetVInit: return "set_v_init";
    }
    return "?";
}

void validate(const ScenarioConfig& c) {
    if (!(c.grid.freq > 0.0)) fail("grid.freq", "must be positive");
    if (!(c.grid.l_g > 0.0)) fail("grid.l_g", "must be positive");
    if (c.grid.r_g < 0.0) fail("grid.r_g", "must be non-negative");
    if (!(c.modules.capacitance > 0.0)) fail("modules.capacitance", "must be positive");
    if (c.modules.diode_drop < 0.0) fail("modules.diode_drop", "must be non-negative");
    if (c.modules.device_resistance < 0.0) fail("modules.device_resistance", "must be non-negative");
    if (c.modules.parallel_loop_resistance < 0.0) {
        fail("modules.parallel_loop_resistance", "must be non-negative");
    }
    if (c.n_modules < 1) fail("modules.count", "need at least one module");
    if (!c.v_init.empty() && c.v_init.size() != c.n_modules) {
        fail("modules.v_init", "length must equal modules.count");
    }
    if (!(c.controller.a_m_target > 0.0 && c.controller.a_m_target <= 1.0)) {
        fail("controller.a_m_target", "must be in (0, 1]");
    }
    if (!(c.controller.epsilon_max > 0.0)) fail("controller.epsilon_max", "must be positive");
    if (!(c.controller.rate > 0.0)) fail("controller.rate", "must be positive");
    if (c.controller.outer_decimation < 1) fail("controller.outer_decimation", "must be >= 1");
    if (!(c.modulation.carrier_freq >= 20.0 * c.grid.freq)) {
        fail("modulation.carrier_freq", "must be at least 20x the grid frequency");
    }
    if (!(c.sim.dt > 0.0)) fail("sim.dt", "must be positive");
    if (c.sim.dt > 1.0 / (20.0 * c.modulation.carrier_freq)) {
        fail("sim.dt", "must not exceed 1/(20 * carrier_freq)");
    }
    if (!(c.sim.duration > 0.0)) fail("sim.duration", "must be positive");
    if (c.sim.record_decimation < 1) fail("sim.record_decimation", "must be >= 1");
    const double steps_per_ctrl = 1.0 / (c.controller.rate * c.sim.dt);
    if (std::abs(steps_per_ctrl - std::round(steps_per_ctrl)) > 1e-6 ||
        steps_per_ctrl < 1.0) {
        fail("controller.rate", "must divide the plant step rate 1/dt");
    }
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        const std::string path = "events[" + std::to_string(i) + "]";
        const auto& e = c.events[i];
        if (e.time < 0.0 || e.time > c.sim.duration) fail(path + ".time", "outside run duration");
        if (e.action == EventSpec::Action::SetVInit &&
            (e.module < -1 || e.module >= static_cast<int>(c.n_modules))) {
            fail(path + ".module", "module index out of range");
        }
    }
}

}  // namespace

double equilibrium_voltage(const ScenarioConfig& cfg) {
    return control::vsm_setpoint_estimate(cfg.grid, cfg.controller.i_ref_amp,
                                          cfg.controller.leading,
                                          cfg.controller.a_m_target, cfg.n_modules);
}

control::ControllerConfig build_controller_config(const ScenarioConfig& cfg) {
    const auto& cs = cfg.controller;
    control::ControllerConfig cc;
    cc.rate = cs.rate;
    cc.outer_decimation = cs.outer_decimation;
    cc.lpf_cutoff = cs.lpf_cutoff;
    cc.epsilon_max = cs.epsilon_max;
    cc.pll.mode = cs.pll_mode;
    cc.feedforward = cs.feedforward;
    cc.warm_start = cs.warm_start;
    cc.grid = cfg.grid;
    cc.n_modules = cfg.n_modules;

    const double v_sm = equilibrium_voltage(cfg);
    const double v_base = static_cast<double>(cfg.n_modules) * v_sm;

    cc.inner_pi.kp = cs.inner_kp.value_or(kTwoPi * cs.inner_bandwidth * cfg.grid.l_g / v_base);
    cc.inner_pi.ki = cs.inner_ki.value_or(cc.inner_pi.kp * kTwoPi * 40.0);
    cc.inner_pi.out_min = -1.0;
    cc.inner_pi.out_max = 1.0;
    // Resonant trims: plant gain at harmonic h of the grid frequency is
    // v_base/(h*w*L), so the envelope pole lands at resonant_bandwidth with
    // kr = 2*w_env*h*w*L/v_base.
    for (std::size_t h : cs.trim_harmonics) {
        double gain = 2.0 * kTwoPi * cs.resonant_bandwidth * static_cast<double>(h) *
                      cfg.grid.omega() * cfg.grid.l_g / v_base;
        if (h == 1 && cs.resonant_gain) gain = *cs.resonant_gain;
        cc.trims.push_back({h, gain});
    }

    // Small-signal gain of the outer plant: epsilon -> dA_m/dt through the
    // active-power path. Degenerates to zero at zero current, in which case
    // the outer loop is left open.
    const double i_ref = cs.i_ref_amp;
    double outer_kp = 0.0;
    double outer_ki = 0.0;
    if (i_ref > 0.0) {
        const double k_plant =
            cs.a_m_target * cfg.grid.v_amp * i_ref /
            (2.0 * static_cast<double>(cfg.n_modules) * cfg.modules.capacitance * v_sm * v_sm);
        outer_kp = kTwoPi * cs.outer_bandwidth / k_plant;
        outer_ki = outer_kp * kTwoPi * cs.outer_bandwidth / 3.0;
    }
    cc.outer_pi.kp = cs.outer_kp.value_or(outer_kp);
    cc.outer_pi.ki = cs.outer_ki.value_or(outer_ki);
    cc.outer_pi.out_min = -cs.epsilon_max;
    cc.outer_pi.out_max = cs.epsilon_max;
    return cc;
}

ScenarioConfig parse_config(const json& j) {
    ScenarioConfig c;
    if (!j.is_object()) fail("<root>", "expected an object");

    const json& grid = member(j, "<root>", "grid");
    c.grid.v_amp = num(member(grid, "grid", "v_amp"), "grid.v_amp");
    c.grid.freq = num(member(grid, "grid", "freq"), "grid.freq");
    c.grid.l_g = num(member(grid, "grid", "l_g"), "grid.l_g");
    c.grid.r_g = num_or(grid, "grid", "r_g", 0.0);

    const json& mod = member(j, "<root>", "modules");
    c.n_modules = uint_or(mod, "modules", "count", 3);
    c.modules.capacitance = num(member(mod, "modules", "capacitance"), "modules.capacitance");
    c.modules.diode_drop = num_or(mod, "modules", "diode_drop", 0.7);
    c.modules.device_resistance = num_or(mod, "modules", "device_resistance", 0.1);
    c.modules.parallel_loop_resistance =
        num_or(mod, "modules", "parallel_loop_resistance", 0.1);
    const json& vinit = member(mod, "modules", "v_init", false);
    if (!vinit.is_null()) {
        if (vinit.is_number()) {
            c.v_init.assign(c.n_modules, vinit.get<double>());
        } else if (vinit.is_array()) {
            for (std::size_t i = 0; i < vinit.size(); ++i) {
                c.v_init.push_back(num(vinit[i], "modules.v_init[" + std::to_string(i) + "]"));
            }
        } else {
            fail("modules.v_init", "expected a number or an array");
        }
    }

    const json& ctrl = member(j, "<root>", "controller");
    auto& cs = c.controller;
    cs.rate = num_or(ctrl, "controller", "rate", cs.rate);
    cs.outer_decimation = uint_or(ctrl, "controller", "outer_decimation", cs.outer_decimation);
    cs.lpf_cutoff = num_or(ctrl, "controller", "lpf_cutoff", cs.lpf_cutoff);
    cs.a_m_target = num_or(ctrl, "controller", "a_m_target", cs.a_m_target);
    cs.epsilon_max = num_or(ctrl, "controller", "epsilon_max", cs.epsilon_max);
    cs.leading = bool_or(ctrl, "controller", "leading", cs.leading);
    cs.i_ref_amp = num(member(ctrl, "controller", "i_ref_amp"), "controller.i_ref_amp");
    const std::string pll = str_or(ctrl, "controller", "pll_mode", "sogi");
    if (pll == "sogi") {
        cs.pll_mode = control::PllConfig::Mode::Sogi;
    } else if (pll == "ideal") {
        cs.pll_mode = control::PllConfig::Mode::Ideal;
    } else {
        fail("controller.pll_mode", "expected 'sogi' or 'ideal'");
    }
    cs.feedforward = bool_or(ctrl, "controller", "feedforward", cs.feedforward);
    cs.warm_start = bool_or(ctrl, "controller", "warm_start", cs.warm_start);
    cs.inner_bandwidth = num_or(ctrl, "controller", "inner_bandwidth", cs.inner_bandwidth);
    cs.resonant_bandwidth =
        num_or(ctrl, "controller", "resonant_bandwidth", cs.resonant_bandwidth);
    const json& trims = member(ctrl, "controller", "trim_harmonics", false);
    if (!trims.is_null()) {
        if (!trims.is_array()) fail("controller.trim_harmonics", "expected an array");
        cs.trim_harmonics.clear();
        for (std::size_t i = 0; i < trims.size(); ++i) {
            const json& h = trims[i];
            if (!h.is_number_unsigned() || h.get<std::uint64_t>() < 1) {
                fail("controller.trim_harmonics[" + std::to_string(i) + "]",
                     "expected a positive integer harmonic");
            }
            cs.trim_harmonics.push_back(h.get<std::size_t>());
        }
    }
    cs.outer_bandwidth = num_or(ctrl, "controller", "outer_bandwidth", cs.outer_bandwidth);
    auto opt = [&](const char* key) -> std::optional<double> {
        const json& v = member(ctrl, "controller", key, false);
        if (v.is_null()) return std::nullopt;
        return num(v, std::string("controller.") + key);
    };
    cs.inner_kp = opt("inner_kp");
    cs.inner_ki = opt("inner_ki");
    cs.resonant_gain = opt("resonant_gain");
    cs.outer_kp = opt("outer_kp");
    cs.outer_ki = opt("outer_ki");

    const json& pwm = member(j, "<root>", "modulation", false);
    if (!pwm.is_null()) {
        c.modulation.carrier_freq = num_or(pwm, "modulation", "carrier_freq", 5000.0);
        const std::string latch = str_or(pwm, "modulation", "latch_mode", "edge");
        if (latch == "edge") {
            c.modulation.latch_mode = modulation::LatchMode::EligibilityEdge;
        } else if (latch == "carrier") {
            c.modulation.latch_mode = modulation::LatchMode::CarrierPeriod;
        } else {
            fail("modulation.latch_mode", "expected 'edge' or 'carrier'");
        }
    }

    const json& sim = member(j, "<root>", "sim");
    c.sim.dt = num_or(sim, "sim", "dt", 1e-6);
    c.sim.duration = num(member(sim, "sim", "duration"), "sim.duration");
    c.sim.record_decimation = uint_or(sim, "sim", "record_decimation", 10);

    const json& events = member(j, "<root>", "events", false);
    if (!events.is_null()) {
        if (!events.is_array()) fail("events", "expected an array");
        for (std::size_t i = 0; i < events.size(); ++i) {
            const std::string path = "events[" + std::to_string(i) + "]";
            const json& e = events[i];
            EventSpec spec;
            spec.time = num(member(e, path, "time"), path + ".time");
            spec.action = parse_action(
                str_or(e, path, "action", ""), path + ".action");
            if (spec.action != EventSpec::Action::ToggleLeading) {
                spec.value = num(member(e, path, "value"), path + ".value");
            }
            if (spec.action == EventSpec::Action::SetVInit) {
                const json& m = member(e, path, "module", false);
                spec.module = m.is_null() ? -1 : m.get<int>();
            }
            c.events.push_back(spec);
        }
    }

    const json& seed = member(j, "<root>", "seed", false);
    if (!seed.is_null()) {
        if (!seed.is_number_unsigned()) fail("seed", "expected a non-negative integer");
        c.seed = seed.get<std::uint64_t>();
    }

    validate(c);
    return c;
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["grid"] = {{"v_amp", c.grid.v_amp},
                 {"freq", c.grid.freq},
                 {"l_g", c.grid.l_g},
                 {"r_g", c.grid.r_g}};
    j["modules"] = {{"count", c.n_modules},
                    {"capacitance", c.modules.capacitance},
                    {"diode_drop", c.modules.diode_drop},
                    {"device_resistance", c.modules.device_resistance},
                    {"parallel_loop_resistance", c.modules.parallel_loop_resistance}};
    if (!c.v_init.empty()) j["modules"]["v_init"] = c.v_init;
    const auto& cs = c.controller;
    json ctrl = {{"rate", cs.rate},
                 {"outer_decimation", cs.outer_decimation},
                 {"lpf_cutoff", cs.lpf_cutoff},
                 {"a_m_target", cs.a_m_target},
                 {"epsilon_max", cs.epsilon_max},
                 {"leading", cs.leading},
                 {"i_ref_amp", cs.i_ref_amp},
                 {"pll_mode", cs.pll_mode == control::PllConfig::Mode::Sogi ? "sogi" : "ideal"},
                 {"feedforward", cs.feedforward},
                 {"warm_start", cs.warm_start},
                 {"inner_bandwidth", cs.inner_bandwidth},
                 {"resonant_bandwidth", cs.resonant_bandwidth},
                 {"trim_harmonics", cs.trim_harmonics},
                 {"outer_bandwidth", cs.outer_bandwidth}};
    if (cs.inner_kp) ctrl["inner_kp"] = *cs.inner_kp;
    if (cs.inner_ki) ctrl["inner_ki"] = *cs.inner_ki;
    if (cs.resonant_gain) ctrl["resonant_gain"] = *cs.resonant_gain;
    if (cs.outer_kp) ctrl["outer_kp"] = *cs.outer_kp;
    if (cs.outer_ki) ctrl["outer_ki"] = *cs.outer_ki;
    j["controller"] = std::move(ctrl);
    j["modulation"] = {
        {"carrier_freq", c.modulation.carrier_freq},
        {"latch_mode",
         c.modulation.latch_mode == modulation::LatchMode::EligibilityEdge ? "edge" : "carrier"}};
    j["sim"] = {{"dt", c.sim.dt},
                {"duration", c.sim.duration},
                {"record_decimation", c.sim.record_decimation}};
    if (!c.events.empty()) {
        json events = json::array();
        for (const auto& e : c.events) {
            json je = {{"time", e.time}, {"action", action_name(e.action)}};
            if (e.action != EventSpec::Action::ToggleLeading) je["value"] = e.value;
            if (e.action == EventSpec::Action::SetVInit) je["module"] = e.module;
            events.push_back(std::move(je));
        }
        j["events"] = std::move(events);
    }
    j["seed"] = c.seed;
    return j;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not of the form path=value");
    }
    std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    std::string pointer = "/";
    for (char ch : path) pointer += (ch == '.') ? '/' : ch;
    json parsed;
    if (value == "true" || value == "false") {
        parsed = (value == "true");
    } else {
        try {
            std::size_t pos = 0;
            const double d = std::stod(value, &pos);
            if (pos == value.size()) {
                parsed = d;
            } else {
                parsed = value;
            }
        } catch (const std::exception&) {
            parsed = value;
        }
    }
    try {
        j[json::json_pointer(pointer)] = parsed;
    } catch (const json::exception& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
}

double RunOutput::energy_residual_fraction() const {
    const double residual = (stored_final - stored_initial) + ledger.grid_absorbed +
                            ledger.total_dissipated();
    const double scale = std::max(ledger.throughput, 1e-12);
    return std::abs(residual) / scale;
}

RunOutput run(const ScenarioConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.n_modules;
    const double dt = cfg.sim.dt;
    const auto n_steps = static_cast<std::uint64_t>(std::llround(cfg.sim.duration / dt));
    const auto ctrl_every =
        static_cast<std::uint64_t>(std::llround(1.0 / (cfg.controller.rate * dt)));

    PlantState plant;
    plant.cap_voltages =
        cfg.v_init.empty() ? std::vector<double>(n, equilibrium_voltage(cfg)) : cfg.v_init;

    const control::ControllerConfig cc = build_controller_config(cfg);
    control::ControllerState ctrl = control::make_controller_state(
        cc, cfg.controller.i_ref_amp, cfg.controller.a_m_target, cfg.controller.leading);

    modulation::CarrierBank bank{n, cfg.modulation.carrier_freq};
    modulation::ParallelLatches latches(n >= 1 ? n - 1 : 0, cfg.modulation.latch_mode);

    GridParams grid_run = cfg.grid;

    std::vector<std::string> names = {"v_g_V", "i_o_A", "i_ref_A", "v_arm_V"};
    for (std::size_t m = 1; m <= n; ++m) names.push_back("v_sm" + std::to_string(m) + "_V");
    names.insert(names.end(), {"a_m_hat", "epsilon_rad", "v_m", "saturation"});
    RunOutput out{TimeSeriesRecord(1.0 / (dt * static_cast<double>(cfg.sim.record_decimation)),
                                   names),
                  {}, 0.0, 0.0, 0, {}};
    for (const auto& e : cfg.events) {
        out.record.add_event(e.time, action_name(e.action));
    }

    // Events fire on the last plant sample not after their declared time.
    std::vector<std::pair<std::uint64_t, const EventSpec*>> timeline;
    for (const auto& e : cfg.events) {
        timeline.emplace_back(static_cast<std::uint64_t>(std::floor(e.time / dt + 1e-9)), &e);
    }
    std::stable_sort(timeline.begin(), timeline.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t next_event = 0;

    out.stored_initial = circuit::stored_energy(plant, cfg.grid, cfg.modules);

    double v_m = 0.0;
    bool saturated = false;
    // Saturation bursts: clipping confined to less than one grid cycle is a
    // normal transient; clipping that keeps recurring for longer than a cycle
    // (with no clean cycle in between) gets a warning.
    const double grid_period = 1.0 / cfg.grid.freq;
    double burst_start = -1.0;
    double last_sat_t = -1.0;
    bool saturation_warned = false;
    double last_theta = 0.0;
    double last_ctrl_t = 0.0;
    double last_eps = 0.0;
    std::vector<double> row(names.size());

    for (std::uint64_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;

        while (next_event < timeline.size() && timeline[next_event].first == k) {
            const EventSpec& e = *timeline[next_event].second;
            switch (e.action) {
                case EventSpec::Action::SetIRefAmp:
                    if (ctrl.i_ref_amp > 0.0) {
                        control::rescale_trims(ctrl, e.value / ctrl.i_ref_amp);
                    }
                    ctrl.i_ref_amp = e.value;
                    break;
                case EventSpec::Action::SetAmTarget: ctrl.a_m_target = e.value; break;
                case EventSpec::Action::ToggleLeading:
                    control::rescale_trims(ctrl, -1.0);
                    ctrl.leading = !ctrl.leading;
                    break;
                case EventSpec::Action::GridScale:
                    grid_run.v_amp = cfg.grid.v_amp * e.value;
                    break;
                case EventSpec::Action::SetVInit:
                    if (e.module < 0) {
                        std::fill(plant.cap_voltages.begin(), plant.cap_voltages.end(), e.value);
                    } else {
                        plant.cap_voltages[static_cast<std::size_t>(e.module)] = e.value;
                    }
                    break;
            }
            ++next_event;
        }

        if (k % ctrl_every == 0) {
            const control::Measurements meas{circuit::grid_voltage(grid_run, t), plant.i_o};
            const control::ControllerOutput co = control::controller_step(meas, t, ctrl, cc);
            const auto clamped = modulation::clamp_modulation(co.v_m_raw);
            v_m = clamped.v_m;
            saturated = clamped.saturated;
            last_theta = co.theta_g;
            last_ctrl_t = t;
            last_eps = co.epsilon;
            if (saturated) {
                if (last_sat_t < 0.0 || t - last_sat_t > grid_period) burst_start = t;
                last_sat_t = t;
                if (t - burst_start > grid_period && !saturation_warned) {
                    out.warnings.push_back(
                        "modulation saturated for more than one grid cycle around t=" +
                        std::to_string(t) + " s");
                    saturation_warned = true;
                }
            }
        }

        const bool carrier_tick =
            k > 0 && std::floor(t * cfg.modulation.carrier_freq) !=
                         std::floor((t - dt) * cfg.modulation.carrier_freq);
        const auto flags = modulation::psc_compare(v_m, t, bank);
        const auto states = modulation::assign_states(flags, v_m, latches, plant.i_o, carrier_tick);

        if (k % cfg.sim.record_decimation == 0) {
            // Diode complementarity audit on the sampled grid.
            const auto links =
                circuit::parallel_link_currents(states, plant.cap_voltages, cfg.modules);
            for (std::size_t l = 0; l < links.size(); ++l) {
                if (links[l] < 0.0) ++out.diode_violations;
                if (links[l] > 0.0) {
                    const bool minus = states[l] == ModuleState::ParallelMinus;
                    const std::size_t src = minus ? l : l + 1;
                    const std::size_t dst = minus ? l + 1 : l;
                    if (plant.cap_voltages[src] - plant.cap_voltages[dst] <=
                        2.0 * cfg.modules.diode_drop) {
                        ++out.diode_violations;
                    }
                }
            }

            const double theta_now =
                last_theta + ctrl.pll.omega * (t - last_ctrl_t);
            row[0] = circuit::grid_voltage(grid_run, t);
            row[1] = plant.i_o;
            row[2] = control::current_reference(theta_now, ctrl.i_ref_amp, last_eps,
                                                ctrl.leading);
            row[3] = circuit::arm_voltage(states, plant, cfg.modules);
            for (std::size_t m = 0; m < n; ++m) row[4 + m] = plant.cap_voltages[m];
            row[4 + n] = control::amplitude_estimate(ctrl.iq);
            row[5 + n] = ctrl.epsilon;
            row[6 + n] = v_m;
            row[7 + n] = saturated ? 1.0 : 0.0;
            out.record.append(row);
        }

        plant = circuit::step(std::move(plant), states, grid_run, cfg.modules, dt, &out.ledger);

        if (!std::isfinite(plant.i_o)) {
            throw DivergenceError("non-finite plant state at t=" + std::to_string(plant.t), plant);
        }
    }

    out.stored_final = circuit::stored_energy(plant, cfg.grid, cfg.modules);
    return out;
}

std::string summarize(const TimeSeriesRecord& record, double f0) {
    if (!(f0 > 0.0)) throw ConfigError("summarize: f0 must be positive");
    std::ostringstream os;
    char line[128];
    auto put = [&](const std::string& name, double v) {
        std::snprintf(line, sizeof line, "%s=%.17g\n", name.c_str(), v);
        os << line;
    };

    const double fs = record.sample_rate();
    const std::size_t size = record.size();
    put("sample_rate_hz", fs);
    put("samples", static_cast<double>(size));
    put("f0_hz", f0);

    // Longest integer-cycle window ending at the last sample, at most 12
    // cycles; the sample count per cycle need not be integral, only the
    // total window length must be.
    std::size_t cycles = 0;
    std::size_t len = 0;
    const auto total = static_cast<std::size_t>(static_cast<double>(size) * f0 / fs);
    for (std::size_t c = std::min<std::size_t>(12, total); c >= 1; --c) {
        const double l = static_cast<double>(c) * fs / f0;
        if (std::abs(l - std::round(l)) < 1e-6 * l) {
            cycles = c;
            len = static_cast<std::size_t>(std::llround(l));
            break;
        }
    }
    put("window_cycles", static_cast<double>(cycles));
    if (cycles == 0 || len > size) return os.str();
    const std::size_t start = size - len;

    const bool has_thd_window = cycles >= 10;
    std::pair<double, double> grid_ph{0.0, 0.0};
    bool have_grid = record.has_channel("v_g_V");
    if (have_grid) {
        auto seg = record.channel("v_g_V").subspan(start, len);
        grid_ph = analysis::fundamental_phasor(seg, fs, f0);
        put("v_g_amp", grid_ph.first);
    }
    for (const char* name : {"i_o_A", "v_arm_V"}) {
        if (!record.has_channel(name)) continue;
        auto seg = record.channel(name).subspan(start, len);
        const auto [amp, phase] = analysis::fundamental_phasor(seg, fs, f0);
        put(std::string(name) + ".amp", amp);
        if (have_grid) {
            const double rel =
                std::remainder(phase - grid_ph.second, 2.0 * std::numbers::pi);
            put(std::string(name) + ".phase_vs_grid_rad", rel);
        }
        if (has_thd_window) put(std::string(name) + ".thd", analysis::thd(seg, fs, f0));
    }

    std::vector<std::span<const double>> vs;
    for (std::size_t m = 1;; ++m) {
        const std::string name = "v_sm" + std::to_string(m) + "_V";
        if (!record.has_channel(name)) break;
        vs.push_back(record.channel(name));
    }
    if (!vs.empty()) {
        const auto stats = analysis::spread(vs, start, start + len);
        put("v_sm.mean", stats.mean);
        put("v_sm.spread", stats.max_minus_min);
    }
    for (const char* name : {"a_m_hat", "epsilon_rad", "saturation"}) {
        if (!record.has_channel(name)) continue;
        auto ch = record.channel(name);
        double acc = 0.0;
        for (std::size_t k = start; k < size; ++k) acc += ch[k];
        put(std::string(name) + ".mean", acc / static_cast<double>(len));
    }
    return os.str();
}

}  // namespace statcom::scenario
