#pragma once

#include "statcom/control.hpp"
#include "statcom/modulation.hpp"
#include "statcom/record.hpp"
#include "statcom/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace statcom::scenario {

struct EventSpec {
    enum class Action {
        SetIRefAmp,     ///< value: amperes
        SetAmTarget,    ///< value: new A_m* target
        ToggleLeading,  ///< flips the lead/lag flag
        GridScale,      ///< value: multiplier on the grid amplitude (sag/swell)
        SetVInit,       ///< value: volts, module: index (-1 = all)
    };
    double time = 0.0;
    Action action = Action::SetIRefAmp;
    double value = 0.0;
    int module = -1;
};

struct ControllerSettings {
    double rate = 10000.0;
    std::size_t outer_decimation = 10;
    double lpf_cutoff = 3.0;
    double a_m_target = 0.8;
    double epsilon_max = 0.2;
    bool leading = false;
    double i_ref_amp = 0.0;
    control::PllConfig::Mode pll_mode = control::PllConfig::Mode::Sogi;
    bool feedforward = true;
    bool warm_start = true;
    // Loop shaping; gains derive from the plant parameters unless pinned.
    double inner_bandwidth = 400.0;     ///< hertz, proportional path
    double resonant_bandwidth = 25.0;   ///< hertz, envelope pole of the trims
    std::vector<std::size_t> trim_harmonics{1};  ///< resonant trim locations
    double outer_bandwidth = 2.0;       ///< hertz
    std::optional<double> inner_kp;
    std::optional<double> inner_ki;
    std::optional<double> resonant_gain;
    std::optional<double> outer_kp;
    std::optional<double> outer_ki;
};

struct ModulationSettings {
    double carrier_freq = 5000.0;
    modulation::LatchMode latch_mode = modulation::LatchMode::EligibilityEdge;
};

struct SimParams {
    double dt = 1e-6;
    double duration = 0.5;
    std::size_t record_decimation = 10;
};

struct ScenarioConfig {
    GridParams grid;
    ModuleParams modules;
    std::size_t n_modules = 3;
    std::vector<double> v_init;  ///< empty -> steady-state estimate per module
    ControllerSettings controller;
    ModulationSettings modulation;
    SimParams sim;
    std::vector<EventSpec> events;
    std::uint64_t seed = 0;
};

/// Steady-state module voltage the configuration implies.
double equilibrium_voltage(const ScenarioConfig& cfg);

/// Controller configuration with all gains resolved (auto-tuned from the
/// plant parameters where not pinned).
control::ControllerConfig build_controller_config(const ScenarioConfig& cfg);

/// Schema-checked parse; errors carry the dotted path of the offending key.
ScenarioConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config_file(const std::string& path);

/// Apply one dotted-path override (e.g. "sim.duration=0.2") onto a JSON
/// config tree; the value is re-validated by parse_config afterwards.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct RunOutput {
    TimeSeriesRecord record;
    EnergyLedger ledger;
    double stored_initial = 0.0;
    double stored_final = 0.0;
    std::uint64_t diode_violations = 0;
    std::vector<std::string> warnings;

    /// |grid energy in - storage change - dissipation| relative to throughput.
    double energy_residual_fraction() const;
};

/// Execute one scenario deterministically: plant at dt, controller at its
/// rate, modulation at carrier resolution, events at the last sample
/// boundary not after their declared time.
RunOutput run(const ScenarioConfig& cfg);

/// Standard metric summary of a record (fundamental phasors, distortion,
/// module-voltage statistics) over the longest integer-cycle window, at most
/// twelve cycles, ending at the last sample. The text is a stable function
/// of the record alone, so recomputing it from an exported CSV reproduces
/// the inline summary byte for byte.
std::string summarize(const TimeSeriesRecord& record, double f0);

}  // namespace statcom::scenario
