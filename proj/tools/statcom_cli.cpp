// Command-line front end: run scenarios, analyze exported records, evaluate
// the design envelope, and validate the golden library.
//
// Exit codes:
//   0  success
//   2  configuration / usage error
//   3  simulation divergence (a state snapshot is written next to the outputs)
//   4  analysis or I/O error
//   5  golden validation failures

#include "statcom/analysis.hpp"
#include "statcom/control.hpp"
#include "statcom/goldens.hpp"
#include "statcom/record.hpp"
#include "statcom/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace statcom;

namespace {

std::string default_outdir() {
    const char* env = std::getenv("STATCOM_OUTDIR");
    return env && *env ? env : ".";
}

void print_kv(const std::string& key, double value) {
    std::printf("%s=%.17g\n", key.c_str(), value);
}

int cmd_run(const std::string& config_path, const std::string& golden_name,
            const std::vector<std::string>& overrides, const std::string& outdir,
            const std::string& tag) {
    nlohmann::json j;
    std::string name = tag;
    if (!golden_name.empty()) {
        const auto* g = scenario::find_golden(golden_name);
        if (!g) {
            std::cerr << "unknown golden '" << golden_name << "' (see list-goldens)\n";
            return 2;
        }
        j = scenario::to_json(g->config);
        if (name.empty()) name = g->name;
    } else {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot open config file: " << config_path << "\n";
            return 4;
        }
        in >> j;
        if (name.empty()) name = fs::path(config_path).stem().string();
    }
    for (const auto& ov : overrides) scenario::apply_override(j, ov);
    const scenario::ScenarioConfig cfg = scenario::parse_config(j);

    fs::create_directories(outdir);
    const fs::path base = fs::path(outdir) / name;

    scenario::RunOutput out;
    try {
        out = scenario::run(cfg);
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        std::ofstream snap(base.string() + "_divergence.txt");
        const auto& st = e.snapshot();
        snap << "t=" << st.t << "\n"
             << "i_o=" << st.i_o << "\n";
        for (std::size_t m = 0; m < st.cap_voltages.size(); ++m) {
            snap << "v_sm" << m + 1 << "=" << st.cap_voltages[m] << "\n";
        }
        std::cerr << "state snapshot written to " << base.string()
                  << "_divergence.txt\n";
        return 3;
    }

    write_csv_file(out.record, base.string() + "_record.csv");
    const std::string summary = scenario::summarize(out.record, cfg.grid.freq);
    {
        std::ofstream sf(base.string() + "_summary.txt");
        sf << summary;
    }
    {
        std::ofstream cf(base.string() + "_config.json");
        cf << scenario::to_json(cfg).dump(2) << "\n";
    }
    std::cout << summary;
    print_kv("energy_residual_frac", out.energy_residual_fraction());
    print_kv("diode_violations", static_cast<double>(out.diode_violations));
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << base.string() << "_record.csv\n";
    return 0;
}

int cmd_analyze(const std::string& csv_path, double f0, const std::string& thd_ch,
                const std::string& phasor_ch) {
    TimeSeriesRecord rec;
    try {
        rec = read_csv_file(csv_path);
    } catch (const std::exception& e) {
        std::cerr << "cannot read " << csv_path << ": " << e.what() << "\n";
        return 4;
    }
    std::cout << scenario::summarize(rec, f0);
    for (const auto& [name, flavor] :
         {std::pair{thd_ch, 't'}, std::pair{phasor_ch, 'p'}}) {
        if (name.empty()) continue;
        if (!rec.has_channel(name)) {
            std::cerr << "no such channel: " << name << "\n";
            return 4;
        }
        const auto samples = rec.channel(name);
        const double fs = rec.sample_rate();
        // Largest integer-cycle window ending at the tail.
        const auto total =
            static_cast<std::size_t>(static_cast<double>(samples.size()) * f0 / fs);
        std::size_t len = 0;
        for (std::size_t c = total; c >= 1; --c) {
            const double l = static_cast<double>(c) * fs / f0;
            if (std::abs(l - std::round(l)) < 1e-6 * l) {
                len = static_cast<std::size_t>(std::llround(l));
                break;
            }
        }
        if (len == 0 || len > samples.size()) {
            std::cerr << "record too short for an integer-cycle window\n";
            return 4;
        }
        const auto seg = samples.subspan(samples.size() - len, len);
        if (flavor == 't') {
            print_kv(name + ".thd", analysis::thd(seg, fs, f0));
        } else {
            const auto [amp, phase] = analysis::fundamental_phasor(seg, fs, f0);
            print_kv(name + ".amp", amp);
            print_kv(name + ".phase_rad", phase);
        }
    }
    return 0;
}

int cmd_envelope(double a_m, std::size_t n_modules, double v_sm_max, double v_g_max,
                 double l_g, double freq) {
    GridParams grid;
    grid.v_amp = v_g_max;
    grid.freq = freq;
    grid.l_g = l_g;
    for (std::size_t n = 1; n <= n_modules; ++n) {
        const double env =
            std::max(0.0, control::io_envelope(a_m, n, v_sm_max, v_g_max, grid));
        std::printf("n=%zu i_o_max_A=%.17g\n", n, env);
    }
    return 0;
}

int cmd_validate(const std::vector<std::string>& names, unsigned threads) {
    std::vector<scenario::GoldenScenario> selected;
    if (names.empty()) {
        selected = scenario::golden_scenarios();
    } else {
        for (const auto& n : names) {
            const auto* g = scenario::find_golden(n);
            if (!g) {
                std::cerr << "unknown golden '" << n << "'\n";
                return 2;
            }
            selected.push_back(*g);
        }
    }
    const auto reports = scenario::validate(selected, threads);
    std::cout << scenario::format_report(reports);
    for (const auto& r : reports) {
        if (!r.pass) return 5;
    }
    return 0;
}

int cmd_list() {
    for (const auto& g : scenario::golden_scenarios()) {
        std::printf("%-14s %s\n", g.name.c_str(), g.summary.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascaded 4T4D STATCOM arm simulator"};
    app.require_subcommand(1);

    std::string config_path, golden_name, outdir = default_outdir(), tag;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "simulate one scenario and export the record");
    auto* cfg_opt = run->add_option("--config", config_path, "scenario JSON file");
    auto* gold_opt =
        run->add_option("--golden", golden_name, "name of a built-in golden scenario");
    cfg_opt->excludes(gold_opt);
    run->add_option("--set", overrides,
                    "dotted-path override, e.g. sim.duration=0.2 (repeatable)");
    run->add_option("--outdir", outdir, "output directory (default $STATCOM_OUTDIR or .)");
    run->add_option("--tag", tag, "basename for the output files");

    std::string csv_path, thd_ch, phasor_ch;
    double f0 = 60.0;
    auto* analyze = app.add_subcommand("analyze", "summarize an exported record CSV");
    analyze->add_option("csv", csv_path, "record CSV")->required();
    analyze->add_option("--f0", f0, "fundamental frequency, Hz");
    analyze->add_option("--thd", thd_ch, "also print the THD of this channel");
    analyze->add_option("--phasor", phasor_ch,
                        "also print the fundamental phasor of this channel");

    double a_m = 0.8, v_sm_max = 1500.0, v_g_max = 10000.0, l_g = 10e-3, freq = 60.0;
    std::size_t n_modules = 10;
    auto* envelope =
        app.add_subcommand("envelope", "deliverable-current envelope vs module count");
    envelope->add_option("--am", a_m, "modulation-depth target");
    envelope->add_option("--n", n_modules, "maximum module count");
    envelope->add_option("--vsm-max", v_sm_max, "rated module voltage, V");
    envelope->add_option("--vg-max", v_g_max, "grid voltage amplitude, V");
    envelope->add_option("--lg", l_g, "coupling inductance, H");
    envelope->add_option("--freq", freq, "grid frequency, Hz");

    std::vector<std::string> golden_names;
    unsigned threads = 0;
    auto* validate = app.add_subcommand("validate", "run the golden scenario library");
    validate->add_option("goldens", golden_names, "subset of goldens (default: all)");
    validate->add_option("--threads", threads, "worker threads (0 = hardware)");

    app.add_subcommand("list-goldens", "list the built-in golden scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            if (config_path.empty() && golden_name.empty()) {
                std::cerr << "run: either --config or --golden is required\n";
                return 2;
            }
            return cmd_run(config_path, golden_name, overrides, outdir, tag);
        }
        if (analyze->parsed()) return cmd_analyze(csv_path, f0, thd_ch, phasor_ch);
        if (envelope->parsed()) return cmd_envelope(a_m, n_modules, v_sm_max, v_g_max, l_g, freq);
        if (validate->parsed()) return cmd_validate(golden_names, threads);
        return cmd_list();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const WindowError& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
