#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "selftomo/experiment.hpp"

namespace {

namespace fs = std::filesystem;

// Exit codes: 0 success, 2 config/parse problems, 3 pipeline (domain)
// failures, 4 anything unexpected. CLI11 handles its own usage errors.
constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;
constexpr int kExitInternal = 4;

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    bool exact = false;
    bool oracle_check = false;
    bool refine = false;
    std::string out_path;
    std::string csv_path;
};

// Relative output paths land in $SELFTOMO_OUT_DIR when it is set.
fs::path resolve_output(const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("SELFTOMO_OUT_DIR")) {
            return fs::path(dir) / p;
        }
    }
    return p;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw selftomo::ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw selftomo::ConfigError("cannot open output file '" + path.string() + "'");
    }
    out << text;
}

void add_common_flags(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment configuration file (JSON)")
        ->required();
    cmd->add_option("--shots", opts.shots, "Override the shot count (0 = exact statistics)");
    cmd->add_option("--seed", opts.seed, "Override the sampling seed");
    cmd->add_flag("--exact", opts.exact, "Force exact statistics (same as --shots 0)");
    cmd->add_flag("--oracle-check", opts.oracle_check,
                  "Cross-check closed forms against the Born-rule oracle");
    cmd->add_flag("--refine", opts.refine,
                  "Least-squares polish of the counts-based estimate");
    cmd->add_option("--out", opts.out_path, "Write the result document here (default: stdout)");
    cmd->add_option("--csv", opts.csv_path, "Also export the tables as CSV");
}

int run_command(const CliOptions& opts, selftomo::Mode mode, bool analyze, bool certify) {
    selftomo::ExperimentConfig config = selftomo::parse_config(read_file(opts.config_path));
    if (config.mode != mode) {
        throw selftomo::ConfigError(std::string("config mode '") +
                                    selftomo::to_string(config.mode) +
                                    "' does not match this subcommand");
    }
    if (opts.shots) {
        config.shots = *opts.shots;
    }
    if (opts.exact) {
        config.shots = 0;
    }
    if (opts.seed) {
        config.seed = *opts.seed;
    }
    if (opts.oracle_check) {
        config.oracle_check = true;
    }
    if (opts.refine) {
        config.refine = true;
    }
    config.analyze = analyze;
    config.certify = certify;

    const selftomo::ResultDocument doc = selftomo::run_experiment(config);
    const std::string text = selftomo::serialize(doc);
    if (opts.out_path.empty()) {
        std::cout << text;
    } else {
        write_file(resolve_output(opts.out_path), text);
    }
    if (!opts.csv_path.empty()) {
        write_file(resolve_output(opts.csv_path), selftomo::export_tables_csv(doc));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detector self-calibration with an entangled source: simulate the "
                 "joint statistics of two detector realizations and invert them for "
                 "the detector description"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        selftomo::Mode mode;
        bool analyze;
        bool certify;
    };
    const Command commands[] = {
        {"simulate-qubit", "Joint click tables of two qubit detector realizations",
         selftomo::Mode::qubit_selftomo, false, false},
        {"reconstruct-qubit", "Simulate and recover the detector Bloch vector",
         selftomo::Mode::qubit_selftomo, true, false},
        {"simulate-onoff", "Click statistics of two on/off detectors on squeezed vacuum",
         selftomo::Mode::onoff, false, false},
        {"fit-onoff", "Simulate and recover (eta, p_dark)", selftomo::Mode::onoff, true,
         false},
        {"joint-tomo", "Outcome-vector tomography of a fuzzy joint X, Y measurement",
         selftomo::Mode::joint_bell, true, false},
        {"bell-negativity", "Joint tomography plus the sharpened-distribution "
         "negativity certificate",
         selftomo::Mode::joint_bell, true, true},
    };

    CliOptions opts;
    const Command* selected = nullptr;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common_flags(sub, opts);
        sub->callback([&selected, &c]() { selected = &c; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return run_command(opts, selected->mode, selected->analyze, selected->certify);
    } catch (const selftomo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const selftomo::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const selftomo::Error& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
