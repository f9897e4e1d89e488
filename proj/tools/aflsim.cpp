// aflsim: deterministic asynchronous federated learning simulator.
//
// Exit codes: 0 success, 2 configuration/validation, 3 dataset ingestion,
// 4 simulation/protocol/comparison failure, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aflsim/engine.hpp"
#include "aflsim/errors.hpp"

namespace {

using namespace aflsim;

struct CommonFlags {
    std::string config_path;
    std::string strategy;
    std::string out_dir;
    std::uint64_t seed = 0;
    int rounds = 0;
    std::size_t subset = 0;
    bool synthetic = false;

    CLI::Option* config_opt = nullptr;
    CLI::Option* strategy_opt = nullptr;
    CLI::Option* out_dir_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* rounds_opt = nullptr;
    CLI::Option* subset_opt = nullptr;

    void attach(CLI::App* cmd) {
        config_opt = cmd->add_option("--config", config_path, "config file (key = value lines)");
        seed_opt = cmd->add_option("--seed", seed, "master seed");
        strategy_opt = cmd->add_option("--strategy", strategy,
                                       "dynamic_buffered | fedasync | fedbuff");
        rounds_opt = cmd->add_option("--rounds", rounds, "total server receives (T)");
        out_dir_opt = cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_flag("--synthetic", synthetic, "use the synthetic dataset instead of IDX files");
        subset_opt = cmd->add_option("--subset", subset, "cap on training examples (0 = all)");
    }

    // defaults < config file < flags
    ExperimentConfig build() const {
        ExperimentConfig cfg;
        if (config_opt->count() > 0) apply_config_file(cfg, config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (strategy_opt->count() > 0) cfg.strategy = strategy;
        if (rounds_opt->count() > 0) cfg.rounds = rounds;
        if (out_dir_opt->count() > 0) cfg.out_dir = out_dir;
        if (subset_opt->count() > 0) cfg.subset = subset;
        if (synthetic) cfg.source = DataSource::Synthetic;
        resolve_capabilities(cfg);
        ensure_valid(cfg);
        return cfg;
    }
};

void write_run_outputs(const RunLog& log, const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + log.strategy;
    write_csv(log, base + ".csv");
    write_metadata(log, base + ".meta.json");
    if (cfg.smoothing_window > 0) {
        write_csv_smoothed(log, base + "_smoothed.csv", cfg.smoothing_window);
    }
    std::cout << "wrote " << base << ".csv\n";
}

void print_final(const RunLog& log) {
    for (auto it = log.records.rbegin(); it != log.records.rend(); ++it) {
        if (it->accuracy) {
            std::printf("%s: final accuracy %.4f, loss %.4f (t=%d)\n", log.strategy.c_str(),
                        *it->accuracy, it->loss.value_or(0.0), it->t);
            return;
        }
    }
    std::printf("%s: no evaluated rounds\n", log.strategy.c_str());
}

int do_run(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.build();
    RunLog log = run_simulation(cfg);
    write_run_outputs(log, cfg);
    print_final(log);
    return 0;
}

int do_preset(const CommonFlags& flags, const std::string& preset_id) {
    ExperimentConfig cfg = preset_config(preset_id, flags.build());
    ensure_valid(cfg);
    RunLog log = run_simulation(cfg);
    write_run_outputs(log, cfg);
    print_final(log);
    return 0;
}

int do_compare(const CommonFlags& flags, const std::string& preset_id) {
    ExperimentConfig cfg = preset_config(preset_id, flags.build());
    ensure_valid(cfg);
    PreparedData data = prepare_data(cfg);

    std::vector<RunLog> logs;
    for (const char* strategy : {"dynamic_buffered", "fedasync", "fedbuff"}) {
        cfg.strategy = strategy;
        RunLog log = run_simulation(cfg, data);
        write_run_outputs(log, cfg);
        print_final(log);
        logs.push_back(std::move(log));
    }

    ComparisonSummary summary = compare_strategies(logs);
    const std::string summary_path = cfg.out_dir + "/compare_summary.json";
    {
        std::ofstream out(summary_path, std::ios::binary);
        if (!out) throw IngestionError("cannot open for writing: " + summary_path);
        out << summary_to_json(summary).dump(2) << "\n";
    }
    std::cout << "wrote " << summary_path << "\n";
    for (const PairwiseDelta& d : summary.deltas) {
        std::printf("delta %s - %s: %+.2f pp\n", d.a.c_str(), d.b.c_str(), d.delta_pp);
    }
    return 0;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 4;
    } catch (const ComparisonError& e) {
        std::cerr << "comparison error: " << e.what() << "\n";
        return 4;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aflsim: deterministic asynchronous federated learning simulator"};
    app.require_subcommand(1);

    CLI::App* run_cmd = app.add_subcommand("run", "run one simulation");
    CommonFlags run_flags;
    run_flags.attach(run_cmd);

    CLI::App* preset_cmd =
        app.add_subcommand("preset", "run a reference experiment (1.1, 1.2, 1.3, 1.4)");
    CommonFlags preset_flags;
    std::string preset_id;
    preset_cmd->add_option("id", preset_id, "preset id")->required();
    preset_flags.attach(preset_cmd);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run all three strategies on one preset and seed");
    CommonFlags compare_flags;
    std::string compare_preset = "1.4";
    compare_cmd->add_option("--preset", compare_preset, "preset id (default 1.4)");
    compare_flags.attach(compare_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run_cmd->parsed()) return guarded([&] { return do_run(run_flags); });
    if (preset_cmd->parsed()) return guarded([&] { return do_preset(preset_flags, preset_id); });
    if (compare_cmd->parsed()) return guarded([&] { return do_compare(compare_flags, compare_preset); });
    return 2;
}
