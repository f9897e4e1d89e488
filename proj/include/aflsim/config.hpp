#ifndef AFLSIM_CONFIG_HPP
#define AFLSIM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "aflsim/aggregation.hpp"
#include "aflsim/client.hpp"

namespace aflsim {

enum class DataSource { Idx, Synthetic };
enum class PartitionMode { Iid, Classes, Dirichlet };
enum class ModelKind { Mlp, Conv };

// Full experiment description. Every field has a default; a config file and
// then command-line flags override it (flags beat file, file beats defaults).
struct ExperimentConfig {
    // data
    DataSource source = DataSource::Idx;
    std::string data_dir;                  // empty: taken from AFLSIM_DATA_DIR
    std::size_t subset = 0;                // training example cap, 0 = all
    std::size_t eval_subset = 0;           // test example cap, 0 = all
    std::size_t synthetic_train = 2000;    // synthetic fallback sizes
    std::size_t synthetic_test = 1000;

    // partition
    PartitionMode partition = PartitionMode::Iid;
    std::vector<int> classes_per_client;   // empty: all clients get all 10
    double concentration = 0.1;            // dirichlet; ~4-5 distinct classes
                                           // per client at 10 clients

    // model
    ModelKind model = ModelKind::Mlp;
    std::size_t hidden = 64;

    // local training
    TrainingConfig training;               // eta 0.001, mu 0.01, epochs 2, minibatch 50

    // simulation
    std::size_t num_clients = 10;
    int rounds = 100;                      // T: total server receives
    std::vector<double> capabilities;      // empty: resolved by resolve_capabilities
    double base_cost = 1.0;                // simulated seconds per minibatch at capability 1
    double jitter_sigma = 0.0;             // log-normal duration jitter, 0 = off
    int eval_every = 1;
    std::uint64_t seed = 1;

    // aggregation strategy
    std::string strategy = "dynamic_buffered";
    double alpha = 0.5;                    // shared default for both roles below
    double alpha_mix = -1.0;               // <0: use alpha
    double alpha_staleness = -1.0;         // <0: use alpha
    int buffer_target = 3;
    std::string freq_window = "buffer";    // buffer | lifetime
    std::string beta_mode = "live";        // live | receipt
    bool fedbuff_idle = true;

    // output
    std::string out_dir = "out";
    int smoothing_window = 0;              // 0 = no smoothed copy written

    std::string preset;                    // set by the preset runner, else empty
};

// Reference capability profile: clients 0-4 are resource-efficient, 5-9
// resource-constrained, extremes 20x apart.
const std::vector<double>& reference_capabilities();

// Fill in the capability vector when the config left it empty: the reference
// profile for exactly 10 clients, otherwise all 1.0.
void resolve_capabilities(ExperimentConfig& config);

// Apply one canonical dotted key (e.g. "train.eta") to the config.
// Unknown keys and unparseable values raise ConfigError naming the key.
void apply_key(ExperimentConfig& config, const std::string& key, const std::string& value);

// Parse a flat key = value config file. '#' starts a comment; a [section]
// header prefixes following keys with "section.". Raises ConfigError with
// file/line context on syntax errors and unknown keys.
void apply_config_file(ExperimentConfig& config, const std::string& path);

// All range violations, empty when the config is valid.
std::vector<std::string> validate(const ExperimentConfig& config);

// Throws ConfigError listing every violation.
void ensure_valid(const ExperimentConfig& config);

// Effective strategy knobs (shared alpha resolved into both roles).
StrategyConfig strategy_config(const ExperimentConfig& config);

// Snapshot of every resolved field, embedded in run metadata.
nlohmann::json config_to_json(const ExperimentConfig& config);

} // namespace aflsim

#endif
