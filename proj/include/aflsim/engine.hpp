#ifndef AFLSIM_ENGINE_HPP
#define AFLSIM_ENGINE_HPP

#include <string>

#include "aflsim/config.hpp"
#include "aflsim/dataset.hpp"
#include "aflsim/partition.hpp"
#include "aflsim/runlog.hpp"

namespace aflsim {

inline constexpr const char* kVersion = "0.1.0";

struct PreparedData {
    Dataset train;
    Dataset test;
    Partition partition;
};

// Load (or synthesize) train/test data, apply subset caps, and partition the
// training set across clients. Raises IngestionError when IDX files are
// missing or unreadable and ConfigError when the result cannot back a run
// (empty test set, more clients than examples).
PreparedData prepare_data(const ExperimentConfig& config);

// The four reference experiment setups on top of a base config:
//   1.1  IID, all clients hold all classes
//   1.2  efficient clients (0-4) hold 10 classes, constrained (5-9) hold 3
//   1.3  efficient clients hold 3 classes, constrained hold 10 (worst case:
//        the fastest uploaders only ever see a fraction of the label space)
//   1.4  Dirichlet partition
// All four pin 10 clients with the reference capability profile; everything
// else (hyperparameters, data source, strategy) comes from the base config.
ExperimentConfig preset_config(const std::string& preset_id, ExperimentConfig base);

// Deterministic event loop: every client starts training at time 0; each
// completion delivers an update to the strategy, which returns the model the
// client trains on next; runs until the server has processed
// config.rounds receives. The log gains accuracy/loss on every flush and
// every eval_every-th receive.
RunLog run_simulation(const ExperimentConfig& config, const PreparedData& data);

// Convenience wrapper: prepare_data then run.
RunLog run_simulation(const ExperimentConfig& config);

} // namespace aflsim

#endif
