#ifndef AFLSIM_CLIENT_HPP
#define AFLSIM_CLIENT_HPP

#include <cstdint>
#include <vector>

#include "aflsim/dataset.hpp"
#include "aflsim/model.hpp"

namespace aflsim {

struct TrainingConfig {
    double eta = 0.001;       // learning rate
    double mu = 0.01;         // proximal coefficient; local loss adds (mu/2)*||x - base||^2
    int epochs = 2;           // local training epochs E
    int minibatch_size = 50;  // examples per SGD step
};

struct ClientState {
    int client_id = 0;
    double capability = 1.0;  // relative compute units, > 0
    std::vector<std::size_t> data_indices;
    ModelParameters base_model;
    int base_timestamp = 0;  // tau: server timestamp at last model receipt
    std::uint64_t rng_seed = 0;
};

struct ClientUpdate {
    int client_id = 0;
    ModelParameters model;
    int tau = 0;
    std::size_t num_samples = 0;
    double sim_completion_time = 0.0;
};

// E epochs of minibatch SGD from base_model on this client's partition.
// Minibatch order is a seeded shuffle per epoch (stream derived from
// state.rng_seed), so the result is a pure function of its arguments.
ClientUpdate local_train(const ClientState& state, const TrainingConfig& config,
                         const Dataset& dataset, const Network& net);

// Simulated seconds to run one local training round:
//   base_cost * E * ceil(|D_n| / b) / capability.
double training_duration(const ClientState& state, const TrainingConfig& config,
                         double base_cost);

} // namespace aflsim

#endif
