#include "aflsim/client.hpp"

#include <cmath>

#include "aflsim/errors.hpp"
#include "aflsim/rng.hpp"

namespace aflsim {

ClientUpdate local_train(const ClientState& state, const TrainingConfig& config,
                         const Dataset& dataset, const Network& net) {
    if (state.data_indices.empty()) {
        throw ConfigError("local_train: client " + std::to_string(state.client_id) +
                          " has an empty partition");
    }
    ModelParameters model = state.base_model;
    const ModelParameters& anchor = state.base_model;
    const std::size_t b = static_cast<std::size_t>(config.minibatch_size);

    Rng rng(derive_seed(state.rng_seed, "local_train"));
    std::vector<std::size_t> order = state.data_indices;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += b) {
            const std::size_t len = std::min(b, order.size() - start);
            Batch batch = gather(dataset, {order.begin() + start, order.begin() + start + len});
            Gradient grad = net.backward(model, batch, config.mu, &anchor);
            model = sgd_step(model, grad, config.eta);
        }
    }

    ClientUpdate update;
    update.client_id = state.client_id;
    update.model = std::move(model);
    update.tau = state.base_timestamp;
    update.num_samples = state.data_indices.size();
    return update;
}

double training_duration(const ClientState& state, const TrainingConfig& config,
                         double base_cost) {
    const double batches = std::ceil(static_cast<double>(state.data_indices.size()) /
                                     static_cast<double>(config.minibatch_size));
    return base_cost * static_cast<double>(config.epochs) * batches / state.capability;
}

} // namespace aflsim
