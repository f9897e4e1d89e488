#include "aflsim/aggregation.hpp"

#include <cmath>
#include <cstddef>

#include "aflsim/errors.hpp"

namespace aflsim {

double staleness_factor(int t, int tau, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) {
        throw ConfigError("staleness exponent must lie in (0,1), got " + std::to_string(alpha));
    }
    if (tau < 0) {
        throw ProtocolError("update timestamp is negative: " + std::to_string(tau));
    }
    if (t < tau) {
        throw ProtocolError("update from the future: server at t=" + std::to_string(t) +
                            ", update stamped tau=" + std::to_string(tau));
    }
    return std::pow(static_cast<double>(t - tau + 1), -alpha);
}

std::vector<double> compute_betas(const std::vector<BufferEntry>& entries) {
    if (entries.empty()) {
        throw ProtocolError("cannot compute aggregation weights for an empty buffer");
    }
    std::vector<double> raw(entries.size());
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const BufferEntry& e = entries[i];
        if (e.update.num_samples == 0) {
            throw ProtocolError("buffered update carries zero samples (client " +
                                std::to_string(e.update.client_id) + ")");
        }
        if (e.f < 1) {
            throw ProtocolError("upload frequency must be at least 1");
        }
        raw[i] = static_cast<double>(e.update.num_samples) * std::exp(e.s / static_cast<double>(e.f));
        total += raw[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw SimulationError("aggregation weights are degenerate (total " + std::to_string(total) + ")");
    }
    for (double& b : raw) b /= total;
    return raw;
}

namespace {

void validate_update(const ClientUpdate& update, const ModelParameters& global, int timestamp) {
    if (!update.model.layout || !global.layout ||
        !same_layout(*update.model.layout, *global.layout)) {
        throw ProtocolError("uploaded model layout does not match the global model");
    }
    if (update.tau < 0 || update.tau > timestamp) {
        throw ProtocolError("update from client " + std::to_string(update.client_id) +
                            " stamped tau=" + std::to_string(update.tau) +
                            " but server is at t=" + std::to_string(timestamp));
    }
    if (update.num_samples == 0) {
        throw ProtocolError("update from client " + std::to_string(update.client_id) +
                            " carries zero samples");
    }
}

ModelParameters zeros_like(const ModelParameters& m) {
    ModelParameters z = m;
    std::fill(z.values.begin(), z.values.end(), 0.0);
    return z;
}

// x <- (1 - a) * x + a * y
void mix_into(ModelParameters& x, const ModelParameters& y, double a) {
    const double keep = 1.0 - a;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        x.values[i] = keep * x.values[i] + a * y.values[i];
    }
}

} // namespace

DynamicBufferedStrategy::DynamicBufferedStrategy(ModelParameters initial, StrategyConfig config)
    : config_(config), global_(std::move(initial)), accumulator_(zeros_like(global_)) {
    if (config_.buffer_target < 1) {
        throw ConfigError("buffer target must be at least 1");
    }
    buffer_.target = config_.buffer_target;
}

int DynamicBufferedStrategy::upload_frequency(int client_id) const {
    // Count of this client's uploads inside the scoring window, including the
    // one being processed now.
    int in_buffer = 0;
    for (const BufferEntry& e : buffer_.entries) {
        if (e.update.client_id == client_id) ++in_buffer;
    }
    if (config_.freq_window == FreqWindow::Buffer) return in_buffer + 1;
    for (const auto& [id, count] : lifetime_counts_) {
        if (id == client_id) return count + 1;
    }
    return 1;
}

ReceiveResult DynamicBufferedStrategy::receive(const ClientUpdate& update) {
    validate_update(update, global_, timestamp_);

    BufferEntry entry;
    entry.update = update;
    entry.staleness_raw = timestamp_ - update.tau;
    entry.s = staleness_factor(timestamp_, update.tau, config_.alpha_staleness);
    entry.f = upload_frequency(update.client_id);
    buffer_.entries.push_back(entry);

    if (config_.freq_window == FreqWindow::Lifetime) {
        bool found = false;
        for (auto& [id, count] : lifetime_counts_) {
            if (id == update.client_id) {
                ++count;
                found = true;
                break;
            }
        }
        if (!found) lifetime_counts_.emplace_back(update.client_id, 1);
    }

    if (config_.beta_mode == BetaMode::LiveRenormalize) {
        // Rebuild the accumulator from scratch: every weight is renormalized
        // over the buffer as it stands, so the weighted sum is a convex
        // combination at every point in time.
        std::vector<double> betas = compute_betas(buffer_.entries);
        std::fill(accumulator_.values.begin(), accumulator_.values.end(), 0.0);
        for (std::size_t i = 0; i < buffer_.entries.size(); ++i) {
            const std::vector<double>& src = buffer_.entries[i].update.model.values;
            const double b = betas[i];
            for (std::size_t k = 0; k < accumulator_.values.size(); ++k) {
                accumulator_.values[k] += b * src[k];
            }
        }
    } else {
        // Weight frozen at receipt, normalized over what the buffer held at
        // that moment. The accumulated weights will not in general sum to 1.
        std::vector<double> betas = compute_betas(buffer_.entries);
        const double b = betas.back();
        const std::vector<double>& src = update.model.values;
        for (std::size_t k = 0; k < accumulator_.values.size(); ++k) {
            accumulator_.values[k] += b * src[k];
        }
    }

    ReceiveResult result;
    result.staleness_raw = entry.staleness_raw;
    if (static_cast<int>(buffer_.entries.size()) == buffer_.target) {
        mix_into(global_, accumulator_, config_.alpha_mix);
        check_finite(global_.values, "global model after buffered flush");
        buffer_.entries.clear();
        std::fill(accumulator_.values.begin(), accumulator_.values.end(), 0.0);
        result.flushed = true;
    }
    ++timestamp_;
    result.model_for_client = global_;
    return result;
}

FedAsyncStrategy::FedAsyncStrategy(ModelParameters initial, StrategyConfig config)
    : config_(config), global_(std::move(initial)) {}

ReceiveResult FedAsyncStrategy::receive(const ClientUpdate& update) {
    validate_update(update, global_, timestamp_);

    ReceiveResult result;
    result.staleness_raw = timestamp_ - update.tau;
    const double s = staleness_factor(timestamp_, update.tau, config_.alpha_staleness);
    mix_into(global_, update.model, config_.alpha_mix * s);
    check_finite(global_.values, "global model after async mix");
    ++timestamp_;
    result.flushed = true;  // every receive changes the global model
    result.model_for_client = global_;
    return result;
}

FedBuffStrategy::FedBuffStrategy(ModelParameters initial, StrategyConfig config)
    : config_(config), global_(std::move(initial)) {
    if (config_.buffer_target < 1) {
        throw ConfigError("buffer target must be at least 1");
    }
    buffer_.target = config_.buffer_target;
}

ReceiveResult FedBuffStrategy::receive(const ClientUpdate& update) {
    validate_update(update, global_, timestamp_);

    BufferEntry entry;
    entry.update = update;
    entry.staleness_raw = timestamp_ - update.tau;
    entry.s = 1.0;  // unused: weights depend on data volume only
    entry.f = 1;
    buffer_.entries.push_back(entry);

    ReceiveResult result;
    result.staleness_raw = entry.staleness_raw;
    if (static_cast<int>(buffer_.entries.size()) == buffer_.target) {
        ModelParameters mean = zeros_like(global_);
        double total = 0.0;
        for (const BufferEntry& e : buffer_.entries) {
            total += static_cast<double>(e.update.num_samples);
        }
        for (const BufferEntry& e : buffer_.entries) {
            const double w = static_cast<double>(e.update.num_samples) / total;
            const std::vector<double>& src = e.update.model.values;
            for (std::size_t k = 0; k < mean.values.size(); ++k) {
                mean.values[k] += w * src[k];
            }
        }
        mix_into(global_, mean, config_.alpha_mix);
        check_finite(global_.values, "global model after buffered average");
        buffer_.entries.clear();
        result.flushed = true;
    }
    ++timestamp_;
    result.model_for_client = global_;
    return result;
}

std::unique_ptr<AggregationStrategy> make_strategy(const std::string& name,
                                                   ModelParameters initial,
                                                   const StrategyConfig& config) {
    if (name == "dynamic_buffered") {
        return std::make_unique<DynamicBufferedStrategy>(std::move(initial), config);
    }
    if (name == "fedasync") {
        return std::make_unique<FedAsyncStrategy>(std::move(initial), config);
    }
    if (name == "fedbuff") {
        return std::make_unique<FedBuffStrategy>(std::move(initial), config);
    }
    throw ConfigError("unknown strategy '" + name +
                      "' (expected dynamic_buffered, fedasync, or fedbuff)");
}

} // namespace aflsim
