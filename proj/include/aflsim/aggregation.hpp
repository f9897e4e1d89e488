#ifndef AFLSIM_AGGREGATION_HPP
#define AFLSIM_AGGREGATION_HPP

#include <memory>
#include <string>
#include <vector>

#include "aflsim/client.hpp"
#include "aflsim/model.hpp"

namespace aflsim {

// One scored update waiting in the buffer.
struct BufferEntry {
    ClientUpdate update;
    int staleness_raw = 0;  // t - tau at receipt
    double s = 1.0;         // staleness factor (t - tau + 1)^(-alpha)
    int f = 1;              // this client's upload count within the scoring window
};

struct AggregationBuffer {
    std::vector<BufferEntry> entries;
    int target = 3;  // B: flush when entries reach this size
};

// s = (t - tau + 1)^(-alpha), in (0,1], 1 = perfectly fresh.
// Throws ProtocolError if t < tau (timestamps ran backwards) and ConfigError
// if alpha is outside (0,1).
double staleness_factor(int t, int tau, double alpha);

// Per-entry aggregation weights: beta_n proportional to |D_n| * e^(s_n / f_n),
// normalized over the live buffer so the weights sum to 1.
std::vector<double> compute_betas(const std::vector<BufferEntry>& entries);

// How beta values are combined into the accumulator. The normalization in the
// weight definition ranges over the whole buffer, which is only known at
// flush; LiveRenormalize recomputes every weight over the live buffer contents
// on each receive. ReceiptAccumulate freezes each weight at receipt time
// (normalized over the buffer as it stood) and never revisits it.
enum class BetaMode { LiveRenormalize, ReceiptAccumulate };

// Window over which a client's upload frequency f is counted.
enum class FreqWindow { Buffer, Lifetime };

struct StrategyConfig {
    double alpha_mix = 0.5;        // global mixing factor
    double alpha_staleness = 0.5;  // exponent in the staleness factor
    int buffer_target = 3;         // B
    BetaMode beta_mode = BetaMode::LiveRenormalize;
    FreqWindow freq_window = FreqWindow::Buffer;
    bool fedbuff_idle = true;  // uploaders wait for the next flush (papaya-style)
};

struct ReceiveResult {
    ModelParameters model_for_client;  // what the uploading client receives back
    bool flushed = false;
    int staleness_raw = 0;
};

// Server-side aggregation behind one interface. Receives are strictly
// serialized by the engine; strategies keep no locks and own their state.
class AggregationStrategy {
public:
    virtual ~AggregationStrategy() = default;

    // Process one uploaded update: score, mix or buffer it, advance the
    // timestamp by exactly 1, and report what the uploader gets back.
    virtual ReceiveResult receive(const ClientUpdate& update) = 0;

    virtual const ModelParameters& global_model() const = 0;
    virtual int timestamp() const = 0;
    virtual const std::string& name() const = 0;

    // True when uploaders idle until the next flush instead of immediately
    // receiving a model (the papaya-style baseline).
    virtual bool uploader_idles_until_flush() const { return false; }
};

// Buffered aggregation with dynamic weights: every buffered update is scored
// by data volume, staleness, and upload frequency; a full buffer mixes the
// weighted sum into the global model.
class DynamicBufferedStrategy : public AggregationStrategy {
public:
    DynamicBufferedStrategy(ModelParameters initial, StrategyConfig config);

    ReceiveResult receive(const ClientUpdate& update) override;
    const ModelParameters& global_model() const override { return global_; }
    int timestamp() const override { return timestamp_; }
    const std::string& name() const override { return name_; }

    const AggregationBuffer& buffer() const { return buffer_; }
    const ModelParameters& accumulator() const { return accumulator_; }

private:
    int upload_frequency(int client_id) const;

    std::string name_ = "dynamic_buffered";
    StrategyConfig config_;
    ModelParameters global_;
    ModelParameters accumulator_;  // x_new(t): weighted sum of buffered models
    int timestamp_ = 0;
    AggregationBuffer buffer_;
    std::vector<std::pair<int, int>> lifetime_counts_;  // client id -> uploads so far
};

// Immediate mixing on every receive with a staleness-decayed rate:
// alpha_eff = alpha_mix * s(t, tau).
class FedAsyncStrategy : public AggregationStrategy {
public:
    FedAsyncStrategy(ModelParameters initial, StrategyConfig config);

    ReceiveResult receive(const ClientUpdate& update) override;
    const ModelParameters& global_model() const override { return global_; }
    int timestamp() const override { return timestamp_; }
    const std::string& name() const override { return name_; }

private:
    std::string name_ = "fedasync";
    StrategyConfig config_;
    ModelParameters global_;
    int timestamp_ = 0;
};

// Buffered averaging: a full buffer mixes the data-size-weighted mean of the
// buffered models into the global model. In faithful mode uploaders idle
// until the flush.
class FedBuffStrategy : public AggregationStrategy {
public:
    FedBuffStrategy(ModelParameters initial, StrategyConfig config);

    ReceiveResult receive(const ClientUpdate& update) override;
    const ModelParameters& global_model() const override { return global_; }
    int timestamp() const override { return timestamp_; }
    const std::string& name() const override { return name_; }
    bool uploader_idles_until_flush() const override { return config_.fedbuff_idle; }

    const AggregationBuffer& buffer() const { return buffer_; }

private:
    std::string name_ = "fedbuff";
    StrategyConfig config_;
    ModelParameters global_;
    int timestamp_ = 0;
    AggregationBuffer buffer_;
};

// Strategy name must be one of: dynamic_buffered, fedasync, fedbuff.
std::unique_ptr<AggregationStrategy> make_strategy(const std::string& name,
                                                   ModelParameters initial,
                                                   const StrategyConfig& config);

} // namespace aflsim

#endif
