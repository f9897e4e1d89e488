#include "aflsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <queue>

#include "aflsim/aggregation.hpp"
#include "aflsim/client.hpp"
#include "aflsim/errors.hpp"

namespace aflsim {

namespace {

std::string resolved_data_dir(const ExperimentConfig& config) {
    if (!config.data_dir.empty()) return config.data_dir;
    const char* env = std::getenv("AFLSIM_DATA_DIR");
    return env ? env : "";
}

std::string find_idx_file(const std::string& dir, const std::string& stem) {
    for (const char* ext : {"", ".gz"}) {
        std::string path = dir + "/" + stem + ext;
        if (std::filesystem::exists(path)) return path;
    }
    throw IngestionError("dataset file not found: " + dir + "/" + stem +
                         "[.gz] (set AFLSIM_DATA_DIR / data.dir, or run with --synthetic)");
}

struct SimEvent {
    double time = 0.0;
    std::uint64_t seq = 0;  // unique push counter; breaks simultaneous completions
    int client_id = 0;
};

struct LaterEvent {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

} // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData data;

    if (config.source == DataSource::Synthetic) {
        data.train = synthetic_dataset(config.synthetic_train, kNumClasses,
                                       derive_seed(config.seed, "data.train"));
        data.test = synthetic_dataset(config.synthetic_test, kNumClasses,
                                      derive_seed(config.seed, "data.test"));
    } else {
        std::string dir = resolved_data_dir(config);
        if (dir.empty()) {
            throw IngestionError(
                "no dataset directory configured: set AFLSIM_DATA_DIR or data.dir, "
                "or run with --synthetic");
        }
        data.train = load_idx(find_idx_file(dir, "train-images-idx3-ubyte"),
                              find_idx_file(dir, "train-labels-idx1-ubyte"));
        data.test = load_idx(find_idx_file(dir, "t10k-images-idx3-ubyte"),
                             find_idx_file(dir, "t10k-labels-idx1-ubyte"));
    }

    data.train = subsample(data.train, config.subset, derive_seed(config.seed, "subset.train"));
    data.test = subsample(data.test, config.eval_subset, derive_seed(config.seed, "subset.test"));
    if (data.test.size() == 0) throw ConfigError("test set is empty");
    if (data.train.size() < config.num_clients) {
        throw ConfigError("cannot split " + std::to_string(data.train.size()) +
                          " training examples across " + std::to_string(config.num_clients) +
                          " clients");
    }

    std::vector<int> classes = config.classes_per_client;
    if (classes.size() == 1) classes.assign(config.num_clients, classes.front());
    switch (config.partition) {
        case PartitionMode::Iid:
            data.partition = partition_iid(data.train, config.num_clients, config.seed);
            break;
        case PartitionMode::Classes:
            if (classes.empty()) classes.assign(config.num_clients, kNumClasses);
            data.partition = partition_classes(data.train, config.num_clients, classes, config.seed);
            break;
        case PartitionMode::Dirichlet:
            data.partition =
                partition_dirichlet(data.train, config.num_clients, config.concentration, config.seed);
            break;
    }
    return data;
}

ExperimentConfig preset_config(const std::string& preset_id, ExperimentConfig base) {
    base.preset = preset_id;
    base.num_clients = 10;
    base.capabilities = reference_capabilities();
    base.classes_per_client.clear();
    if (preset_id == "1.1") {
        base.partition = PartitionMode::Iid;
    } else if (preset_id == "1.2") {
        base.partition = PartitionMode::Classes;
        base.classes_per_client = {10, 10, 10, 10, 10, 3, 3, 3, 3, 3};
    } else if (preset_id == "1.3") {
        base.partition = PartitionMode::Classes;
        base.classes_per_client = {3, 3, 3, 3, 3, 10, 10, 10, 10, 10};
    } else if (preset_id == "1.4") {
        base.partition = PartitionMode::Dirichlet;
    } else {
        throw ConfigError("unknown preset '" + preset_id + "' (expected 1.1, 1.2, 1.3, or 1.4)");
    }
    return base;
}

RunLog run_simulation(const ExperimentConfig& config, const PreparedData& data) {
    ExperimentConfig cfg = config;
    resolve_capabilities(cfg);
    ensure_valid(cfg);
    if (data.partition.num_clients() != cfg.num_clients) {
        throw ConfigError("partition covers " + std::to_string(data.partition.num_clients()) +
                          " clients, config says " + std::to_string(cfg.num_clients));
    }
    if (data.test.size() == 0) throw ConfigError("test set is empty");
    for (const auto& assigned : data.partition.assignments) {
        if (assigned.empty()) throw ConfigError("a client received an empty partition");
    }

    Network net = cfg.model == ModelKind::Mlp
                      ? Network::mlp(kFeatureDim, cfg.hidden, kNumClasses)
                      : Network::conv(kNumClasses);

    Rng init_rng(derive_seed(cfg.seed, "init"));
    ModelParameters x0 = net.init_params(init_rng);
    std::unique_ptr<AggregationStrategy> strategy =
        make_strategy(cfg.strategy, x0, strategy_config(cfg));

    std::vector<ClientState> clients(cfg.num_clients);
    std::vector<Rng> jitter;
    jitter.reserve(cfg.num_clients);
    for (std::size_t n = 0; n < cfg.num_clients; ++n) {
        clients[n].client_id = static_cast<int>(n);
        clients[n].capability = cfg.capabilities[n];
        clients[n].data_indices = data.partition.assignments[n];
        clients[n].base_model = x0;
        clients[n].base_timestamp = 0;
        clients[n].rng_seed = derive_seed(cfg.seed, "client", n);
        jitter.emplace_back(derive_seed(cfg.seed, "jitter", n));
    }

    std::priority_queue<SimEvent, std::vector<SimEvent>, LaterEvent> queue;
    std::uint64_t next_seq = 0;
    auto schedule = [&](int n, double now) {
        double d = training_duration(clients[n], cfg.training, cfg.base_cost);
        if (cfg.jitter_sigma > 0.0) d *= std::exp(cfg.jitter_sigma * jitter[n].normal());
        queue.push(SimEvent{now + d, next_seq++, n});
    };
    for (std::size_t n = 0; n < cfg.num_clients; ++n) schedule(static_cast<int>(n), 0.0);

    Batch test_batch = as_batch(data.test);

    RunLog log;
    log.strategy = cfg.strategy;
    log.preset = cfg.preset;
    log.seed = cfg.seed;
    log.metadata["version"] = kVersion;
    log.metadata["seed"] = cfg.seed;
    log.metadata["preset"] = cfg.preset;
    log.metadata["config"] = config_to_json(cfg);

    std::vector<int> idle;  // clients waiting for the next flush (fedbuff faithful mode)

    while (strategy->timestamp() < cfg.rounds) {
        if (queue.empty()) {
            throw SimulationError("event queue exhausted at t=" +
                                  std::to_string(strategy->timestamp()) + " of " +
                                  std::to_string(cfg.rounds));
        }
        SimEvent ev = queue.top();
        queue.pop();

        ClientState& st = clients[ev.client_id];
        ClientUpdate update = local_train(st, cfg.training, data.train, net);
        update.sim_completion_time = ev.time;

        ReceiveResult res = strategy->receive(update);
        const int t_after = strategy->timestamp();

        RunRecord rec;
        rec.t = t_after;
        rec.sim_time = ev.time;
        rec.client_id = ev.client_id;
        rec.staleness_raw = res.staleness_raw;
        rec.flushed = res.flushed;
        if (res.flushed || t_after % cfg.eval_every == 0) {
            EvalResult e = net.evaluate(strategy->global_model(), test_batch);
            rec.accuracy = e.accuracy;
            rec.loss = e.loss;
        }
        log.records.push_back(rec);

        if (strategy->uploader_idles_until_flush()) {
            idle.push_back(ev.client_id);
            if (res.flushed) {
                std::sort(idle.begin(), idle.end());
                for (int n : idle) {
                    clients[n].base_model = strategy->global_model();
                    clients[n].base_timestamp = t_after;
                    clients[n].rng_seed = derive_seed(clients[n].rng_seed, "round");
                    schedule(n, ev.time);
                }
                idle.clear();
            }
        } else {
            st.base_model = res.model_for_client;
            st.base_timestamp = t_after;
            st.rng_seed = derive_seed(st.rng_seed, "round");
            schedule(ev.client_id, ev.time);
        }
    }
    return log;
}

RunLog run_simulation(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    resolve_capabilities(cfg);
    ensure_valid(cfg);
    PreparedData data = prepare_data(cfg);
    return run_simulation(cfg, data);
}

} // namespace aflsim
