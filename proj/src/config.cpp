#include "aflsim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "aflsim/errors.hpp"

namespace aflsim {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    std::size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "off" || value == "no" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

} // namespace

const std::vector<double>& reference_capabilities() {
    static const std::vector<double> caps = {100, 95, 90, 85, 80, 25, 20, 15, 10, 5};
    return caps;
}

void resolve_capabilities(ExperimentConfig& config) {
    if (!config.capabilities.empty()) return;
    if (config.num_clients == 10) {
        config.capabilities = reference_capabilities();
    } else {
        config.capabilities.assign(config.num_clients, 1.0);
    }
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "data.source") {
        if (value == "idx") c.source = DataSource::Idx;
        else if (value == "synthetic") c.source = DataSource::Synthetic;
        else throw ConfigError("config key 'data.source': expected idx or synthetic, got '" + value + "'");
    } else if (key == "data.dir") {
        c.data_dir = value;
    } else if (key == "data.subset") {
        c.subset = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "data.eval_subset") {
        c.eval_subset = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "data.synthetic_train") {
        c.synthetic_train = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "data.synthetic_test") {
        c.synthetic_test = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "partition.mode") {
        if (value == "iid") c.partition = PartitionMode::Iid;
        else if (value == "classes") c.partition = PartitionMode::Classes;
        else if (value == "dirichlet") c.partition = PartitionMode::Dirichlet;
        else throw ConfigError("config key 'partition.mode': expected iid, classes, or dirichlet, got '" + value + "'");
    } else if (key == "partition.classes_per_client") {
        c.classes_per_client.clear();
        for (const std::string& item : split_list(value)) {
            c.classes_per_client.push_back(static_cast<int>(parse_int(key, item)));
        }
    } else if (key == "partition.concentration") {
        c.concentration = parse_real(key, value);
    } else if (key == "model.kind") {
        if (value == "mlp") c.model = ModelKind::Mlp;
        else if (value == "conv") c.model = ModelKind::Conv;
        else throw ConfigError("config key 'model.kind': expected mlp or conv, got '" + value + "'");
    } else if (key == "model.hidden") {
        c.hidden = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "train.eta") {
        c.training.eta = parse_real(key, value);
    } else if (key == "train.mu") {
        c.training.mu = parse_real(key, value);
    } else if (key == "train.epochs") {
        c.training.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.minibatch") {
        c.training.minibatch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "sim.clients") {
        c.num_clients = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "sim.rounds") {
        c.rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "sim.capabilities") {
        c.capabilities.clear();
        for (const std::string& item : split_list(value)) {
            c.capabilities.push_back(parse_real(key, item));
        }
    } else if (key == "sim.base_cost") {
        c.base_cost = parse_real(key, value);
    } else if (key == "sim.jitter_sigma") {
        c.jitter_sigma = parse_real(key, value);
    } else if (key == "sim.eval_every") {
        c.eval_every = static_cast<int>(parse_int(key, value));
    } else if (key == "sim.seed") {
        c.seed = parse_seed(key, value);
    } else if (key == "strategy.name") {
        c.strategy = value;
    } else if (key == "strategy.alpha") {
        c.alpha = parse_real(key, value);
    } else if (key == "strategy.alpha_mix") {
        c.alpha_mix = parse_real(key, value);
    } else if (key == "strategy.alpha_staleness") {
        c.alpha_staleness = parse_real(key, value);
    } else if (key == "strategy.buffer_target") {
        c.buffer_target = static_cast<int>(parse_int(key, value));
    } else if (key == "strategy.freq_window") {
        c.freq_window = value;
    } else if (key == "strategy.beta_mode") {
        c.beta_mode = value;
    } else if (key == "strategy.fedbuff_idle") {
        c.fedbuff_idle = parse_bool(key, value);
    } else if (key == "output.dir") {
        c.out_dir = value;
    } else if (key == "output.smoothing_window") {
        c.smoothing_window = static_cast<int>(parse_int(key, value));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!section.empty()) key = section + "." + key;
        try {
            apply_key(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };

    check(c.synthetic_train >= 1, "data.synthetic_train must be at least 1");
    check(c.synthetic_test >= 1, "data.synthetic_test must be at least 1");
    check(c.concentration > 0.0, "partition.concentration must be positive");
    check(c.hidden >= 1, "model.hidden must be at least 1");

    check(c.training.eta >= 0.0, "train.eta must be non-negative");
    check(c.training.mu >= 0.0, "train.mu must be non-negative");
    check(c.training.epochs >= 1, "train.epochs must be at least 1");
    check(c.training.minibatch_size >= 1, "train.minibatch must be at least 1");

    check(c.num_clients >= 1, "sim.clients must be at least 1");
    check(c.rounds >= 1, "sim.rounds must be at least 1");
    check(c.base_cost > 0.0, "sim.base_cost must be positive");
    check(c.jitter_sigma >= 0.0, "sim.jitter_sigma must be non-negative");
    check(c.eval_every >= 1, "sim.eval_every must be at least 1");

    if (!c.capabilities.empty()) {
        check(c.capabilities.size() == c.num_clients,
              "sim.capabilities must list one value per client (" +
                  std::to_string(c.capabilities.size()) + " given, " +
                  std::to_string(c.num_clients) + " clients)");
        for (double v : c.capabilities) {
            if (!(v > 0.0)) {
                bad.push_back("sim.capabilities entries must be positive");
                break;
            }
        }
    }

    if (!c.classes_per_client.empty()) {
        check(c.classes_per_client.size() == 1 || c.classes_per_client.size() == c.num_clients,
              "partition.classes_per_client must list one value or one per client");
        for (int v : c.classes_per_client) {
            if (v < 1 || v > kNumClasses) {
                bad.push_back("partition.classes_per_client entries must lie in [1," +
                              std::to_string(kNumClasses) + "]");
                break;
            }
        }
    }

    check(c.strategy == "dynamic_buffered" || c.strategy == "fedasync" || c.strategy == "fedbuff",
          "strategy.name must be dynamic_buffered, fedasync, or fedbuff (got '" + c.strategy + "')");
    check(c.alpha > 0.0 && c.alpha < 1.0, "alpha must lie in (0,1)");
    if (c.alpha_mix >= 0.0) {
        check(c.alpha_mix > 0.0 && c.alpha_mix < 1.0, "strategy.alpha_mix must lie in (0,1)");
    }
    if (c.alpha_staleness >= 0.0) {
        check(c.alpha_staleness > 0.0 && c.alpha_staleness < 1.0,
              "strategy.alpha_staleness must lie in (0,1)");
    }
    check(c.buffer_target >= 1, "strategy.buffer_target must be at least 1");
    check(c.freq_window == "buffer" || c.freq_window == "lifetime",
          "strategy.freq_window must be buffer or lifetime (got '" + c.freq_window + "')");
    check(c.beta_mode == "live" || c.beta_mode == "receipt",
          "strategy.beta_mode must be live or receipt (got '" + c.beta_mode + "')");
    check(c.smoothing_window >= 0, "output.smoothing_window must be non-negative");

    return bad;
}

void ensure_valid(const ExperimentConfig& config) {
    std::vector<std::string> bad = validate(config);
    if (bad.empty()) return;
    std::string msg = "invalid configuration:";
    for (const std::string& b : bad) msg += "\n  - " + b;
    throw ConfigError(msg);
}

StrategyConfig strategy_config(const ExperimentConfig& c) {
    StrategyConfig s;
    s.alpha_mix = c.alpha_mix >= 0.0 ? c.alpha_mix : c.alpha;
    s.alpha_staleness = c.alpha_staleness >= 0.0 ? c.alpha_staleness : c.alpha;
    s.buffer_target = c.buffer_target;
    s.beta_mode = c.beta_mode == "receipt" ? BetaMode::ReceiptAccumulate : BetaMode::LiveRenormalize;
    s.freq_window = c.freq_window == "lifetime" ? FreqWindow::Lifetime : FreqWindow::Buffer;
    s.fedbuff_idle = c.fedbuff_idle;
    return s;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["data"]["source"] = c.source == DataSource::Idx ? "idx" : "synthetic";
    j["data"]["dir"] = c.data_dir;
    j["data"]["subset"] = c.subset;
    j["data"]["eval_subset"] = c.eval_subset;
    j["data"]["synthetic_train"] = c.synthetic_train;
    j["data"]["synthetic_test"] = c.synthetic_test;
    switch (c.partition) {
        case PartitionMode::Iid: j["partition"]["mode"] = "iid"; break;
        case PartitionMode::Classes: j["partition"]["mode"] = "classes"; break;
        case PartitionMode::Dirichlet: j["partition"]["mode"] = "dirichlet"; break;
    }
    j["partition"]["classes_per_client"] = c.classes_per_client;
    j["partition"]["concentration"] = c.concentration;
    j["model"]["kind"] = c.model == ModelKind::Mlp ? "mlp" : "conv";
    j["model"]["hidden"] = c.hidden;
    j["train"]["eta"] = c.training.eta;
    j["train"]["mu"] = c.training.mu;
    j["train"]["epochs"] = c.training.epochs;
    j["train"]["minibatch"] = c.training.minibatch_size;
    j["sim"]["clients"] = c.num_clients;
    j["sim"]["rounds"] = c.rounds;
    j["sim"]["capabilities"] = c.capabilities;
    j["sim"]["base_cost"] = c.base_cost;
    j["sim"]["jitter_sigma"] = c.jitter_sigma;
    j["sim"]["eval_every"] = c.eval_every;
    j["sim"]["seed"] = c.seed;
    j["strategy"]["name"] = c.strategy;
    j["strategy"]["alpha"] = c.alpha;
    j["strategy"]["alpha_mix"] = c.alpha_mix;
    j["strategy"]["alpha_staleness"] = c.alpha_staleness;
    j["strategy"]["buffer_target"] = c.buffer_target;
    j["strategy"]["freq_window"] = c.freq_window;
    j["strategy"]["beta_mode"] = c.beta_mode;
    j["strategy"]["fedbuff_idle"] = c.fedbuff_idle;
    j["output"]["dir"] = c.out_dir;
    j["output"]["smoothing_window"] = c.smoothing_window;
    j["preset"] = c.preset;
    return j;
}

} // namespace aflsim
