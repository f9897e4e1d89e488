#include "aflsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "aflsim/errors.hpp"
#include "aflsim/rng.hpp"

namespace aflsim {

namespace {

void check_basic(const Dataset& data, std::size_t num_clients) {
    if (num_clients < 1) {
        throw ConfigError("partition: num_clients must be >= 1");
    }
    if (num_clients > data.size()) {
        throw ConfigError("partition: num_clients " + std::to_string(num_clients) +
                          " exceeds dataset size " + std::to_string(data.size()));
    }
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& data) {
    std::vector<std::vector<std::size_t>> by_class(kNumClasses);
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[data.labels[i]].push_back(i);
    }
    return by_class;
}

// Split `items` into `shares.size()` contiguous chunks with the given sizes.
void assign_chunks(const std::vector<std::size_t>& items, const std::vector<std::size_t>& shares,
                   const std::vector<std::size_t>& owners, Partition& p) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < shares.size(); ++k) {
        auto& dst = p.assignments[owners[k]];
        dst.insert(dst.end(), items.begin() + pos, items.begin() + pos + shares[k]);
        pos += shares[k];
    }
}

// Largest-remainder allocation of `total` items by proportions; ties broken
// by lower index so the result is deterministic.
std::vector<std::size_t> quota_counts(const std::vector<double>& proportions, std::size_t total) {
    const std::size_t n = proportions.size();
    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, std::size_t>> rema(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double quota = proportions[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        assigned += counts[i];
        rema[i] = {quota - std::floor(quota), i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
        counts[rema[k % n].second] += 1;
    }
    return counts;
}

// Move single examples from the largest clients until no client is empty.
void repair_empty(Partition& p) {
    for (;;) {
        std::size_t empty = p.num_clients();
        for (std::size_t i = 0; i < p.num_clients(); ++i) {
            if (p.assignments[i].empty()) {
                empty = i;
                break;
            }
        }
        if (empty == p.num_clients()) return;
        std::size_t donor = 0;
        for (std::size_t i = 1; i < p.num_clients(); ++i) {
            if (p.assignments[i].size() > p.assignments[donor].size()) donor = i;
        }
        if (p.assignments[donor].size() < 2) {
            throw ConfigError("partition: not enough examples to give every client one");
        }
        p.assignments[empty].push_back(p.assignments[donor].back());
        p.assignments[donor].pop_back();
    }
}

} // namespace

Partition partition_iid(const Dataset& data, std::size_t num_clients, std::uint64_t seed) {
    check_basic(data, num_clients);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "partition.iid"));
    rng.shuffle(idx);

    Partition p;
    p.assignments.resize(num_clients);
    const std::size_t base = data.size() / num_clients;
    const std::size_t extra = data.size() % num_clients;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < num_clients; ++c) {
        const std::size_t take = base + (c < extra ? 1 : 0);
        p.assignments[c].assign(idx.begin() + pos, idx.begin() + pos + take);
        pos += take;
    }
    return p;
}

Partition partition_classes(const Dataset& data, std::size_t num_clients,
                            const std::vector<int>& classes_per_client, std::uint64_t seed) {
    check_basic(data, num_clients);
    if (classes_per_client.size() != num_clients) {
        throw ConfigError("partition_classes: classes_per_client must have one entry per client");
    }
    for (int k : classes_per_client) {
        if (k < 1 || k > kNumClasses) {
            throw ConfigError("partition_classes: class counts must be in [1,10], got " +
                              std::to_string(k));
        }
    }
    Rng rng(derive_seed(seed, "partition.classes"));

    // Each client draws its class set.
    std::vector<std::set<int>> client_classes(num_clients);
    for (std::size_t c = 0; c < num_clients; ++c) {
        std::vector<int> classes(kNumClasses);
        std::iota(classes.begin(), classes.end(), 0);
        rng.shuffle(classes);
        client_classes[c].insert(classes.begin(),
                                 classes.begin() + classes_per_client[c]);
    }

    auto by_class = indices_by_class(data);
    Partition p;
    p.assignments.resize(num_clients);
    for (int cls = 0; cls < kNumClasses; ++cls) {
        auto& items = by_class[cls];
        if (items.empty()) continue;
        rng.shuffle(items);
        std::vector<std::size_t> owners;
        for (std::size_t c = 0; c < num_clients; ++c) {
            if (client_classes[c].count(cls)) owners.push_back(c);
        }
        if (owners.empty()) {
            // Class lives on no device; its examples sit out this run.
            p.dropped_examples += items.size();
            continue;
        }
        const std::size_t base = items.size() / owners.size();
        const std::size_t extra = items.size() % owners.size();
        std::vector<std::size_t> shares(owners.size());
        for (std::size_t k = 0; k < owners.size(); ++k) shares[k] = base + (k < extra ? 1 : 0);
        assign_chunks(items, shares, owners, p);
    }
    repair_empty(p);
    return p;
}

Partition partition_dirichlet(const Dataset& data, std::size_t num_clients, double concentration,
                              std::uint64_t seed) {
    check_basic(data, num_clients);
    if (!(concentration > 0.0)) {
        throw ConfigError("partition_dirichlet: concentration must be > 0");
    }
    Rng rng(derive_seed(seed, "partition.dirichlet"));

    auto by_class = indices_by_class(data);
    Partition p;
    p.assignments.resize(num_clients);
    std::vector<std::size_t> owners(num_clients);
    std::iota(owners.begin(), owners.end(), std::size_t{0});
    for (int cls = 0; cls < kNumClasses; ++cls) {
        auto& items = by_class[cls];
        if (items.empty()) continue;
        rng.shuffle(items);
        const std::vector<double> proportions = rng.dirichlet(concentration, num_clients);
        const std::vector<std::size_t> shares = quota_counts(proportions, items.size());
        assign_chunks(items, shares, owners, p);
    }
    repair_empty(p);
    return p;
}

std::vector<int> classes_per_client_held(const Dataset& data, const Partition& p) {
    std::vector<int> out(p.num_clients(), 0);
    for (std::size_t c = 0; c < p.num_clients(); ++c) {
        std::set<int> seen;
        for (std::size_t idx : p.assignments[c]) seen.insert(data.labels[idx]);
        out[c] = static_cast<int>(seen.size());
    }
    return out;
}

} // namespace aflsim
