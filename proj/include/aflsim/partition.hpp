#ifndef AFLSIM_PARTITION_HPP
#define AFLSIM_PARTITION_HPP

#include <cstdint>
#include <vector>

#include "aflsim/dataset.hpp"

namespace aflsim {

// Per-client lists of example indices into a training Dataset. Lists are
// disjoint and every list is nonempty; class-restricted partitioning may
// leave some training examples unassigned (dropped_examples).
struct Partition {
    std::vector<std::vector<std::size_t>> assignments;
    std::size_t dropped_examples = 0;

    std::size_t num_clients() const { return assignments.size(); }
};

// Seeded shuffle, then near-equal contiguous chunks; the remainder is handed
// out one example per client from the front. Consumes every example.
Partition partition_iid(const Dataset& data, std::size_t num_clients, std::uint64_t seed);

// Client n draws classes_per_client[n] distinct classes (seeded); each class's
// examples are divided near-equally among the clients holding that class.
// Examples of a class held by no client are dropped (counted in the result).
Partition partition_classes(const Dataset& data, std::size_t num_clients,
                            const std::vector<int>& classes_per_client, std::uint64_t seed);

// For each class, a symmetric Dirichlet(concentration) draw over clients
// splits that class's examples. Empty clients are repaired by moving one
// example from the largest client.
Partition partition_dirichlet(const Dataset& data, std::size_t num_clients,
                              double concentration, std::uint64_t seed);

// Distinct labels held by each client (diagnostics and tests).
std::vector<int> classes_per_client_held(const Dataset& data, const Partition& p);

} // namespace aflsim

#endif
