#ifndef AFLSIM_DATASET_HPP
#define AFLSIM_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "aflsim/matrix.hpp"
#include "aflsim/model.hpp"

namespace aflsim {

constexpr int kNumClasses = 10;
constexpr std::size_t kFeatureDim = 784;

struct Dataset {
    Matrix images;            // N x 784, grayscale normalized to [0,1]
    std::vector<int> labels;  // N entries in [0, 10)

    std::size_t size() const { return labels.size(); }
};

// Parse an IDX image/label file pair. Plain and gzip-compressed files are
// both accepted; compression is sniffed from the 0x1F 0x8B header.
// Throws IngestionError on bad magic, truncation, or image/label count
// mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Parse from in-memory bytes (exposed for tests building fixtures).
Dataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes);

// Class-conditional Gaussian blobs in 784-dim space, linearly separable with
// margin. Labels are assigned round-robin (label_i = i mod num_classes) so
// class counts differ by at most one. Deterministic per seed.
Dataset synthetic_dataset(std::size_t num_examples, int num_classes, std::uint64_t seed);

// Deterministic seeded subsample without replacement; cap == 0 or
// cap >= dataset size returns the dataset unchanged.
Dataset subsample(const Dataset& data, std::size_t cap, std::uint64_t seed);

// Gather rows into a Batch.
Batch gather(const Dataset& data, const std::vector<std::size_t>& indices);

// The whole dataset as one Batch (evaluation path).
Batch as_batch(const Dataset& data);

} // namespace aflsim

#endif
