#include "aflsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <zlib.h>

#include "aflsim/errors.hpp"
#include "aflsim/rng.hpp"

namespace aflsim {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestionError("cannot open " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) {
        throw IngestionError("zlib init failed");
    }
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IngestionError("corrupt gzip stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw IngestionError("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> maybe_gunzip(std::vector<std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) {
        return gunzip(bytes);
    }
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const char* what) {
    if (off + 4 > b.size()) {
        throw IngestionError(std::string("truncated file while reading ") + what);
    }
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

} // namespace

Dataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes) {
    const std::uint32_t img_magic = read_be32(image_bytes, 0, "image magic");
    if (img_magic != kImageMagic) {
        throw IngestionError("bad image magic number (expected 0x00000803)");
    }
    const std::uint32_t lbl_magic = read_be32(label_bytes, 0, "label magic");
    if (lbl_magic != kLabelMagic) {
        throw IngestionError("bad label magic number (expected 0x00000801)");
    }
    const std::uint32_t n_images = read_be32(image_bytes, 4, "image count");
    const std::uint32_t rows = read_be32(image_bytes, 8, "image rows");
    const std::uint32_t cols = read_be32(image_bytes, 12, "image cols");
    const std::uint32_t n_labels = read_be32(label_bytes, 4, "label count");
    if (n_images != n_labels) {
        throw IngestionError("image count " + std::to_string(n_images) +
                             " does not match label count " + std::to_string(n_labels));
    }
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const std::size_t need_img = 16 + static_cast<std::size_t>(n_images) * pixels;
    if (image_bytes.size() < need_img) {
        throw IngestionError("truncated image file: have " +
                             std::to_string(image_bytes.size()) + " bytes, need " +
                             std::to_string(need_img));
    }
    if (label_bytes.size() < 8 + n_labels) {
        throw IngestionError("truncated label file");
    }

    Dataset out;
    out.images = Matrix(n_images, pixels);
    out.labels.resize(n_labels);
    const std::uint8_t* px = image_bytes.data() + 16;
    for (std::size_t i = 0; i < n_images; ++i) {
        double* row = out.images.row_ptr(i);
        for (std::size_t j = 0; j < pixels; ++j) {
            row[j] = static_cast<double>(px[i * pixels + j]) / 255.0;
        }
    }
    for (std::size_t i = 0; i < n_labels; ++i) {
        const int y = static_cast<int>(label_bytes[8 + i]);
        if (y < 0 || y >= kNumClasses) {
            throw IngestionError("label " + std::to_string(y) + " out of range [0,10) at index " +
                                 std::to_string(i));
        }
        out.labels[i] = y;
    }
    return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    auto img = maybe_gunzip(read_file(images_path));
    auto lbl = maybe_gunzip(read_file(labels_path));
    try {
        return parse_idx(img, lbl);
    } catch (const IngestionError& e) {
        throw IngestionError(std::string(e.what()) + " (" + images_path + ", " + labels_path +
                             ")");
    }
}

Dataset synthetic_dataset(std::size_t num_examples, int num_classes, std::uint64_t seed) {
    if (num_classes < 1 || num_examples < static_cast<std::size_t>(num_classes)) {
        throw ConfigError("synthetic_dataset: need num_examples >= num_classes >= 1");
    }
    Rng rng(derive_seed(seed, "synthetic"));

    // Per-class mean: a bright block of ~784/num_classes pixels on a dim
    // background. Block separation is large against the noise scale, so the
    // classes are linearly separable with margin.
    const std::size_t block = kFeatureDim / static_cast<std::size_t>(num_classes);
    const double bg = 0.10, fg = 0.85, noise = 0.06;

    Dataset out;
    out.images = Matrix(num_examples, kFeatureDim);
    out.labels.resize(num_examples);
    for (std::size_t i = 0; i < num_examples; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        out.labels[i] = label;
        double* row = out.images.row_ptr(i);
        const std::size_t lo = static_cast<std::size_t>(label) * block;
        const std::size_t hi = lo + block;
        for (std::size_t j = 0; j < kFeatureDim; ++j) {
            const double mean = (j >= lo && j < hi) ? fg : bg;
            row[j] = std::clamp(mean + noise * rng.normal(), 0.0, 1.0);
        }
    }
    return out;
}

Dataset subsample(const Dataset& data, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || cap >= data.size()) return data;
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "subset"));
    rng.shuffle(idx);
    idx.resize(cap);
    Dataset out;
    out.images = Matrix(cap, data.images.cols());
    out.labels.resize(cap);
    for (std::size_t i = 0; i < cap; ++i) {
        const double* src = data.images.row_ptr(idx[i]);
        std::copy(src, src + data.images.cols(), out.images.row_ptr(i));
        out.labels[i] = data.labels[idx[i]];
    }
    return out;
}

Batch gather(const Dataset& data, const std::vector<std::size_t>& indices) {
    Batch b;
    b.inputs = Matrix(indices.size(), data.images.cols());
    b.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = data.images.row_ptr(indices[i]);
        std::copy(src, src + data.images.cols(), b.inputs.row_ptr(i));
        b.labels[i] = data.labels[indices[i]];
    }
    return b;
}

Batch as_batch(const Dataset& data) {
    Batch b;
    b.inputs = data.images;
    b.labels = data.labels;
    return b;
}

} // namespace aflsim
