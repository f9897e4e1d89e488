#ifndef AFLSIM_MODEL_HPP
#define AFLSIM_MODEL_HPP

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "aflsim/matrix.hpp"
#include "aflsim/rng.hpp"

namespace aflsim {

struct TensorSpec {
    std::string name;
    std::vector<std::size_t> shape;

    std::size_t size() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
};

using Layout = std::vector<TensorSpec>;

inline std::size_t layout_size(const Layout& layout) {
    std::size_t n = 0;
    for (const auto& t : layout) n += t.size();
    return n;
}

// Flat vector of every trainable weight and bias, in layout order.
struct ModelParameters {
    std::vector<double> values;
    std::shared_ptr<const Layout> layout;
};

// Same flat shape as the ModelParameters it was computed from.
struct Gradient {
    std::vector<double> values;
    std::shared_ptr<const Layout> layout;
};

struct Batch {
    Matrix inputs;            // batch_size x feature_dim, values in [0,1]
    std::vector<int> labels;  // class indices in [0, num_classes)
};

struct ForwardResult {
    double loss = 0.0;  // mean cross-entropy over the batch
    Matrix logits;      // batch_size x num_classes
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

bool same_layout(const Layout& a, const Layout& b);

// result = model - eta * grad, elementwise. Throws std::logic_error on a
// layout mismatch and SimulationError if the result is not finite.
ModelParameters sgd_step(const ModelParameters& model, const Gradient& grad, double eta);

// Throws SimulationError naming `where` if any entry is NaN/Inf.
void check_finite(const std::vector<double>& values, const std::string& where);

// A small feed-forward classifier with analytic gradients. Two variants
// behind the same flat-parameter abstraction: an MLP (default) and a single
// conv layer + max pool + dense head.
class Network {
public:
    static Network mlp(std::size_t input_dim = 784, std::size_t hidden_dim = 64,
                       std::size_t num_classes = 10);
    // 28x28 input, 8 3x3 valid-convolution filters, ReLU, 2x2 max pool, dense head.
    static Network conv(std::size_t num_classes = 10);

    const Layout& layout() const { return *layout_; }
    std::shared_ptr<const Layout> layout_ptr() const { return layout_; }
    std::size_t num_params() const { return layout_size(*layout_); }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t num_classes() const { return num_classes_; }
    const std::string& name() const { return name_; }

    ModelParameters zeros() const;
    // Glorot-uniform weights in [-r, r] with r = sqrt(6 / (fan_in + fan_out)),
    // zero biases; draws taken from `rng` in layout order.
    ModelParameters init_params(Rng& rng) const;

    ForwardResult forward(const ModelParameters& model, const Batch& batch) const;

    // Cross-entropy plus (mu/2)*||x - anchor||^2 when mu != 0. This is the
    // scalar function backward() differentiates.
    double training_loss(const ModelParameters& model, const Batch& batch,
                         double mu = 0.0, const ModelParameters* anchor = nullptr) const;

    // Analytic gradient of training_loss. With mu == 0 the proximal path is
    // skipped entirely, so the result is bit-equal to the plain CE gradient.
    Gradient backward(const ModelParameters& model, const Batch& batch,
                      double mu = 0.0, const ModelParameters* anchor = nullptr) const;

    // Accuracy by argmax with lowest-index tie-break, plus mean CE loss.
    EvalResult evaluate(const ModelParameters& model, const Batch& test_set) const;

private:
    enum class Kind { Mlp, Conv };

    Network(Kind kind, std::string name, std::size_t input_dim, std::size_t num_classes);

    void check_batch(const ModelParameters& model, const Batch& batch) const;

    Matrix logits_mlp(const ModelParameters& model, const Matrix& inputs, Matrix* hidden_pre,
                      Matrix* hidden_act) const;
    Matrix logits_conv(const ModelParameters& model, const Matrix& inputs,
                       std::vector<double>* conv_pre, std::vector<double>* pooled,
                       std::vector<int>* pool_src) const;
    Matrix compute_logits(const ModelParameters& model, const Matrix& inputs) const;

    Kind kind_;
    std::string name_;
    std::size_t input_dim_;
    std::size_t num_classes_;
    std::size_t hidden_dim_ = 0;  // MLP only
    std::shared_ptr<const Layout> layout_;
    std::vector<std::size_t> offsets_;  // start of each layout tensor in values
};

// Softmax cross-entropy over pre-computed logits; shared by forward and the
// test oracles' reference path lives separately in the test tree.
double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                             Matrix* dlogits = nullptr);

} // namespace aflsim

#endif
