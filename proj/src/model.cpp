#include "aflsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aflsim/errors.hpp"

namespace aflsim {

bool same_layout(const Layout& a, const Layout& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name || a[i].shape != b[i].shape) return false;
    }
    return true;
}

void check_finite(const std::vector<double>& values, const std::string& where) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw SimulationError("non-finite model values after " + where);
        }
    }
}

ModelParameters sgd_step(const ModelParameters& model, const Gradient& grad, double eta) {
    if (model.values.size() != grad.values.size() ||
        !(model.layout == grad.layout || same_layout(*model.layout, *grad.layout))) {
        throw std::logic_error("sgd_step: model/gradient layout mismatch");
    }
    ModelParameters out;
    out.layout = model.layout;
    out.values.resize(model.values.size());
    for (std::size_t i = 0; i < model.values.size(); ++i) {
        out.values[i] = model.values[i] - eta * grad.values[i];
    }
    check_finite(out.values, "sgd_step");
    return out;
}

double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                             Matrix* dlogits) {
    const std::size_t n = logits.rows();
    const std::size_t c = logits.cols();
    if (dlogits) *dlogits = Matrix(n, c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* z = logits.row_ptr(i);
        double zmax = z[0];
        for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
        const int y = labels[i];
        total += std::log(sum) - (z[y] - zmax);
        if (dlogits) {
            double* d = dlogits->row_ptr(i);
            for (std::size_t j = 0; j < c; ++j) {
                d[j] = std::exp(z[j] - zmax) / sum;
            }
            d[y] -= 1.0;
            for (std::size_t j = 0; j < c; ++j) d[j] /= static_cast<double>(n);
        }
    }
    return total / static_cast<double>(n);
}

Network::Network(Kind kind, std::string name, std::size_t input_dim, std::size_t num_classes)
    : kind_(kind), name_(std::move(name)), input_dim_(input_dim), num_classes_(num_classes) {}

Network Network::mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes) {
    Network net(Kind::Mlp, "mlp", input_dim, num_classes);
    net.hidden_dim_ = hidden_dim;
    auto layout = std::make_shared<Layout>(Layout{
        {"w1", {input_dim, hidden_dim}},
        {"b1", {hidden_dim}},
        {"w2", {hidden_dim, num_classes}},
        {"b2", {num_classes}},
    });
    net.layout_ = layout;
    std::size_t off = 0;
    for (const auto& t : *layout) {
        net.offsets_.push_back(off);
        off += t.size();
    }
    return net;
}

namespace {
// Conv geometry is fixed: 28x28 grayscale in, 8 filters of 3x3, valid
// padding, ReLU, then 2x2 max pool with stride 2.
constexpr std::size_t kImg = 28;
constexpr std::size_t kFilters = 8;
constexpr std::size_t kKernel = 3;
constexpr std::size_t kConvOut = kImg - kKernel + 1;  // 26
constexpr std::size_t kPoolOut = kConvOut / 2;        // 13
constexpr std::size_t kFlat = kFilters * kPoolOut * kPoolOut;
} // namespace

Network Network::conv(std::size_t num_classes) {
    Network net(Kind::Conv, "conv", kImg * kImg, num_classes);
    auto layout = std::make_shared<Layout>(Layout{
        {"conv_w", {kFilters, kKernel, kKernel}},
        {"conv_b", {kFilters}},
        {"fc_w", {kFlat, num_classes}},
        {"fc_b", {num_classes}},
    });
    net.layout_ = layout;
    std::size_t off = 0;
    for (const auto& t : *layout) {
        net.offsets_.push_back(off);
        off += t.size();
    }
    return net;
}

ModelParameters Network::zeros() const {
    return ModelParameters{std::vector<double>(num_params(), 0.0), layout_};
}

ModelParameters Network::init_params(Rng& rng) const {
    ModelParameters p = zeros();
    for (std::size_t t = 0; t < layout_->size(); ++t) {
        const TensorSpec& spec = (*layout_)[t];
        if (spec.shape.size() < 2) continue;  // biases stay zero
        std::size_t fan_in, fan_out;
        if (spec.shape.size() == 2) {
            fan_in = spec.shape[0];
            fan_out = spec.shape[1];
        } else {
            // conv kernel [filters, kh, kw] on a single input channel
            fan_in = spec.shape[1] * spec.shape[2];
            fan_out = spec.shape[0] * spec.shape[1] * spec.shape[2];
        }
        const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        double* v = p.values.data() + offsets_[t];
        for (std::size_t i = 0; i < spec.size(); ++i) v[i] = rng.uniform(-r, r);
    }
    return p;
}

void Network::check_batch(const ModelParameters& model, const Batch& batch) const {
    if (batch.inputs.cols() != input_dim_) {
        throw ConfigError("batch feature dim " + std::to_string(batch.inputs.cols()) +
                          " does not match model input dim " + std::to_string(input_dim_));
    }
    if (batch.inputs.rows() != batch.labels.size()) {
        throw ConfigError("batch rows/labels mismatch");
    }
    if (model.values.size() != num_params()) {
        throw ConfigError("model parameter count does not match network layout");
    }
}

Matrix Network::logits_mlp(const ModelParameters& model, const Matrix& inputs,
                           Matrix* hidden_pre, Matrix* hidden_act) const {
    const std::size_t n = inputs.rows();
    const double* w1 = model.values.data() + offsets_[0];
    const double* b1 = model.values.data() + offsets_[1];
    const double* w2 = model.values.data() + offsets_[2];
    const double* b2 = model.values.data() + offsets_[3];

    Matrix z1(n, hidden_dim_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = inputs.row_ptr(i);
        double* zi = z1.row_ptr(i);
        for (std::size_t j = 0; j < hidden_dim_; ++j) zi[j] = b1[j];
        for (std::size_t p = 0; p < input_dim_; ++p) {
            const double xp = x[p];
            if (xp == 0.0) continue;
            const double* wp = w1 + p * hidden_dim_;
            for (std::size_t j = 0; j < hidden_dim_; ++j) zi[j] += xp * wp[j];
        }
    }
    Matrix a1 = z1;
    for (double& v : a1.data()) v = std::max(0.0, v);

    Matrix logits(n, num_classes_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a1.row_ptr(i);
        double* li = logits.row_ptr(i);
        for (std::size_t j = 0; j < num_classes_; ++j) li[j] = b2[j];
        for (std::size_t p = 0; p < hidden_dim_; ++p) {
            const double ap = ai[p];
            if (ap == 0.0) continue;
            const double* wp = w2 + p * num_classes_;
            for (std::size_t j = 0; j < num_classes_; ++j) li[j] += ap * wp[j];
        }
    }
    if (hidden_pre) *hidden_pre = std::move(z1);
    if (hidden_act) *hidden_act = std::move(a1);
    return logits;
}

Matrix Network::logits_conv(const ModelParameters& model, const Matrix& inputs,
                            std::vector<double>* conv_pre, std::vector<double>* pooled,
                            std::vector<int>* pool_src) const {
    const std::size_t n = inputs.rows();
    const double* cw = model.values.data() + offsets_[0];
    const double* cb = model.values.data() + offsets_[1];
    const double* fw = model.values.data() + offsets_[2];
    const double* fb = model.values.data() + offsets_[3];

    const std::size_t conv_size = kFilters * kConvOut * kConvOut;
    if (conv_pre) conv_pre->assign(n * conv_size, 0.0);
    if (pooled) pooled->assign(n * kFlat, 0.0);
    if (pool_src) pool_src->assign(n * kFlat, -1);

    Matrix logits(n, num_classes_, 0.0);
    std::vector<double> pre(conv_size), pool(kFlat);
    for (std::size_t s = 0; s < n; ++s) {
        const double* img = inputs.row_ptr(s);
        for (std::size_t f = 0; f < kFilters; ++f) {
            const double* k = cw + f * kKernel * kKernel;
            for (std::size_t i = 0; i < kConvOut; ++i) {
                for (std::size_t j = 0; j < kConvOut; ++j) {
                    double acc = cb[f];
                    for (std::size_t ki = 0; ki < kKernel; ++ki) {
                        const double* row = img + (i + ki) * kImg + j;
                        const double* kr = k + ki * kKernel;
                        acc += row[0] * kr[0] + row[1] * kr[1] + row[2] * kr[2];
                    }
                    pre[(f * kConvOut + i) * kConvOut + j] = acc;
                }
            }
        }
        if (conv_pre) {
            std::copy(pre.begin(), pre.end(), conv_pre->begin() + s * conv_size);
        }
        // ReLU then 2x2 max pool; ties keep the first (row-major) element so
        // evaluation is deterministic.
        for (std::size_t f = 0; f < kFilters; ++f) {
            for (std::size_t i = 0; i < kPoolOut; ++i) {
                for (std::size_t j = 0; j < kPoolOut; ++j) {
                    double best = -1.0;
                    int best_idx = -1;
                    for (std::size_t di = 0; di < 2; ++di) {
                        for (std::size_t dj = 0; dj < 2; ++dj) {
                            const std::size_t ci = 2 * i + di, cj = 2 * j + dj;
                            const std::size_t idx = (f * kConvOut + ci) * kConvOut + cj;
                            const double v = std::max(0.0, pre[idx]);
                            if (v > best) {
                                best = v;
                                best_idx = static_cast<int>(idx);
                            }
                        }
                    }
                    const std::size_t pidx = (f * kPoolOut + i) * kPoolOut + j;
                    pool[pidx] = best;
                    if (pool_src) (*pool_src)[s * kFlat + pidx] = best_idx;
                }
            }
        }
        if (pooled) {
            std::copy(pool.begin(), pool.end(), pooled->begin() + s * kFlat);
        }
        double* li = logits.row_ptr(s);
        for (std::size_t j = 0; j < num_classes_; ++j) li[j] = fb[j];
        for (std::size_t p = 0; p < kFlat; ++p) {
            const double pv = pool[p];
            if (pv == 0.0) continue;
            const double* wp = fw + p * num_classes_;
            for (std::size_t j = 0; j < num_classes_; ++j) li[j] += pv * wp[j];
        }
    }
    return logits;
}

Matrix Network::compute_logits(const ModelParameters& model, const Matrix& inputs) const {
    if (kind_ == Kind::Mlp) return logits_mlp(model, inputs, nullptr, nullptr);
    return logits_conv(model, inputs, nullptr, nullptr, nullptr);
}

ForwardResult Network::forward(const ModelParameters& model, const Batch& batch) const {
    check_batch(model, batch);
    ForwardResult res;
    res.logits = compute_logits(model, batch.inputs);
    res.loss = softmax_cross_entropy(res.logits, batch.labels, nullptr);
    return res;
}

double Network::training_loss(const ModelParameters& model, const Batch& batch, double mu,
                              const ModelParameters* anchor) const {
    double loss = forward(model, batch).loss;
    if (mu != 0.0 && anchor != nullptr) {
        double sq = 0.0;
        for (std::size_t i = 0; i < model.values.size(); ++i) {
            const double d = model.values[i] - anchor->values[i];
            sq += d * d;
        }
        loss += 0.5 * mu * sq;
    }
    return loss;
}

Gradient Network::backward(const ModelParameters& model, const Batch& batch, double mu,
                           const ModelParameters* anchor) const {
    check_batch(model, batch);
    Gradient grad{std::vector<double>(num_params(), 0.0), layout_};
    const std::size_t n = batch.inputs.rows();

    if (kind_ == Kind::Mlp) {
        Matrix z1, a1;
        Matrix logits = logits_mlp(model, batch.inputs, &z1, &a1);
        Matrix dlogits;
        softmax_cross_entropy(logits, batch.labels, &dlogits);

        const double* w2 = model.values.data() + offsets_[2];
        double* gw1 = grad.values.data() + offsets_[0];
        double* gb1 = grad.values.data() + offsets_[1];
        double* gw2 = grad.values.data() + offsets_[2];
        double* gb2 = grad.values.data() + offsets_[3];

        // dW2 = A1^T dZ2, db2 = colsum(dZ2)
        for (std::size_t i = 0; i < n; ++i) {
            const double* ai = a1.row_ptr(i);
            const double* di = dlogits.row_ptr(i);
            for (std::size_t j = 0; j < num_classes_; ++j) gb2[j] += di[j];
            for (std::size_t p = 0; p < hidden_dim_; ++p) {
                const double ap = ai[p];
                if (ap == 0.0) continue;
                double* gp = gw2 + p * num_classes_;
                for (std::size_t j = 0; j < num_classes_; ++j) gp[j] += ap * di[j];
            }
        }
        // dZ1 = (dZ2 W2^T) o relu'(Z1); dW1 = X^T dZ1, db1 = colsum(dZ1)
        for (std::size_t i = 0; i < n; ++i) {
            const double* di = dlogits.row_ptr(i);
            const double* zi = z1.row_ptr(i);
            const double* xi = batch.inputs.row_ptr(i);
            std::vector<double> dz1(hidden_dim_, 0.0);
            for (std::size_t p = 0; p < hidden_dim_; ++p) {
                if (zi[p] <= 0.0) continue;
                const double* wp = w2 + p * num_classes_;
                double acc = 0.0;
                for (std::size_t j = 0; j < num_classes_; ++j) acc += di[j] * wp[j];
                dz1[p] = acc;
            }
            for (std::size_t p = 0; p < hidden_dim_; ++p) gb1[p] += dz1[p];
            for (std::size_t q = 0; q < input_dim_; ++q) {
                const double xq = xi[q];
                if (xq == 0.0) continue;
                double* gq = gw1 + q * hidden_dim_;
                for (std::size_t p = 0; p < hidden_dim_; ++p) gq[p] += xq * dz1[p];
            }
        }
    } else {
        std::vector<double> conv_pre, pooled;
        std::vector<int> pool_src;
        Matrix logits = logits_conv(model, batch.inputs, &conv_pre, &pooled, &pool_src);
        Matrix dlogits;
        softmax_cross_entropy(logits, batch.labels, &dlogits);

        const double* fw = model.values.data() + offsets_[2];
        double* gcw = grad.values.data() + offsets_[0];
        double* gcb = grad.values.data() + offsets_[1];
        double* gfw = grad.values.data() + offsets_[2];
        double* gfb = grad.values.data() + offsets_[3];

        const std::size_t conv_size = kFilters * kConvOut * kConvOut;
        for (std::size_t s = 0; s < n; ++s) {
            const double* di = dlogits.row_ptr(s);
            const double* pool = pooled.data() + s * kFlat;
            const int* src = pool_src.data() + s * kFlat;
            const double* pre = conv_pre.data() + s * conv_size;
            const double* img = batch.inputs.row_ptr(s);

            for (std::size_t j = 0; j < num_classes_; ++j) gfb[j] += di[j];
            for (std::size_t p = 0; p < kFlat; ++p) {
                const double pv = pool[p];
                if (pv != 0.0) {
                    double* gp = gfw + p * num_classes_;
                    for (std::size_t j = 0; j < num_classes_; ++j) gp[j] += pv * di[j];
                }
                // Route the pooled gradient back through the selected conv cell.
                const double* wp = fw + p * num_classes_;
                double dpool = 0.0;
                for (std::size_t j = 0; j < num_classes_; ++j) dpool += wp[j] * di[j];
                const int ci = src[p];
                if (ci < 0 || pre[ci] <= 0.0) continue;  // ReLU gate
                const std::size_t f = static_cast<std::size_t>(ci) / (kConvOut * kConvOut);
                const std::size_t rem = static_cast<std::size_t>(ci) % (kConvOut * kConvOut);
                const std::size_t oi = rem / kConvOut, oj = rem % kConvOut;
                gcb[f] += dpool;
                double* gk = gcw + f * kKernel * kKernel;
                for (std::size_t ki = 0; ki < kKernel; ++ki) {
                    const double* row = img + (oi + ki) * kImg + oj;
                    double* gkr = gk + ki * kKernel;
                    gkr[0] += dpool * row[0];
                    gkr[1] += dpool * row[1];
                    gkr[2] += dpool * row[2];
                }
            }
        }
    }

    if (mu != 0.0 && anchor != nullptr) {
        for (std::size_t i = 0; i < grad.values.size(); ++i) {
            grad.values[i] += mu * (model.values[i] - anchor->values[i]);
        }
    }
    return grad;
}

EvalResult Network::evaluate(const ModelParameters& model, const Batch& test_set) const {
    if (test_set.labels.empty()) {
        throw ConfigError("evaluate: empty test set");
    }
    check_batch(model, test_set);
    const std::size_t n = test_set.inputs.rows();
    const std::size_t chunk = 1024;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t len = std::min(chunk, n - start);
        Matrix part(len, input_dim_);
        for (std::size_t i = 0; i < len; ++i) {
            const double* src = test_set.inputs.row_ptr(start + i);
            std::copy(src, src + input_dim_, part.row_ptr(i));
        }
        Matrix logits = compute_logits(model, part);
        for (std::size_t i = 0; i < len; ++i) {
            const double* z = logits.row_ptr(i);
            std::size_t arg = 0;
            for (std::size_t j = 1; j < num_classes_; ++j) {
                if (z[j] > z[arg]) arg = j;  // lowest index wins ties
            }
            const int y = test_set.labels[start + i];
            if (static_cast<int>(arg) == y) ++correct;
            double zmax = z[0];
            for (std::size_t j = 1; j < num_classes_; ++j) zmax = std::max(zmax, z[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < num_classes_; ++j) sum += std::exp(z[j] - zmax);
            loss_sum += std::log(sum) - (z[y] - zmax);
        }
    }
    EvalResult res;
    res.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    res.loss = loss_sum / static_cast<double>(n);
    return res;
}

} // namespace aflsim
