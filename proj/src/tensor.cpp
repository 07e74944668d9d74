#include "rfp/tensor.hpp"

#include "rfp/fastmath.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace rfp {

namespace {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw dim_error("negative dimension in shape");
        n *= static_cast<size_t>(d);
    }
    return n;
}

std::string fmt_shape(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw dim_error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
}

}  // namespace

// ---- Tensor ------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto n = std::make_shared<detail::TensorNode>();
    n->value.assign(shape_numel(shape), 0.0f);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(std::vector<int> shape, float fill, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (float& v : t.values()) v = fill;
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<float> values,
                           bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw dim_error("from_values: " + fmt_shape(shape) + " does not hold " +
                        std::to_string(values.size()) + " values");
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(float v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

float Tensor::item() const {
    if (numel() != 1) throw dim_error("item: tensor " + shape_str() + " is not a scalar");
    return n_->value[0];
}

void Tensor::set_requires_grad(bool rg) {
    n_->requires_grad = rg;
    if (!rg) n_->grad.clear();
}

void Tensor::ensure_grad() {
    if (n_->grad.empty()) n_->grad.assign(n_->value.size(), 0.0f);
}

void Tensor::zero_grad() {
    if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const {
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = n_->shape;
    n->value = n_->value;
    return Tensor(std::move(n));
}

bool Tensor::all_finite() const {
    for (float v : n_->value)
        if (!std::isfinite(v)) return false;
    return true;
}

uint64_t Tensor::checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(n_->value.data());
    const size_t nb = n_->value.size() * sizeof(float);
    for (size_t i = 0; i < nb; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string Tensor::shape_str() const { return fmt_shape(n_->shape); }

// ---- Tape ---------------------------------------------------------------

void Tape::backward(Tensor& loss, float seed) {
    if (loss.numel() != 1)
        throw dim_error("backward: loss must be scalar, got " + loss.shape_str());
    loss.ensure_grad();
    loss.grad()[0] += seed;
    for (size_t i = steps_.size(); i-- > 0;) steps_[i]();
}

// ---- kernels --------------------------------------------------------------

void mm_acc_nn(const float* __restrict a, const float* __restrict b, float* __restrict c, int m,
               int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* __restrict ar = a + static_cast<size_t>(i) * k;
        float* __restrict cr = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float av = ar[p];
            const float* __restrict br = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void mm_acc_nt(const float* __restrict a, const float* __restrict b, float* __restrict c, int m,
               int k, int n) {
    constexpr int kLanes = 16;
    for (int i = 0; i < m; ++i) {
        const float* __restrict ar = a + static_cast<size_t>(i) * k;
        float* __restrict cr = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* __restrict br = b + static_cast<size_t>(j) * k;
            float lanes[kLanes] = {};
            int p = 0;
            for (; p + kLanes <= k; p += kLanes)
                for (int l = 0; l < kLanes; ++l) lanes[l] += ar[p + l] * br[p + l];
            float tail = 0.0f;
            for (; p < k; ++p) tail += ar[p] * br[p];
            float sum = 0.0f;
            for (int l = 0; l < kLanes; ++l) sum += lanes[l];
            cr[j] += sum + tail;
        }
    }
}

void mm_acc_tn(const float* __restrict a, const float* __restrict b, float* __restrict c, int m,
               int k, int n) {
    for (int i = 0; i < m; ++i) {
        float* __restrict cr = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float av = a[static_cast<size_t>(p) * m + i];
            const float* __restrict br = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

// ---- ops ------------------------------------------------------------------

namespace {

// dX = g . W^T via a transposed copy of W, so the heavy loop streams rows
// instead of gathering column dots (the nt kernel is ~2x slower here).
void mm_acc_nt_via_transpose(const float* g, const float* w, float* xg, int m, int n, int k) {
    std::vector<float> wt(static_cast<size_t>(n) * k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < n; ++c)
            wt[static_cast<size_t>(c) * k + r] = w[static_cast<size_t>(r) * n + c];
    mm_acc_nn(g, wt.data(), xg, m, n, k);
}

// Common bookkeeping: marks the output, allocates grad buffers for the
// tensors that participate in backward, and tells the caller whether a
// closure needs to be recorded at all.
bool track_op(Tape& tape, Tensor& out, std::initializer_list<const Tensor*> inputs) {
    bool any = false;
    for (const Tensor* t : inputs) any = any || t->requires_grad();
    if (!tape.recording() || !any) return false;
    out.set_requires_grad(true);
    out.ensure_grad();
    for (const Tensor* t : inputs)
        if (t->requires_grad()) const_cast<Tensor*>(t)->ensure_grad();
    return true;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw dim_error("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    mm_acc_nn(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (track_op(tape, out, {&a, &b})) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, m, k, n] {
            const float* g = on->grad.data();
            if (an->requires_grad)
                mm_acc_nt_via_transpose(g, bn->value.data(), an->grad.data(), m, n, k);
            if (bn->requires_grad) mm_acc_tn(an->value.data(), g, bn->grad.data(), k, m, n);
        });
    }
    return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        throw dim_error("matmul_nt: incompatible shapes " + a.shape_str() + " x " +
                        b.shape_str() + "^T");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = Tensor::zeros({m, n});
    mm_acc_nt(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (track_op(tape, out, {&a, &b})) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, m, k, n] {
            const float* g = on->grad.data();
            if (an->requires_grad) mm_acc_nn(g, bn->value.data(), an->grad.data(), m, n, k);
            if (bn->requires_grad) mm_acc_tn(g, an->value.data(), bn->grad.data(), n, m, k);
        });
    }
    return out;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.rows() ||
        b.numel() != static_cast<size_t>(w.cols()))
        throw dim_error("linear: incompatible shapes " + x.shape_str() + " x " + w.shape_str() +
                        " + " + b.shape_str());
    const int m = x.rows(), k = x.cols(), n = w.cols();
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i)
        std::memcpy(out.values().data() + static_cast<size_t>(i) * n, b.values().data(),
                    static_cast<size_t>(n) * sizeof(float));
    mm_acc_nn(x.values().data(), w.values().data(), out.values().data(), m, k, n);
    if (track_op(tape, out, {&x, &w, &b})) {
        auto xn = x.node(), wn = w.node(), bn = b.node(), on = out.node();
        tape.record([xn, wn, bn, on, m, k, n] {
            const float* g = on->grad.data();
            if (xn->requires_grad)
                mm_acc_nt_via_transpose(g, wn->value.data(), xn->grad.data(), m, n, k);
            if (wn->requires_grad) mm_acc_tn(xn->value.data(), g, wn->grad.data(), k, m, n);
            if (bn->requires_grad)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        bn->grad[static_cast<size_t>(j)] += g[static_cast<size_t>(i) * n + j];
        });
    }
    return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
    if (a.rank() != 2) throw dim_error("transpose: need rank 2, got " + a.shape_str());
    const int m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    if (track_op(tape, out, {&a})) {
        auto an = a.node(), on = out.node();
        tape.record([an, on, m, n] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<size_t>(i) * n + j] +=
                        on->grad[static_cast<size_t>(j) * m + i];
        });
    }
    return out;
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor elementwise_binary(Tape& tape, const Tensor& a, const Tensor& b, const char* name,
                          Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
    require_same_shape(a, b, name);
    Tensor out = Tensor::zeros(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i], b.values()[i]);
    if (track_op(tape, out, {&a, &b})) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, n, bwd_a, bwd_b] {
            for (size_t i = 0; i < n; ++i) {
                const float g = on->grad[i];
                if (an->requires_grad) an->grad[i] += bwd_a(an->value[i], bn->value[i], g);
                if (bn->requires_grad) bn->grad[i] += bwd_b(an->value[i], bn->value[i], g);
            }
        });
    }
    return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        tape, a, b, "add", [](float x, float y) { return x + y; },
        [](float, float, float g) { return g; }, [](float, float, float g) { return g; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        tape, a, b, "sub", [](float x, float y) { return x - y; },
        [](float, float, float g) { return g; }, [](float, float, float g) { return -g; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        tape, a, b, "mul", [](float x, float y) { return x * y; },
        [](float, float y, float g) { return g * y; },
        [](float x, float, float g) { return g * x; });
}

Tensor scale(Tape& tape, const Tensor& a, float c) {
    Tensor out = Tensor::zeros(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * c;
    if (track_op(tape, out, {&a})) {
        auto an = a.node(), on = out.node();
        tape.record([an, on, n, c] {
            for (size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * c;
        });
    }
    return out;
}

Tensor add_rowvec(Tape& tape, const Tensor& a, const Tensor& v) {
    if (a.rank() != 2 || static_cast<size_t>(a.cols()) != v.numel())
        throw dim_error("add_rowvec: " + a.shape_str() + " + " + v.shape_str());
    const int m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) + v.at(j);
    if (track_op(tape, out, {&a, &v})) {
        auto an = a.node(), vn = v.node(), on = out.node();
        tape.record([an, vn, on, m, n] {
            if (an->requires_grad)
                for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i)
                    an->grad[i] += on->grad[i];
            if (vn->requires_grad)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        vn->grad[j] += on->grad[static_cast<size_t>(i) * n + j];
        });
    }
    return out;
}

float gelu_scalar(float x) {
    constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
    constexpr float kA = 0.044715f;
    const float u = kC * (x + kA * x * x * x);
    return 0.5f * x * (1.0f + fast_tanhf(u));
}

Tensor gelu(Tape& tape, const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = gelu_scalar(a.values()[i]);
    if (track_op(tape, out, {&a})) {
        auto an = a.node(), on = out.node();
        tape.record([an, on, n] {
            constexpr float kC = 0.7978845608028654f;
            constexpr float kA = 0.044715f;
            for (size_t i = 0; i < n; ++i) {
                const float x = an->value[i];
                const float t = fast_tanhf(kC * (x + kA * x * x * x));
                const float d =
                    0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * kC * (1.0f + 3.0f * kA * x * x);
                an->grad[i] += on->grad[i] * d;
            }
        });
    }
    return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& a) {
    if (a.rank() != 2) throw dim_error("softmax_rows: need rank 2, got " + a.shape_str());
    const int m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < m; ++i) {
        const float* __restrict ar = a.values().data() + static_cast<size_t>(i) * n;
        float* __restrict orow = out.values().data() + static_cast<size_t>(i) * n;
        float mx = ar[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, ar[j]);
        for (int j = 0; j < n; ++j) orow[j] = fast_expf(ar[j] - mx);
        // lane accumulation keeps the exp pass vectorizable; lanes fold in f64
        float lanes[16] = {};
        int j = 0;
        for (; j + 16 <= n; j += 16)
            for (int l = 0; l < 16; ++l) lanes[l] += orow[j + l];
        double denom = 0.0;
        for (; j < n; ++j) denom += orow[j];
        for (int l = 0; l < 16; ++l) denom += lanes[l];
        const float inv = static_cast<float>(1.0 / denom);
        for (int j2 = 0; j2 < n; ++j2) orow[j2] *= inv;
    }
    if (track_op(tape, out, {&a})) {
        auto an = a.node(), on = out.node();
        tape.record([an, on, m, n] {
            for (int i = 0; i < m; ++i) {
                const float* p = on->value.data() + static_cast<size_t>(i) * n;
                const float* g = on->grad.data() + static_cast<size_t>(i) * n;
                float* ga = an->grad.data() + static_cast<size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += static_cast<double>(g[j]) * p[j];
                const float dotf = static_cast<float>(dot);
                for (int j = 0; j < n; ++j) ga[j] += p[j] * (g[j] - dotf);
            }
        });
    }
    return out;
}

Tensor layernorm_rows(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      float eps) {
    if (x.rank() != 2) throw dim_error("layernorm_rows: need rank 2, got " + x.shape_str());
    const int m = x.rows(), d = x.cols();
    if (static_cast<size_t>(d) != gamma.numel() || static_cast<size_t>(d) != beta.numel())
        throw dim_error("layernorm_rows: feature dim " + x.shape_str() + " vs gamma " +
                        gamma.shape_str() + ", beta " + beta.shape_str());
    Tensor out = Tensor::zeros(x.shape());
    std::vector<float> xhat(static_cast<size_t>(m) * d);
    std::vector<float> inv_std(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const float* xr = x.values().data() + static_cast<size_t>(i) * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xr[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xr[j] - mean;
            var += c * c;
        }
        var /= d;
        const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        inv_std[static_cast<size_t>(i)] = is;
        const float mf = static_cast<float>(mean);
        for (int j = 0; j < d; ++j) {
            const float h = (xr[j] - mf) * is;
            xhat[static_cast<size_t>(i) * d + j] = h;
            out.at(i, j) = gamma.at(j) * h + beta.at(j);
        }
    }
    if (track_op(tape, out, {&x, &gamma, &beta})) {
        auto xn = x.node(), gn = gamma.node(), bn = beta.node(), on = out.node();
        tape.record([xn, gn, bn, on, m, d, xhat = std::move(xhat),
                     inv_std = std::move(inv_std)] {
            for (int i = 0; i < m; ++i) {
                const float* g = on->grad.data() + static_cast<size_t>(i) * d;
                const float* h = xhat.data() + static_cast<size_t>(i) * d;
                if (gn->requires_grad)
                    for (int j = 0; j < d; ++j) gn->grad[j] += g[j] * h[j];
                if (bn->requires_grad)
                    for (int j = 0; j < d; ++j) bn->grad[j] += g[j];
                if (xn->requires_grad) {
                    double sum_dh = 0.0, sum_dh_h = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double dh = static_cast<double>(g[j]) * gn->value[j];
                        sum_dh += dh;
                        sum_dh_h += dh * h[j];
                    }
                    const float mean_dh = static_cast<float>(sum_dh / d);
                    const float mean_dh_h = static_cast<float>(sum_dh_h / d);
                    const float is = inv_std[static_cast<size_t>(i)];
                    float* gx = xn->grad.data() + static_cast<size_t>(i) * d;
                    for (int j = 0; j < d; ++j) {
                        const float dh = g[j] * gn->value[j];
                        gx[j] += is * (dh - mean_dh - h[j] * mean_dh_h);
                    }
                }
            }
        });
    }
    return out;
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        throw dim_error("concat_rows: column mismatch " + a.shape_str() + " vs " + b.shape_str());
    const int p = a.rows(), q = b.rows(), n = a.cols();
    Tensor out = Tensor::zeros({p + q, n});
    std::memcpy(out.values().data(), a.values().data(), a.numel() * sizeof(float));
    std::memcpy(out.values().data() + a.numel(), b.values().data(), b.numel() * sizeof(float));
    if (track_op(tape, out, {&a, &b})) {
        auto an = a.node(), bn = b.node(), on = out.node();
        const size_t na = a.numel(), nb = b.numel();
        tape.record([an, bn, on, na, nb] {
            if (an->requires_grad)
                for (size_t i = 0; i < na; ++i) an->grad[i] += on->grad[i];
            if (bn->requires_grad)
                for (size_t i = 0; i < nb; ++i) bn->grad[i] += on->grad[na + i];
        });
    }
    return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw dim_error("concat_cols: no parts");
    const int m = parts[0].rows();
    int total = 0;
    for (const Tensor& t : parts) {
        if (t.rank() != 2 || t.rows() != m)
            throw dim_error("concat_cols: row mismatch " + parts[0].shape_str() + " vs " +
                            t.shape_str());
        total += t.cols();
    }
    Tensor out = Tensor::zeros({m, total});
    int off = 0;
    for (const Tensor& t : parts) {
        const int w = t.cols();
        for (int i = 0; i < m; ++i)
            std::memcpy(out.values().data() + static_cast<size_t>(i) * total + off,
                        t.values().data() + static_cast<size_t>(i) * w,
                        static_cast<size_t>(w) * sizeof(float));
        off += w;
    }
    bool any = false;
    for (const Tensor& t : parts) any = any || t.requires_grad();
    if (tape.recording() && any) {
        out.set_requires_grad(true);
        out.ensure_grad();
        std::vector<std::shared_ptr<detail::TensorNode>> nodes;
        std::vector<int> offsets, widths;
        int o = 0;
        for (const Tensor& t : parts) {
            if (t.requires_grad()) const_cast<Tensor&>(t).ensure_grad();
            nodes.push_back(t.node());
            offsets.push_back(o);
            widths.push_back(t.cols());
            o += t.cols();
        }
        auto on = out.node();
        tape.record([on, nodes = std::move(nodes), offsets = std::move(offsets),
                     widths = std::move(widths), m, total] {
            for (size_t pi = 0; pi < nodes.size(); ++pi) {
                if (!nodes[pi]->requires_grad) continue;
                const int w = widths[pi], off2 = offsets[pi];
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < w; ++j)
                        nodes[pi]->grad[static_cast<size_t>(i) * w + j] +=
                            on->grad[static_cast<size_t>(i) * total + off2 + j];
            }
        });
    }
    return out;
}

Tensor slice_rows(Tape& tape, const Tensor& x, int from, int to) {
    if (x.rank() != 2) throw dim_error("slice_rows: need rank 2, got " + x.shape_str());
    if (from < 0 || to < from || to > x.rows())
        throw dim_error("slice_rows: range [" + std::to_string(from) + "," + std::to_string(to) +
                        ") out of " + x.shape_str());
    const int n = x.cols(), h = to - from;
    Tensor out = Tensor::zeros({h, n});
    std::memcpy(out.values().data(), x.values().data() + static_cast<size_t>(from) * n,
                static_cast<size_t>(h) * n * sizeof(float));
    if (track_op(tape, out, {&x})) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, from, h, n] {
            const size_t base = static_cast<size_t>(from) * n;
            for (size_t i = 0; i < static_cast<size_t>(h) * n; ++i)
                xn->grad[base + i] += on->grad[i];
        });
    }
    return out;
}

Tensor slice_cols(Tape& tape, const Tensor& x, int from, int to) {
    if (x.rank() != 2) throw dim_error("slice_cols: need rank 2, got " + x.shape_str());
    if (from < 0 || to < from || to > x.cols())
        throw dim_error("slice_cols: range [" + std::to_string(from) + "," + std::to_string(to) +
                        ") out of " + x.shape_str());
    const int m = x.rows(), n = x.cols(), w = to - from;
    Tensor out = Tensor::zeros({m, w});
    for (int i = 0; i < m; ++i)
        std::memcpy(out.values().data() + static_cast<size_t>(i) * w,
                    x.values().data() + static_cast<size_t>(i) * n + from,
                    static_cast<size_t>(w) * sizeof(float));
    if (track_op(tape, out, {&x})) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, from, m, n, w] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < w; ++j)
                    xn->grad[static_cast<size_t>(i) * n + from + j] +=
                        on->grad[static_cast<size_t>(i) * w + j];
        });
    }
    return out;
}

Tensor sum_all(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (float v : x.values()) s += v;
    Tensor out = Tensor::scalar(static_cast<float>(s));
    if (track_op(tape, out, {&x})) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on] {
            const float g = on->grad[0];
            for (float& gv : xn->grad) gv += g;
        });
    }
    return out;
}

Tensor mean_scalars(Tape& tape, const std::vector<Tensor>& xs) {
    if (xs.empty()) throw dim_error("mean_scalars: empty input");
    double s = 0.0;
    bool any = false;
    for (const Tensor& t : xs) {
        s += t.item();
        any = any || t.requires_grad();
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    Tensor out = Tensor::scalar(static_cast<float>(s * inv));
    if (tape.recording() && any) {
        out.set_requires_grad(true);
        out.ensure_grad();
        std::vector<std::shared_ptr<detail::TensorNode>> nodes;
        for (const Tensor& t : xs) {
            if (t.requires_grad()) const_cast<Tensor&>(t).ensure_grad();
            nodes.push_back(t.node());
        }
        auto on = out.node();
        const float invf = static_cast<float>(inv);
        tape.record([on, nodes = std::move(nodes), invf] {
            for (auto& n : nodes)
                if (n->requires_grad) n->grad[0] += on->grad[0] * invf;
        });
    }
    return out;
}

Tensor div_by_scalar(Tape& tape, const Tensor& x, const Tensor& s) {
    if (s.numel() != 1) throw dim_error("div_by_scalar: divisor " + s.shape_str());
    const float sv = s.at(0);
    Tensor out = Tensor::zeros(x.shape());
    const size_t n = x.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = x.values()[i] / sv;
    if (track_op(tape, out, {&x, &s})) {
        auto xn = x.node(), sn = s.node(), on = out.node();
        tape.record([xn, sn, on, n] {
            const float svv = sn->value[0];
            if (xn->requires_grad)
                for (size_t i = 0; i < n; ++i) xn->grad[i] += on->grad[i] / svv;
            if (sn->requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < n; ++i)
                    acc -= static_cast<double>(on->grad[i]) * xn->value[i] / (svv * svv);
                sn->grad[0] += static_cast<float>(acc);
            }
        });
    }
    return out;
}

}  // namespace rfp
