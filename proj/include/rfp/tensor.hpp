#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfp {

struct dim_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
struct TensorNode {
    std::vector<int> shape;
    std::vector<float> value;
    std::vector<float> grad;  // allocated on demand, same length as value
    bool requires_grad = false;
};
}  // namespace detail

// Dense row-major f32 tensor. Value-semantic handle: copies share the
// underlying buffer (clone() for a deep copy). Rank is 1 or 2 everywhere
// in this project; matrices are row-major.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, float fill, bool requires_grad = false);
    static Tensor from_values(std::vector<int> shape, std::vector<float> values,
                              bool requires_grad = false);
    static Tensor scalar(float v, bool requires_grad = false);

    bool defined() const { return n_ != nullptr; }
    const std::vector<int>& shape() const { return n_->shape; }
    int rank() const { return static_cast<int>(n_->shape.size()); }
    int dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
    int rows() const { return n_->shape[0]; }
    int cols() const { return rank() == 2 ? n_->shape[1] : 1; }
    size_t numel() const { return n_->value.size(); }

    std::span<float> values() { return n_->value; }
    std::span<const float> values() const { return n_->value; }
    float& at(int i) { return n_->value[static_cast<size_t>(i)]; }
    float at(int i) const { return n_->value[static_cast<size_t>(i)]; }
    float& at(int r, int c) { return n_->value[static_cast<size_t>(r) * cols() + c]; }
    float at(int r, int c) const { return n_->value[static_cast<size_t>(r) * cols() + c]; }
    float item() const;  // value of a single-element tensor

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool rg);
    bool has_grad() const { return !n_->grad.empty(); }
    void ensure_grad();

    std::span<float> grad() { return n_->grad; }
    std::span<const float> grad() const { return n_->grad; }
    void zero_grad();

    Tensor clone() const;                   // deep copy of values (no grad, no flag)
    bool same_storage(const Tensor& o) const { return n_ == o.n_; }
    bool all_finite() const;
    uint64_t checksum() const;              // FNV-1a over the raw value bytes

    std::string shape_str() const;

    std::shared_ptr<detail::TensorNode> node() const { return n_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : n_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> n_;
};

// Records one backward closure per primitive application. backward() of a
// scalar replays the closures in reverse recorded order, so each recorded
// node is visited exactly once. A tape and the graph built on it belong to
// one logical thread.
class Tape {
public:
    void record(std::function<void()> step) {
        if (enabled_) steps_.push_back(std::move(step));
    }

    // Seeds loss.grad with `seed` (1.0 by default; a training loop passes
    // 1/batch for mean-reduction) and replays the tape.
    void backward(Tensor& loss, float seed = 1.0f);

    void clear() { steps_.clear(); }
    size_t size() const { return steps_.size(); }

    bool recording() const { return enabled_; }
    void set_recording(bool on) { enabled_ = on; }

private:
    std::vector<std::function<void()>> steps_;
    bool enabled_ = true;
};

// RAII pause of tape recording; forwards run under this behave as pure
// inference and allocate no graph.
class NoGrad {
public:
    explicit NoGrad(Tape& t) : t_(t), prev_(t.recording()) { t_.set_recording(false); }
    ~NoGrad() { t_.set_recording(prev_); }
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

private:
    Tape& t_;
    bool prev_;
};

// ---- primitives ------------------------------------------------------
// Every op returns a fresh tensor; the output requires grad iff recording
// is on and some input requires grad.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);  // a . b^T
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);  // x . w + b
Tensor transpose(Tape& tape, const Tensor& a);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, float c);
Tensor add_rowvec(Tape& tape, const Tensor& a, const Tensor& v);  // v broadcast over rows
Tensor gelu(Tape& tape, const Tensor& a);
Tensor softmax_rows(Tape& tape, const Tensor& a);
Tensor layernorm_rows(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      float eps = 1e-5f);
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_rows(Tape& tape, const Tensor& x, int from, int to);
Tensor slice_cols(Tape& tape, const Tensor& x, int from, int to);
Tensor sum_all(Tape& tape, const Tensor& x);                      // -> shape {1}
Tensor mean_scalars(Tape& tape, const std::vector<Tensor>& xs);   // f64 accumulation
Tensor div_by_scalar(Tape& tape, const Tensor& x, const Tensor& s);  // s has numel 1

// scalar gelu, shared with everything that needs the exact same curve
float gelu_scalar(float x);

// ---- raw kernels (no autograd) ---------------------------------------
// C += op(A, B); C must be sized M*N. Fixed per-element accumulation
// order, so results are identical across runs for a given binary.
void mm_acc_nn(const float* a, const float* b, float* c, int m, int k, int n);
void mm_acc_nt(const float* a, const float* b, float* c, int m, int k, int n);
void mm_acc_tn(const float* a, const float* b, float* c, int m, int k, int n);

}  // namespace rfp
