#ifndef T1T2_TENSOR_HPP
#define T1T2_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace t1t2 {

// Dense row-major tensor of doubles. Rank is 1 or 2 everywhere in this
// library; shape is kept generic so callers can carry flat vectors too.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);
    // 2-d convenience: rows given as nested initializer lists.
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor from_vector(std::vector<double> values);  // rank-1

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // 2-d accessors; rank-1 tensors behave as a single row.
    std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_[0]); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const Tensor& t);

// --- matrix kernels -------------------------------------------------------
// All accumulate strictly in ascending-k order per output element, so results
// are bit-identical to the naive triple loop and bit-reproducible across runs.

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k] x [k,n] -> [m,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T b: [k,m],[k,n] -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a b^T: [m,k],[n,k] -> [m,n]
Tensor transpose(const Tensor& a);

// --- elementwise / reductions ----------------------------------------------

Tensor relu(const Tensor& x);
// upstream * 1[x > 0]; subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& x, const Tensor& upstream);

void add_row_vector_inplace(Tensor& a, const Tensor& row);  // bias add
void axpy_inplace(Tensor& y, double alpha, const Tensor& x);
void scale_inplace(Tensor& x, double alpha);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor col_sum(const Tensor& a);   // [m,n] -> [n]
Tensor col_mean(const Tensor& a);  // [m,n] -> [n]
double dot(const Tensor& a, const Tensor& b);

// Throws a numeric error naming `context` if any element is NaN/Inf.
void check_finite(const Tensor& t, const std::string& context);

// --- softmax cross-entropy --------------------------------------------------

struct XentResult {
    double loss = 0.0;            // mean over batch
    Tensor grad_logits;           // (softmax - onehot) / batch
};

// Row-stabilized; labels are class indices in [0, cols).
XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels);

// Directional derivative of grad_logits along logits_dot (same batch mean
// normalization): row-wise (p .* u - p * (p . u)) / batch.
Tensor softmax_xent_grad_jvp(const Tensor& logits, const Tensor& logits_dot);

// Mean cross-entropy and classification error from raw logits.
struct Metrics {
    double xent = 0.0;
    double error = 0.0;  // fraction misclassified, argmax with lowest-index tie break
};
Metrics metrics_from_logits(const Tensor& logits, const std::vector<int>& labels);

}  // namespace t1t2

#endif
