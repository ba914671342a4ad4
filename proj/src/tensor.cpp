#include "t1t2/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "t1t2/error.hpp"

namespace t1t2 {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
}

void require_rank2(const Tensor& t, const char* who) {
    if (t.shape().size() != 2)
        fail(ErrorKind::dimension, std::string(who) + ": expected rank-2 tensor, got shape " + shape_str(t));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        fail(ErrorKind::dimension, "tensor: shape " + shape_str(*this) + " does not match data length " +
                                       std::to_string(data_.size()));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t m = rows.size();
    std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(m * n);
    for (const auto& row : rows) {
        if (row.size() != n) fail(ErrorKind::dimension, "from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({m, n}, std::move(data));
}

Tensor Tensor::from_vector(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) os << "x";
        os << t.shape()[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        fail(ErrorKind::dimension, "matmul: inner extents disagree, " + shape_str(a) + " x " + shape_str(b));
    Tensor c({m, n});
    const double* __restrict pa = a.data();
    const double* __restrict pb = b.data();
    double* __restrict pc = c.data();
    // i-k-j: each c[i,j] accumulates k in ascending order (bit-equal to the
    // naive loop) while the inner j loop vectorizes.
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict crow = pc + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            const double* __restrict brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_tn");
    require_rank2(b, "matmul_tn");
    const std::size_t k = a.shape()[0], m = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        fail(ErrorKind::dimension, "matmul_tn: inner extents disagree, " + shape_str(a) + "^T x " + shape_str(b));
    Tensor c({m, n});
    const double* __restrict pa = a.data();
    const double* __restrict pb = b.data();
    double* __restrict pc = c.data();
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* __restrict arow = pa + kk * m;
        const double* __restrict brow = pb + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = arow[i];
            double* __restrict crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    if (a.shape()[1] != b.shape()[1])
        fail(ErrorKind::dimension, "matmul_nt: inner extents disagree, " + shape_str(a) + " x " + shape_str(b) + "^T");
    return matmul(a, transpose(b));
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    Tensor t({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.vec()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& upstream) {
    if (!x.same_shape(upstream))
        fail(ErrorKind::dimension, "relu_backward: shape mismatch " + shape_str(x) + " vs " + shape_str(upstream));
    Tensor g = upstream;
    const double* px = x.data();
    double* pg = g.data();
    for (std::size_t i = 0; i < g.numel(); ++i)
        if (!(px[i] > 0.0)) pg[i] = 0.0;
    return g;
}

void add_row_vector_inplace(Tensor& a, const Tensor& row) {
    const std::size_t m = a.rows(), n = a.cols();
    if (row.numel() != n)
        fail(ErrorKind::dimension, "bias add: " + shape_str(a) + " vs " + shape_str(row));
    for (std::size_t i = 0; i < m; ++i) {
        double* pa = a.data() + i * n;
        const double* pr = row.data();
        for (std::size_t j = 0; j < n; ++j) pa[j] += pr[j];
    }
}

void axpy_inplace(Tensor& y, double alpha, const Tensor& x) {
    if (!y.same_shape(x))
        fail(ErrorKind::dimension, "axpy: shape mismatch " + shape_str(y) + " vs " + shape_str(x));
    double* py = y.data();
    const double* px = x.data();
    for (std::size_t i = 0; i < y.numel(); ++i) py[i] += alpha * px[i];
}

void scale_inplace(Tensor& x, double alpha) {
    for (double& v : x.vec()) v *= alpha;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        fail(ErrorKind::dimension, "hadamard: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    Tensor c = a;
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < c.numel(); ++i) pc[i] *= pb[i];
    return c;
}

Tensor col_sum(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor s({n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* pa = a.data() + i * n;
        double* ps = s.data();
        for (std::size_t j = 0; j < n; ++j) ps[j] += pa[j];
    }
    return s;
}

Tensor col_mean(const Tensor& a) {
    Tensor s = col_sum(a);
    if (a.rows() > 0) scale_inplace(s, 1.0 / static_cast<double>(a.rows()));
    return s;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel())
        fail(ErrorKind::dimension, "dot: length mismatch " + shape_str(a) + " vs " + shape_str(b));
    double acc = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.numel(); ++i) acc += pa[i] * pb[i];
    return acc;
}

void check_finite(const Tensor& t, const std::string& context) {
    for (double v : t.vec())
        if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite value in " + context);
}

XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t m = logits.rows(), n = logits.cols();
    if (m == 0) fail(ErrorKind::input, "softmax_xent: empty batch");
    if (labels.size() != m)
        fail(ErrorKind::input, "softmax_xent: " + std::to_string(labels.size()) + " labels for batch " +
                                   std::to_string(m));
    XentResult out;
    out.grad_logits = Tensor({m, n});
    const double inv_batch = 1.0 / static_cast<double>(m);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= n)
            fail(ErrorKind::input, "softmax_xent: label " + std::to_string(label) + " out of range [0," +
                                       std::to_string(n) + ") at row " + std::to_string(i));
        const double* row = logits.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
        const double logz = std::log(z);
        loss += -(row[label] - mx - logz);
        double* grow = out.grad_logits.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) grow[j] = std::exp(row[j] - mx) / z * inv_batch;
        grow[label] -= inv_batch;
    }
    out.loss = loss * inv_batch;
    return out;
}

Tensor softmax_xent_grad_jvp(const Tensor& logits, const Tensor& logits_dot) {
    if (!logits.same_shape(logits_dot))
        fail(ErrorKind::dimension,
             "softmax_xent_grad_jvp: shape mismatch " + shape_str(logits) + " vs " + shape_str(logits_dot));
    const std::size_t m = logits.rows(), n = logits.cols();
    Tensor out({m, n});
    const double inv_batch = 1.0 / static_cast<double>(m);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = logits.data() + i * n;
        const double* u = logits_dot.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            p[j] = std::exp(row[j] - mx);
            z += p[j];
        }
        double pu = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            p[j] /= z;
            pu += p[j] * u[j];
        }
        double* orow = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] = p[j] * (u[j] - pu) * inv_batch;
    }
    return out;
}

Metrics metrics_from_logits(const Tensor& logits, const std::vector<int>& labels) {
    Metrics m;
    m.xent = softmax_xent(logits, labels).loss;
    std::size_t wrong = 0;
    const std::size_t rows = logits.rows(), n = logits.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = logits.data() + i * n;
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j)
            if (row[j] > row[best]) best = j;
        if (best != static_cast<std::size_t>(labels[i])) ++wrong;
    }
    m.error = static_cast<double>(wrong) / static_cast<double>(rows);
    return m;
}

}  // namespace t1t2
