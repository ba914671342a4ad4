#include "t1t2/params.hpp"

#include <cmath>

#include "t1t2/error.hpp"

namespace t1t2 {

namespace {

template <typename F>
void for_each_pair(ParamSet& a, const ParamSet& b, F f) {
    if (a.w.size() != b.w.size() || a.gamma.size() != b.gamma.size())
        fail(ErrorKind::internal, "param sets have different layer structure");
    for (std::size_t l = 0; l < a.w.size(); ++l) {
        f(a.w[l], b.w[l]);
        f(a.b[l], b.b[l]);
    }
    for (std::size_t l = 0; l < a.gamma.size(); ++l) {
        f(a.gamma[l], b.gamma[l]);
        f(a.beta[l], b.beta[l]);
    }
}

template <typename F>
void for_each_pair(const ParamSet& a, const ParamSet& b, F f) {
    for_each_pair(const_cast<ParamSet&>(a), b, [&](Tensor& x, const Tensor& y) { f(const_cast<const Tensor&>(x), y); });
}

}  // namespace

ParamSet zeros_like(const ParamSet& p) {
    ParamSet z;
    auto zero = [](const std::vector<Tensor>& src, std::vector<Tensor>& dst) {
        dst.reserve(src.size());
        for (const Tensor& t : src) dst.push_back(Tensor::zeros(t.shape()));
    };
    zero(p.w, z.w);
    zero(p.b, z.b);
    zero(p.gamma, z.gamma);
    zero(p.beta, z.beta);
    return z;
}

void axpy_inplace(ParamSet& y, double alpha, const ParamSet& x) {
    for_each_pair(y, x, [alpha](Tensor& a, const Tensor& b) { axpy_inplace(a, alpha, b); });
}

void scale_inplace(ParamSet& p, double alpha) {
    for (Tensor& t : p.w) scale_inplace(t, alpha);
    for (Tensor& t : p.b) scale_inplace(t, alpha);
    for (Tensor& t : p.gamma) scale_inplace(t, alpha);
    for (Tensor& t : p.beta) scale_inplace(t, alpha);
}

double dot(const ParamSet& a, const ParamSet& b) {
    double acc = 0.0;
    for_each_pair(a, b, [&acc](const Tensor& x, const Tensor& y) { acc += dot(x, y); });
    return acc;
}

std::size_t param_count(const ParamSet& p) {
    std::size_t n = 0;
    for (const Tensor& t : p.w) n += t.numel();
    for (const Tensor& t : p.b) n += t.numel();
    for (const Tensor& t : p.gamma) n += t.numel();
    for (const Tensor& t : p.beta) n += t.numel();
    return n;
}

double norm(const ParamSet& p) { return std::sqrt(dot(p, p)); }

bool same_shapes(const ParamSet& a, const ParamSet& b) {
    if (a.w.size() != b.w.size() || a.gamma.size() != b.gamma.size()) return false;
    for (std::size_t l = 0; l < a.w.size(); ++l)
        if (!a.w[l].same_shape(b.w[l]) || !a.b[l].same_shape(b.b[l])) return false;
    for (std::size_t l = 0; l < a.gamma.size(); ++l)
        if (!a.gamma[l].same_shape(b.gamma[l]) || !a.beta[l].same_shape(b.beta[l])) return false;
    return true;
}

}  // namespace t1t2
