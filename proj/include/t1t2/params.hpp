#ifndef T1T2_PARAMS_HPP
#define T1T2_PARAMS_HPP

#include <cstddef>
#include <vector>

#include "t1t2/tensor.hpp"

namespace t1t2 {

// One tensor per weight layer. gamma/beta are empty unless batch norm is on,
// in which case they cover hidden layers only (never the logits layer).
// The same container carries parameters, gradients, tangents and moments.
struct ParamSet {
    std::vector<Tensor> w;
    std::vector<Tensor> b;
    std::vector<Tensor> gamma;
    std::vector<Tensor> beta;

    std::size_t layer_count() const { return w.size(); }
    bool batch_norm() const { return !gamma.empty(); }
};

ParamSet zeros_like(const ParamSet& p);
void axpy_inplace(ParamSet& y, double alpha, const ParamSet& x);
void scale_inplace(ParamSet& p, double alpha);
double dot(const ParamSet& a, const ParamSet& b);
std::size_t param_count(const ParamSet& p);
double norm(const ParamSet& p);
bool same_shapes(const ParamSet& a, const ParamSet& b);

}  // namespace t1t2

#endif
