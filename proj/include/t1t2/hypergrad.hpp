#ifndef T1T2_HYPERGRAD_HPP
#define T1T2_HYPERGRAD_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "t1t2/network.hpp"
#include "t1t2/params.hpp"
#include "t1t2/regularization.hpp"

namespace t1t2 {

// Raw hypergradient G = (grad_theta C2) . (d grad_theta C~1 / d lambda) per
// hyperparameter, plus the diagnostics logged at every hyper-update. G == 0
// iff the validation gradient is orthogonal to the mixed derivative; cosine
// entries expose that angle (0 recorded when the norm was not computed).
struct HyperGradient {
    std::uint64_t step = 0;
    std::vector<double> noise;             // per noise site
    std::vector<double> l2;                // per weight matrix
    double g2_norm = 0.0;
    std::vector<double> noise_mixed_norm;  // ||d grad/d sigma_l||; 0 unless full diagnostics
    std::vector<double> l2_mixed_norm;     // ||w_l||
    std::vector<double> noise_cosine;
    std::vector<double> l2_cosine;
};

// Closed form: sum over layer-l weights of g2_j * theta_j. No passes.
double hypergrad_l2(const ParamSet& g2, const ModelParams& params, std::size_t layer);

// g2 . d(grad_theta C~1)/d sigma_site via the per-site tangent pass.
double hypergrad_noise(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                       const LossAdjoint& loss, std::size_t site, PassCounters* counters = nullptr,
                       const BackwardCache* cache = nullptr);

// All noise hypergradients from one parameter-direction tangent pass
// (tangent direction = g2); algebraically equal to hypergrad_noise per site.
std::vector<double> hypergrad_noise_all(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                                        const LossAdjoint& loss, const BackwardCache& cache,
                                        PassCounters* counters = nullptr);

struct HyperIndex {
    enum class Family { noise, l2 };
    Family family = Family::noise;
    std::size_t index = 0;
};

// Central difference [f(x_i + eps) - f(x_i - eps)] / (2 eps) on the raw
// (unprojected) hyperparameter component. The closure must replay all
// randomness (same batches, same noise draws, frozen bn statistics).
double fd_oracle(const std::function<double(const HyperParams&)>& f, const HyperParams& at, HyperIndex index,
                 double eps);

// Full hypergradient with diagnostics, as consumed by the training loop.
// want_noise skips the tangent pass entirely when no noise hyper is tuned;
// full_diagnostics computes per-site tangent norms (one extra tangent pass
// per site) for the cosine diagnostic.
HyperGradient compute_hypergradient(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                                    const LossAdjoint& loss, const BackwardCache& cache, bool want_noise,
                                    bool want_l2, bool full_diagnostics, PassCounters* counters = nullptr);

}  // namespace t1t2

#endif
