#include "t1t2/hypergrad.hpp"

#include <cmath>

#include "t1t2/error.hpp"

namespace t1t2 {

double hypergrad_l2(const ParamSet& g2, const ModelParams& params, std::size_t layer) {
    if (layer >= params.layer_count() || !same_shapes(g2, params))
        fail(ErrorKind::contract, "hypergrad_l2: layout mismatch");
    return dot(g2.w[layer], params.w[layer]);
}

double hypergrad_noise(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                       const LossAdjoint& loss, std::size_t site, PassCounters* counters,
                       const BackwardCache* cache) {
    if (trace.e.empty()) fail(ErrorKind::contract, "hypergrad_noise: trace has no recorded noise draw");
    const ModelParams tangent = tangent_grad_wrt_sigma(trace, params, loss, site, counters, cache);
    return dot(g2, tangent);
}

std::vector<double> hypergrad_noise_all(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                                        const LossAdjoint& loss, const BackwardCache& cache,
                                        PassCounters* counters) {
    if (trace.e.empty()) fail(ErrorKind::contract, "hypergrad_noise_all: trace has no recorded noise draw");
    const std::vector<Tensor> site_tangents = param_direction_tangent(trace, params, g2, loss, cache, counters);
    std::vector<double> g(site_tangents.size(), 0.0);
    for (std::size_t l = 0; l < site_tangents.size(); ++l) g[l] = dot(site_tangents[l], trace.e[l]);
    return g;
}

double fd_oracle(const std::function<double(const HyperParams&)>& f, const HyperParams& at, HyperIndex index,
                 double eps) {
    if (eps <= 0.0) fail(ErrorKind::input, "fd_oracle: eps must be positive");
    auto component = [&index](HyperParams& h) -> double& {
        auto& v = index.family == HyperIndex::Family::noise ? h.noise_std : h.l2;
        if (index.index >= v.size()) fail(ErrorKind::input, "fd_oracle: hyper index out of range");
        return v[index.index];
    };
    HyperParams plus = at;
    component(plus) += eps;
    HyperParams minus = at;
    component(minus) -= eps;
    return (f(plus) - f(minus)) / (2.0 * eps);
}

HyperGradient compute_hypergradient(const ParamSet& g2, const ForwardTrace& trace, const ModelParams& params,
                                    const LossAdjoint& loss, const BackwardCache& cache, bool want_noise,
                                    bool want_l2, bool full_diagnostics, PassCounters* counters) {
    const std::size_t W = params.layer_count();
    HyperGradient hg;
    hg.g2_norm = norm(g2);
    hg.noise.assign(W, 0.0);
    hg.l2.assign(W, 0.0);
    hg.noise_mixed_norm.assign(W, 0.0);
    hg.l2_mixed_norm.assign(W, 0.0);
    hg.noise_cosine.assign(W, 0.0);
    hg.l2_cosine.assign(W, 0.0);

    auto cosine = [&hg](double g, double mixed_norm) {
        const double denom = hg.g2_norm * mixed_norm;
        return denom > 0.0 ? g / denom : 0.0;
    };

    if (want_l2) {
        for (std::size_t l = 0; l < W; ++l) {
            hg.l2[l] = hypergrad_l2(g2, params, l);
            hg.l2_mixed_norm[l] = std::sqrt(dot(params.w[l], params.w[l]));
            hg.l2_cosine[l] = cosine(hg.l2[l], hg.l2_mixed_norm[l]);
        }
    }
    if (want_noise) {
        hg.noise = hypergrad_noise_all(g2, trace, params, loss, cache, counters);
        if (full_diagnostics) {
            for (std::size_t l = 0; l < W; ++l) {
                const ModelParams tangent = tangent_grad_wrt_sigma(trace, params, loss, l, counters, &cache);
                hg.noise_mixed_norm[l] = norm(tangent);
                hg.noise_cosine[l] = cosine(hg.noise[l], hg.noise_mixed_norm[l]);
            }
        }
    }
    return hg;
}

}  // namespace t1t2
