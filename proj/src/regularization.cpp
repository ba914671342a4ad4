#include "t1t2/regularization.hpp"

#include <algorithm>

#include "t1t2/error.hpp"

namespace t1t2 {

namespace {

void require_tied(const HyperParams& hypers, const char* who) {
    if (hypers.layout != HyperLayout::tied)
        fail(ErrorKind::contract, std::string(who) + ": requires tied layout");
    for (std::size_t i = 2; i < hypers.noise_std.size(); ++i)
        if (hypers.noise_std[i] != hypers.noise_std[1])
            fail(ErrorKind::contract, std::string(who) + ": tied hidden noise entries diverge");
    for (std::size_t i = 1; i < hypers.l2.size(); ++i)
        if (hypers.l2[i] != hypers.l2[0])
            fail(ErrorKind::contract, std::string(who) + ": tied l2 entries diverge");
}

void require_layout_match(const ParamSet& params, const HyperParams& hypers, const char* who) {
    if (params.layer_count() != hypers.layer_count() || hypers.noise_std.size() != hypers.l2.size())
        fail(ErrorKind::contract, std::string(who) + ": hyper layout does not match parameter layers");
}

}  // namespace

HyperParams make_hypers(std::size_t weight_layers, double noise_input, double noise_hidden, double l2,
                        HyperLayout layout) {
    if (weight_layers < 2) fail(ErrorKind::config, "make_hypers: need at least one hidden layer");
    HyperParams h;
    h.layout = layout;
    h.noise_std.assign(weight_layers, noise_hidden);
    h.noise_std[0] = noise_input;
    h.l2.assign(weight_layers, l2);
    return h;
}

HyperParams project(HyperParams hypers) {
    for (double& v : hypers.noise_std) v = std::max(v, 0.0);
    for (double& v : hypers.l2) v = std::max(v, 0.0);
    return hypers;
}

bool feasible(const HyperParams& hypers) {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    return ok(hypers.noise_std) && ok(hypers.l2);
}

L2Result l2_penalty_and_grad(const ParamSet& params, const HyperParams& hypers) {
    L2Result out;
    out.grad = zeros_like(params);
    out.penalty = add_l2_gradient(params, hypers, out.grad);
    return out;
}

double add_l2_gradient(const ParamSet& params, const HyperParams& hypers, ParamSet& grad) {
    require_layout_match(params, hypers, "l2_penalty_and_grad");
    double penalty = 0.0;
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        const double lambda = hypers.l2[l];
        if (lambda < 0.0)
            fail(ErrorKind::contract, "l2_penalty_and_grad: negative l2 strength (projection must run first)");
        if (lambda == 0.0) continue;
        penalty += 0.5 * lambda * dot(params.w[l], params.w[l]);
        axpy_inplace(grad.w[l], lambda, params.w[l]);
    }
    return penalty;
}

PerLayerHypers expand_tied(const HyperParams& hypers) {
    require_tied(hypers, "expand_tied");
    return PerLayerHypers{hypers.noise_std, hypers.l2};
}

TiedGradient reduce_tied(const HyperParams& hypers, const std::vector<double>& noise_grad,
                         const std::vector<double>& l2_grad) {
    require_tied(hypers, "reduce_tied");
    if (noise_grad.size() != hypers.noise_std.size() || l2_grad.size() != hypers.l2.size())
        fail(ErrorKind::contract, "reduce_tied: gradient layout mismatch");
    TiedGradient g;
    g.noise_input = noise_grad.empty() ? 0.0 : noise_grad[0];
    for (std::size_t i = 1; i < noise_grad.size(); ++i) g.noise_hidden += noise_grad[i];
    for (double v : l2_grad) g.l2 += v;
    return g;
}

std::vector<std::string> hyper_dof_names(const HyperParams& hypers) {
    std::vector<std::string> names;
    if (hypers.layout == HyperLayout::tied) {
        names = {"noise_0", "noise_hidden", "l2"};
    } else {
        for (std::size_t i = 0; i < hypers.noise_std.size(); ++i) names.push_back("noise_" + std::to_string(i));
        for (std::size_t i = 0; i < hypers.l2.size(); ++i) names.push_back("l2_" + std::to_string(i + 1));
    }
    return names;
}

std::vector<double> pack_dof(const HyperParams& hypers) {
    if (hypers.layout == HyperLayout::tied) {
        const PerLayerHypers v = expand_tied(hypers);
        return {v.noise_std[0], v.noise_std.size() > 1 ? v.noise_std[1] : 0.0, v.l2[0]};
    }
    std::vector<double> dof = hypers.noise_std;
    dof.insert(dof.end(), hypers.l2.begin(), hypers.l2.end());
    return dof;
}

void unpack_dof(const std::vector<double>& dof, HyperParams& hypers) {
    if (hypers.layout == HyperLayout::tied) {
        if (dof.size() != 3) fail(ErrorKind::contract, "unpack_dof: tied layout expects 3 values");
        hypers.noise_std[0] = dof[0];
        for (std::size_t i = 1; i < hypers.noise_std.size(); ++i) hypers.noise_std[i] = dof[1];
        for (double& v : hypers.l2) v = dof[2];
        return;
    }
    if (dof.size() != hypers.noise_std.size() + hypers.l2.size())
        fail(ErrorKind::contract, "unpack_dof: per-layer layout size mismatch");
    std::copy(dof.begin(), dof.begin() + hypers.noise_std.size(), hypers.noise_std.begin());
    std::copy(dof.begin() + hypers.noise_std.size(), dof.end(), hypers.l2.begin());
}

std::vector<double> reduce_gradient_to_dof(const HyperParams& hypers, const std::vector<double>& noise_grad,
                                           const std::vector<double>& l2_grad) {
    if (hypers.layout == HyperLayout::tied) {
        const TiedGradient g = reduce_tied(hypers, noise_grad, l2_grad);
        return {g.noise_input, g.noise_hidden, g.l2};
    }
    std::vector<double> dof = noise_grad;
    dof.insert(dof.end(), l2_grad.begin(), l2_grad.end());
    return dof;
}

bool dof_is_noise(const HyperParams& hypers, std::size_t dof_index) {
    if (hypers.layout == HyperLayout::tied) return dof_index < 2;
    return dof_index < hypers.noise_std.size();
}

std::vector<std::string> hyper_column_names(const HyperParams& hypers) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < hypers.noise_std.size(); ++i) names.push_back("noise_" + std::to_string(i));
    for (std::size_t i = 0; i < hypers.l2.size(); ++i) names.push_back("l2_" + std::to_string(i + 1));
    return names;
}

}  // namespace t1t2
