#ifndef T1T2_NETWORK_HPP
#define T1T2_NETWORK_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "t1t2/params.hpp"
#include "t1t2/regularization.hpp"
#include "t1t2/rng.hpp"
#include "t1t2/tensor.hpp"

namespace t1t2 {

// Elementary parameters of an MLP with layer_sizes = [n_0, ..., n_W]:
// w[i] is n_i x n_{i+1}, b[i] is n_{i+1}. With batch norm, gamma/beta cover
// hidden layers only (i = 0..W-2); the logits layer is never normalized.
using ModelParams = ParamSet;

struct BatchNormState {
    std::vector<Tensor> running_mean;  // one per hidden layer
    std::vector<Tensor> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    bool enabled() const { return !running_mean.empty(); }
};

enum class ForwardMode { train_noisy, eval_clean };

struct PassCounters {
    std::uint64_t forward = 0;
    std::uint64_t backward = 0;
    std::uint64_t tangent = 0;
};

// Everything backward and the tangent passes need. Index i runs over weight
// layers 0..W-1; noise site i is the input of weight layer i (site 0 = data).
struct ForwardTrace {
    ForwardMode mode = ForwardMode::train_noisy;
    bool batch_stats = false;        // normalization used batch statistics
    std::vector<double> sigma;       // noise stds applied (zeros in eval_clean)
    std::vector<Tensor> a;           // pre-noise input per site (a[0] = x)
    std::vector<Tensor> e;           // recorded noise draws (empty in eval_clean)
    std::vector<Tensor> h;           // post-noise input per site
    std::vector<Tensor> z;           // pre-normalization preactivations
    std::vector<Tensor> y;           // post-gamma/beta values (empty when bn off)
    std::vector<Tensor> zhat;        // normalized preactivations (bn only)
    std::vector<Tensor> mu, var;     // statistics used for normalization (bn only)
    std::vector<Tensor> inv_std;     // 1/sqrt(var + epsilon), cached for backward
    Tensor logits;

    std::size_t layer_count() const { return z.size(); }
    bool bn_hidden(std::size_t i) const { return !zhat.empty() && i + 1 < z.size(); }
    // Input of the ReLU (and of the logits): post-bn when normalized.
    const Tensor& pre_act(std::size_t i) const { return bn_hidden(i) ? y[i] : z[i]; }
};

// Primal reverse-pass quantities reused by the tangent passes.
struct BackwardCache {
    Tensor grad_logits;
    std::vector<Tensor> delta_z;  // adjoint of z[i]
    std::vector<Tensor> delta_y;  // adjoint of pre_act(i) entering layer i's local backward
    std::vector<Tensor> delta_h;  // adjoint of h[i] (noise-site adjoints)
};

// Loss interface: primal gradient wrt logits and its directional derivative.
struct LossAdjoint {
    std::function<Tensor(const Tensor& logits)> grad;
    std::function<Tensor(const Tensor& logits, const Tensor& logits_dot)> grad_jvp;
};
LossAdjoint softmax_xent_adjoint(std::vector<int> labels);

ModelParams init_params(const std::vector<std::size_t>& layer_sizes, bool batch_norm, RngStream& rng);
BatchNormState init_bn_state(const std::vector<std::size_t>& layer_sizes, bool batch_norm);

// One standard-normal tensor per noise site, always drawn for every site so
// the hypergradient is defined at sigma = 0 and replays are exact.
std::vector<Tensor> draw_noise(RngStream& rng, const ModelParams& params, std::size_t batch);

// Core forward with caller-provided noise (used directly by FD replay).
// bn_state may be null when the model has no batch norm. In train mode batch
// statistics are used (and pushed into bn_state only when update_running).
ForwardTrace forward_noisy(const ModelParams& params, const Tensor& x, const HyperParams& hypers,
                           const std::vector<Tensor>& noise, BatchNormState* bn_state, bool update_running,
                           PassCounters* counters = nullptr);

// Deterministic clean pass: no noise; bn normalizes with running statistics
// unless use_batch_stats is set.
ForwardTrace forward_clean(const ModelParams& params, const Tensor& x, const BatchNormState* bn_state,
                           bool use_batch_stats = false, PassCounters* counters = nullptr);

// Mode-switch wrapper: train_noisy draws noise from rng, eval_clean ignores it.
ForwardTrace forward(const ModelParams& params, const Tensor& x, const HyperParams& hypers, ForwardMode mode,
                     RngStream* rng, BatchNormState* bn_state, bool update_running = true,
                     PassCounters* counters = nullptr);

// Exact reverse-mode gradient of the loss whose logit-gradient is grad_logits,
// with respect to every elementary parameter. The L2 term is not included
// here; add_l2_gradient layers it on.
ModelParams backward(const ForwardTrace& trace, const ModelParams& params, const Tensor& grad_logits,
                     PassCounters* counters = nullptr, BackwardCache* cache = nullptr);

// Directional derivative of the full parameter gradient with respect to the
// noise std at `site`, for the fixed draw recorded in the trace
// (forward-over-reverse, seed tangent = e[site]). Falls back to recomputing
// the primal reverse pass when no cache is supplied.
ModelParams tangent_grad_wrt_sigma(const ForwardTrace& trace, const ModelParams& params, const LossAdjoint& loss,
                                   std::size_t site, PassCounters* counters = nullptr,
                                   const BackwardCache* cache = nullptr);

// Parameter-direction tangent (R_dir) through forward and reverse passes,
// returning the tangent of the noise-site adjoint delta_h at every site in a
// single pass. dot(site_tangents[l], e[l]) is the noise hypergradient for
// sigma_l when dir is the validation gradient.
std::vector<Tensor> param_direction_tangent(const ForwardTrace& trace, const ModelParams& params,
                                            const ParamSet& dir, const LossAdjoint& loss, const BackwardCache& cache,
                                            PassCounters* counters = nullptr);

}  // namespace t1t2

#endif
