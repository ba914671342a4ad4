#include "t1t2/network.hpp"

#include <cmath>
#include <string>

#include "t1t2/error.hpp"

namespace t1t2 {

namespace {

void mul_row_inplace(Tensor& m, const Tensor& row) {
    const std::size_t rows = m.rows(), n = m.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        double* pm = m.data() + i * n;
        const double* pr = row.data();
        for (std::size_t j = 0; j < n; ++j) pm[j] *= pr[j];
    }
}

void sub_row_inplace(Tensor& m, const Tensor& row) {
    const std::size_t rows = m.rows(), n = m.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        double* pm = m.data() + i * n;
        const double* pr = row.data();
        for (std::size_t j = 0; j < n; ++j) pm[j] -= pr[j];
    }
}

Tensor mul_row(const Tensor& m, const Tensor& row) {
    Tensor out = m;
    mul_row_inplace(out, row);
    return out;
}

// m[b,j] += scale_row[j] * x[b,j]
void add_col_scaled(Tensor& m, const Tensor& scale_row, const Tensor& x) {
    const std::size_t rows = m.rows(), n = m.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        double* pm = m.data() + i * n;
        const double* px = x.data() + i * n;
        const double* ps = scale_row.data();
        for (std::size_t j = 0; j < n; ++j) pm[j] += ps[j] * px[j];
    }
}

// Batch-statistics normalization backward:
//   delta_z = (r/B) * (B*dzh - sum_b dzh - zhat * sum_b(dzh .* zhat))
Tensor bn_delta_z_batch(const Tensor& dzh, const Tensor& zhat, const Tensor& r) {
    const std::size_t batch = dzh.rows(), n = dzh.cols();
    const Tensor s1 = col_sum(dzh);
    const Tensor s2 = col_sum(hadamard(dzh, zhat));
    Tensor dz({batch, n});
    const double b = static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        double* pd = dz.data() + i * n;
        const double* pz = dzh.data() + i * n;
        const double* ph = zhat.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) pd[j] = r[j] / b * (b * pz[j] - s1[j] - ph[j] * s2[j]);
    }
    return dz;
}

void require_match(const ForwardTrace& trace, const ModelParams& params, const char* who) {
    if (trace.layer_count() != params.layer_count())
        fail(ErrorKind::internal, std::string(who) + ": trace/params layer mismatch");
    const bool trace_bn = !trace.zhat.empty();
    if (trace_bn != params.batch_norm())
        fail(ErrorKind::internal, std::string(who) + ": trace/params batch-norm mismatch");
}

struct TangentSeed {
    int noise_site = -1;           // active when param_dir is null
    const ParamSet* param_dir = nullptr;
};

struct TangentOutputs {
    ModelParams grad_tangent;
    std::vector<Tensor> site_tangents;
};

// Shared forward-over-reverse sweep: directional derivative of the recorded
// forward + reverse computation, either along a noise std (seed tangent
// e[site] on h[site], parameters fixed) or along a parameter direction.
// Empty tensors stand for structurally-zero tangents.
TangentOutputs tangent_sweep(const ForwardTrace& tr, const ModelParams& params, const LossAdjoint& loss,
                             const BackwardCache& cache, const TangentSeed& seed, bool want_grads, bool want_sites,
                             PassCounters* counters) {
    const std::size_t W = tr.layer_count();
    const bool param_mode = seed.param_dir != nullptr;

    if (tr.mode != ForwardMode::train_noisy)
        fail(ErrorKind::contract, "tangent pass requires a train_noisy trace");
    if (!tr.zhat.empty() && !tr.batch_stats)
        fail(ErrorKind::contract, "tangent pass requires batch-statistics normalization");
    if (!param_mode && (seed.noise_site < 0 || static_cast<std::size_t>(seed.noise_site) >= W))
        fail(ErrorKind::input, "tangent: noise site " + std::to_string(seed.noise_site) + " out of range [0," +
                                   std::to_string(W) + ")");
    if (!param_mode && tr.e.empty())
        fail(ErrorKind::contract, "tangent: trace carries no recorded noise draws");
    if (cache.delta_z.size() != W) fail(ErrorKind::internal, "tangent: backward cache missing");

    const std::size_t batch = tr.h[0].rows();
    const double b = static_cast<double>(batch);

    // ---- forward tangent sweep ----
    std::vector<Tensor> hdot(W), zhat_dot(W), rdot(W);
    const std::size_t start = param_mode ? 0 : static_cast<std::size_t>(seed.noise_site);
    if (!param_mode) hdot[start] = tr.e[start];

    Tensor logits_dot;
    for (std::size_t i = start; i < W; ++i) {
        Tensor zdot;
        if (!hdot[i].empty()) zdot = matmul(hdot[i], params.w[i]);
        if (param_mode) {
            Tensor t = matmul(tr.h[i], seed.param_dir->w[i]);
            add_row_vector_inplace(t, seed.param_dir->b[i]);
            if (zdot.empty())
                zdot = std::move(t);
            else
                axpy_inplace(zdot, 1.0, t);
        }

        Tensor ydot;
        if (tr.bn_hidden(i)) {
            const Tensor& r = tr.inv_std[i];
            const Tensor mudot = col_mean(zdot);
            Tensor cdot = zdot;
            sub_row_inplace(cdot, mudot);
            Tensor c = tr.z[i];
            sub_row_inplace(c, tr.mu[i]);
            Tensor vdot = col_mean(hadamard(c, cdot));
            scale_inplace(vdot, 2.0);
            Tensor rd({r.numel()});
            for (std::size_t j = 0; j < rd.numel(); ++j) rd[j] = -0.5 * r[j] * r[j] * r[j] * vdot[j];
            // zhat_dot = cdot * r + c * rd
            Tensor zh_dot = mul_row(cdot, r);
            add_col_scaled(zh_dot, rd, c);
            ydot = mul_row(zh_dot, params.gamma[i]);
            if (param_mode) {
                add_col_scaled(ydot, seed.param_dir->gamma[i], tr.zhat[i]);
                add_row_vector_inplace(ydot, seed.param_dir->beta[i]);
            }
            zhat_dot[i] = std::move(zh_dot);
            rdot[i] = std::move(rd);
        } else {
            ydot = std::move(zdot);
        }

        if (i + 1 < W) {
            hdot[i + 1] = relu_backward(tr.pre_act(i), ydot);  // mask by relu-active entries
        } else {
            logits_dot = std::move(ydot);
        }
    }

    // ---- loss-gradient tangent ----
    Tensor updot = loss.grad_jvp(tr.logits, logits_dot);

    // ---- reverse tangent sweep ----
    TangentOutputs out;
    if (want_grads) out.grad_tangent = zeros_like(params);
    if (want_sites) out.site_tangents.resize(W);

    for (std::size_t i = W; i-- > 0;) {
        Tensor dzdot;
        if (tr.bn_hidden(i)) {
            const Tensor& zhat = tr.zhat[i];
            const Tensor& r = tr.inv_std[i];
            const Tensor& dy = cache.delta_y[i];
            const Tensor dzh = mul_row(dy, params.gamma[i]);
            const Tensor s1 = col_sum(dzh);
            const Tensor s2 = col_sum(hadamard(dzh, zhat));

            Tensor dzh_dot = mul_row(updot, params.gamma[i]);
            if (param_mode) add_col_scaled(dzh_dot, seed.param_dir->gamma[i], dy);
            const Tensor s1_dot = col_sum(dzh_dot);
            Tensor s2_prod = hadamard(dzh_dot, zhat);
            if (!zhat_dot[i].empty()) axpy_inplace(s2_prod, 1.0, hadamard(dzh, zhat_dot[i]));
            const Tensor s2_dot = col_sum(s2_prod);

            const bool have_fwd = !rdot[i].empty();
            const std::size_t n = zhat.cols();
            dzdot = Tensor({batch, n});
            for (std::size_t bi = 0; bi < batch; ++bi) {
                double* pd = dzdot.data() + bi * n;
                const double* pzh = zhat.data() + bi * n;
                const double* pdzh = dzh.data() + bi * n;
                const double* pdzh_dot = dzh_dot.data() + bi * n;
                const double* pzh_dot = have_fwd ? zhat_dot[i].data() + bi * n : nullptr;
                for (std::size_t j = 0; j < n; ++j) {
                    double v = r[j] / b * (b * pdzh_dot[j] - s1_dot[j] - pzh[j] * s2_dot[j]);
                    if (have_fwd) {
                        v += rdot[i][j] / b * (b * pdzh[j] - s1[j] - pzh[j] * s2[j]);
                        v -= r[j] / b * pzh_dot[j] * s2[j];
                    }
                    pd[j] = v;
                }
            }

            if (want_grads) {
                Tensor dgamma = hadamard(updot, zhat);
                if (!zhat_dot[i].empty()) axpy_inplace(dgamma, 1.0, hadamard(dy, zhat_dot[i]));
                out.grad_tangent.gamma[i] = col_sum(dgamma);
                out.grad_tangent.beta[i] = col_sum(updot);
            }
        } else {
            dzdot = std::move(updot);
        }

        if (want_grads) {
            Tensor dw = matmul_tn(tr.h[i], dzdot);
            if (!hdot[i].empty()) axpy_inplace(dw, 1.0, matmul_tn(hdot[i], cache.delta_z[i]));
            out.grad_tangent.w[i] = std::move(dw);
            out.grad_tangent.b[i] = col_sum(dzdot);
        }

        if (i > 0 || want_sites) {
            Tensor dh_dot = matmul_nt(dzdot, params.w[i]);
            if (param_mode) axpy_inplace(dh_dot, 1.0, matmul_nt(cache.delta_z[i], seed.param_dir->w[i]));
            if (i > 0) updot = relu_backward(tr.pre_act(i - 1), dh_dot);
            if (want_sites) out.site_tangents[i] = std::move(dh_dot);
        }
    }

    if (counters) ++counters->tangent;
    return out;
}

}  // namespace

LossAdjoint softmax_xent_adjoint(std::vector<int> labels) {
    LossAdjoint adj;
    adj.grad = [labels](const Tensor& logits) { return softmax_xent(logits, labels).grad_logits; };
    adj.grad_jvp = [](const Tensor& logits, const Tensor& logits_dot) {
        return softmax_xent_grad_jvp(logits, logits_dot);
    };
    return adj;
}

ModelParams init_params(const std::vector<std::size_t>& layer_sizes, bool batch_norm, RngStream& rng) {
    if (layer_sizes.size() < 3)
        fail(ErrorKind::config, "init_params: need at least one hidden layer (got " +
                                    std::to_string(layer_sizes.size()) + " layer sizes)");
    for (std::size_t n : layer_sizes)
        if (n == 0) fail(ErrorKind::config, "init_params: zero-width layer");
    ModelParams p;
    const std::size_t W = layer_sizes.size() - 1;
    for (std::size_t i = 0; i < W; ++i) {
        const std::size_t fan_in = layer_sizes[i], fan_out = layer_sizes[i + 1];
        Tensor w({fan_in, fan_out});
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : w.vec()) v = std_dev * rng.normal();
        p.w.push_back(std::move(w));
        p.b.push_back(Tensor({fan_out}));
    }
    if (batch_norm) {
        for (std::size_t i = 0; i + 1 < W; ++i) {
            p.gamma.push_back(Tensor::full({layer_sizes[i + 1]}, 1.0));
            p.beta.push_back(Tensor({layer_sizes[i + 1]}));
        }
    }
    return p;
}

BatchNormState init_bn_state(const std::vector<std::size_t>& layer_sizes, bool batch_norm) {
    BatchNormState bn;
    if (!batch_norm) return bn;
    for (std::size_t i = 1; i + 1 < layer_sizes.size(); ++i) {
        bn.running_mean.push_back(Tensor({layer_sizes[i]}));
        bn.running_var.push_back(Tensor::full({layer_sizes[i]}, 1.0));
    }
    return bn;
}

std::vector<Tensor> draw_noise(RngStream& rng, const ModelParams& params, std::size_t batch) {
    std::vector<Tensor> noise;
    noise.reserve(params.layer_count());
    for (std::size_t i = 0; i < params.layer_count(); ++i)
        noise.push_back(gaussian(rng, {batch, params.w[i].shape()[0]}));
    return noise;
}

namespace {

ForwardTrace forward_impl(const ModelParams& params, const Tensor& x, const std::vector<double>& sigma,
                          const std::vector<Tensor>* noise, BatchNormState* bn_state, bool batch_stats,
                          bool update_running, ForwardMode mode, PassCounters* counters) {
    const std::size_t W = params.layer_count();
    if (x.shape().size() != 2 || x.shape()[1] != params.w[0].shape()[0])
        fail(ErrorKind::dimension,
             "forward: input " + shape_str(x) + " does not match layer 0 fan-in " +
                 std::to_string(params.w[0].shape()[0]));
    if (params.batch_norm() && bn_state == nullptr)
        fail(ErrorKind::contract, "forward: model has batch norm but no state was given");

    ForwardTrace tr;
    tr.mode = mode;
    tr.batch_stats = batch_stats;
    tr.sigma = sigma;
    tr.a.resize(W);
    tr.h.resize(W);
    tr.z.resize(W);
    if (noise) tr.e = *noise;
    if (params.batch_norm()) {
        tr.y.resize(W);
        tr.zhat.resize(W > 0 ? W - 1 : 0);
        tr.mu.resize(W - 1);
        tr.var.resize(W - 1);
        tr.inv_std.resize(W - 1);
    }

    tr.a[0] = x;
    for (std::size_t i = 0; i < W; ++i) {
        tr.h[i] = tr.a[i];
        if (noise) {
            if (tr.e[i].shape() != tr.a[i].shape())
                fail(ErrorKind::dimension, "forward: noise draw shape mismatch at site " + std::to_string(i));
            if (sigma[i] != 0.0) axpy_inplace(tr.h[i], sigma[i], tr.e[i]);
        }

        tr.z[i] = matmul(tr.h[i], params.w[i]);
        add_row_vector_inplace(tr.z[i], params.b[i]);

        if (params.batch_norm() && i + 1 < W) {
            Tensor mu, var;
            if (batch_stats) {
                mu = col_mean(tr.z[i]);
                Tensor c = tr.z[i];
                sub_row_inplace(c, mu);
                var = col_mean(hadamard(c, c));
                if (update_running) {
                    const double m = bn_state->momentum;
                    scale_inplace(bn_state->running_mean[i], 1.0 - m);
                    axpy_inplace(bn_state->running_mean[i], m, mu);
                    scale_inplace(bn_state->running_var[i], 1.0 - m);
                    axpy_inplace(bn_state->running_var[i], m, var);
                }
            } else {
                mu = bn_state->running_mean[i];
                var = bn_state->running_var[i];
            }
            Tensor r({var.numel()});
            for (std::size_t j = 0; j < r.numel(); ++j) r[j] = 1.0 / std::sqrt(var[j] + bn_state->epsilon);
            Tensor zhat = tr.z[i];
            sub_row_inplace(zhat, mu);
            mul_row_inplace(zhat, r);
            Tensor y = mul_row(zhat, params.gamma[i]);
            add_row_vector_inplace(y, params.beta[i]);
            tr.mu[i] = std::move(mu);
            tr.var[i] = std::move(var);
            tr.inv_std[i] = std::move(r);
            tr.zhat[i] = std::move(zhat);
            tr.y[i] = std::move(y);
        }

        const Tensor& pre = tr.pre_act(i);
        check_finite(pre, "forward activation at layer " + std::to_string(i));
        if (i + 1 < W) tr.a[i + 1] = relu(pre);
    }
    tr.logits = tr.pre_act(W - 1);
    if (counters) ++counters->forward;
    return tr;
}

}  // namespace

ForwardTrace forward_noisy(const ModelParams& params, const Tensor& x, const HyperParams& hypers,
                           const std::vector<Tensor>& noise, BatchNormState* bn_state, bool update_running,
                           PassCounters* counters) {
    if (hypers.noise_std.size() != params.layer_count())
        fail(ErrorKind::contract, "forward_noisy: hyper layout does not match model");
    if (noise.size() != params.layer_count())
        fail(ErrorKind::contract, "forward_noisy: need one noise draw per site");
    return forward_impl(params, x, hypers.noise_std, &noise, bn_state, /*batch_stats=*/true, update_running,
                        ForwardMode::train_noisy, counters);
}

ForwardTrace forward_clean(const ModelParams& params, const Tensor& x, const BatchNormState* bn_state,
                           bool use_batch_stats, PassCounters* counters) {
    std::vector<double> sigma(params.layer_count(), 0.0);
    return forward_impl(params, x, sigma, nullptr, const_cast<BatchNormState*>(bn_state), use_batch_stats,
                        /*update_running=*/false, ForwardMode::eval_clean, counters);
}

ForwardTrace forward(const ModelParams& params, const Tensor& x, const HyperParams& hypers, ForwardMode mode,
                     RngStream* rng, BatchNormState* bn_state, bool update_running, PassCounters* counters) {
    if (mode == ForwardMode::eval_clean) return forward_clean(params, x, bn_state, false, counters);
    if (!rng) fail(ErrorKind::contract, "forward: train_noisy requires an rng stream");
    const std::vector<Tensor> noise = draw_noise(*rng, params, x.rows());
    return forward_noisy(params, x, hypers, noise, bn_state, update_running, counters);
}

ModelParams backward(const ForwardTrace& trace, const ModelParams& params, const Tensor& grad_logits,
                     PassCounters* counters, BackwardCache* cache) {
    require_match(trace, params, "backward");
    if (!grad_logits.same_shape(trace.logits))
        fail(ErrorKind::internal, "backward: grad_logits shape " + shape_str(grad_logits) +
                                      " does not match logits " + shape_str(trace.logits));
    const std::size_t W = trace.layer_count();
    ModelParams grads = zeros_like(params);
    if (cache) {
        cache->grad_logits = grad_logits;
        cache->delta_z.assign(W, Tensor());
        cache->delta_y.assign(W, Tensor());
        cache->delta_h.assign(W, Tensor());
    }

    Tensor upstream = grad_logits;
    for (std::size_t i = W; i-- > 0;) {
        if (cache) cache->delta_y[i] = upstream;
        Tensor dz;
        if (trace.bn_hidden(i)) {
            grads.gamma[i] = col_sum(hadamard(upstream, trace.zhat[i]));
            grads.beta[i] = col_sum(upstream);
            Tensor dzh = mul_row(upstream, params.gamma[i]);
            if (trace.batch_stats) {
                dz = bn_delta_z_batch(dzh, trace.zhat[i], trace.inv_std[i]);
            } else {
                mul_row_inplace(dzh, trace.inv_std[i]);
                dz = std::move(dzh);
            }
        } else {
            dz = std::move(upstream);
        }

        grads.w[i] = matmul_tn(trace.h[i], dz);
        grads.b[i] = col_sum(dz);

        if (i > 0 || cache) {
            Tensor dh = matmul_nt(dz, params.w[i]);
            if (cache) cache->delta_h[i] = dh;
            if (i > 0) upstream = relu_backward(trace.pre_act(i - 1), dh);
        }
        if (cache) cache->delta_z[i] = std::move(dz);
    }
    if (counters) ++counters->backward;
    return grads;
}

ModelParams tangent_grad_wrt_sigma(const ForwardTrace& trace, const ModelParams& params, const LossAdjoint& loss,
                                   std::size_t site, PassCounters* counters, const BackwardCache* cache) {
    require_match(trace, params, "tangent_grad_wrt_sigma");
    BackwardCache local;
    if (!cache) {
        const Tensor g = loss.grad(trace.logits);
        backward(trace, params, g, counters, &local);
        cache = &local;
    }
    TangentSeed seed;
    seed.noise_site = static_cast<int>(site);
    return tangent_sweep(trace, params, loss, *cache, seed, /*want_grads=*/true, /*want_sites=*/false, counters)
        .grad_tangent;
}

std::vector<Tensor> param_direction_tangent(const ForwardTrace& trace, const ModelParams& params,
                                            const ParamSet& dir, const LossAdjoint& loss, const BackwardCache& cache,
                                            PassCounters* counters) {
    require_match(trace, params, "param_direction_tangent");
    if (!same_shapes(dir, params)) fail(ErrorKind::internal, "param_direction_tangent: direction shape mismatch");
    TangentSeed seed;
    seed.param_dir = &dir;
    return tangent_sweep(trace, params, loss, cache, seed, /*want_grads=*/false, /*want_sites=*/true, counters)
        .site_tangents;
}

}  // namespace t1t2
