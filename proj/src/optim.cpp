#include "t1t2/optim.hpp"

#include <cmath>

#include "t1t2/error.hpp"

namespace t1t2 {

namespace {

void sgd_tensor(Tensor& v, const Tensor& g, double step) {
    double* pv = v.data();
    const double* pg = g.data();
    for (std::size_t i = 0; i < v.numel(); ++i) {
        pv[i] -= step * pg[i];
        if (!std::isfinite(pv[i])) fail(ErrorKind::numeric, "sgd_step: non-finite update");
    }
}

void adam_tensor(Tensor& m, Tensor& v, Tensor& values, const Tensor& g, const AdamConfig& c, double corr1,
                 double corr2, double step) {
    double* pm = m.data();
    double* pv = v.data();
    double* px = values.data();
    const double* pg = g.data();
    for (std::size_t i = 0; i < values.numel(); ++i) {
        pm[i] = c.beta1 * pm[i] + (1.0 - c.beta1) * pg[i];
        pv[i] = c.beta2 * pv[i] + (1.0 - c.beta2) * pg[i] * pg[i];
        const double mhat = pm[i] / corr1;
        const double vhat = pv[i] / corr2;
        px[i] -= step * mhat / (std::sqrt(vhat) + c.epsilon);
        if (!std::isfinite(px[i])) fail(ErrorKind::numeric, "adam_step: non-finite update");
    }
}

}  // namespace

void sgd_step(ParamSet& values, const ParamSet& grad, double step) {
    for (std::size_t i = 0; i < values.w.size(); ++i) {
        sgd_tensor(values.w[i], grad.w[i], step);
        sgd_tensor(values.b[i], grad.b[i], step);
    }
    for (std::size_t i = 0; i < values.gamma.size(); ++i) {
        sgd_tensor(values.gamma[i], grad.gamma[i], step);
        sgd_tensor(values.beta[i], grad.beta[i], step);
    }
}

void sgd_step(std::vector<double>& values, const std::vector<double>& grad, double step) {
    if (values.size() != grad.size()) fail(ErrorKind::contract, "sgd_step: size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] -= step * grad[i];
        if (!std::isfinite(values[i])) fail(ErrorKind::numeric, "sgd_step: non-finite update");
    }
}

void adam_step(AdamState& state, const AdamConfig& config, ParamSet& values, const ParamSet& grad,
               double step_override) {
    if (state.t == 0) {
        state.m = zeros_like(values);
        state.v = zeros_like(values);
    }
    ++state.t;
    const double corr1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    const double step = step_override < 0.0 ? config.step_size : step_override;
    for (std::size_t i = 0; i < values.w.size(); ++i) {
        adam_tensor(state.m.w[i], state.v.w[i], values.w[i], grad.w[i], config, corr1, corr2, step);
        adam_tensor(state.m.b[i], state.v.b[i], values.b[i], grad.b[i], config, corr1, corr2, step);
    }
    for (std::size_t i = 0; i < values.gamma.size(); ++i) {
        adam_tensor(state.m.gamma[i], state.v.gamma[i], values.gamma[i], grad.gamma[i], config, corr1, corr2, step);
        adam_tensor(state.m.beta[i], state.v.beta[i], values.beta[i], grad.beta[i], config, corr1, corr2, step);
    }
}

void adam_step(AdamVecState& state, const AdamConfig& config, std::vector<double>& values,
               const std::vector<double>& grad, double step_override) {
    if (values.size() != grad.size()) fail(ErrorKind::contract, "adam_step: size mismatch");
    if (state.t == 0) {
        state.m.assign(values.size(), 0.0);
        state.v.assign(values.size(), 0.0);
    }
    ++state.t;
    const double corr1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    const double step = step_override < 0.0 ? config.step_size : step_override;
    for (std::size_t i = 0; i < values.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        values[i] -= step * (state.m[i] / corr1) / (std::sqrt(state.v[i] / corr2) + config.epsilon);
        if (!std::isfinite(values[i])) fail(ErrorKind::numeric, "adam_step: non-finite update");
    }
}

double anneal(double base_step, std::size_t epoch, std::size_t total_epochs, double anneal_start) {
    if (anneal_start < 0.0 || anneal_start > 1.0)
        fail(ErrorKind::config, "anneal: start fraction must be in [0, 1]");
    if (epoch > total_epochs) fail(ErrorKind::config, "anneal: epoch past total");
    const double start = anneal_start * static_cast<double>(total_epochs);
    if (static_cast<double>(epoch) <= start || start >= static_cast<double>(total_epochs)) return base_step;
    return base_step * (static_cast<double>(total_epochs) - static_cast<double>(epoch)) /
           (static_cast<double>(total_epochs) - start);
}

bool due_for_hyper_update(std::uint64_t step, std::uint64_t interval) {
    if (interval == 0) fail(ErrorKind::config, "hyper update interval must be >= 1");
    return step % interval == 0;
}

}  // namespace t1t2
