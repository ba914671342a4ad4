#ifndef T1T2_OPTIM_HPP
#define T1T2_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "t1t2/params.hpp"

namespace t1t2 {

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    ParamSet m, v;
    std::uint64_t t = 0;
};

struct AdamVecState {
    std::vector<double> m, v;
    std::uint64_t t = 0;
};

// values <- values - step * grad. Throws on non-finite updates.
void sgd_step(ParamSet& values, const ParamSet& grad, double step);
void sgd_step(std::vector<double>& values, const std::vector<double>& grad, double step);

// Bias-corrected Adam; step_override < 0 means "use config.step_size"
// (the annealed schedule passes the per-epoch value).
void adam_step(AdamState& state, const AdamConfig& config, ParamSet& values, const ParamSet& grad,
               double step_override = -1.0);
void adam_step(AdamVecState& state, const AdamConfig& config, std::vector<double>& values,
               const std::vector<double>& grad, double step_override = -1.0);

// Constant until anneal_start * total_epochs, then linear decay reaching 0 at
// epoch == total_epochs. anneal_start == 1 disables the decay.
double anneal(double base_step, std::size_t epoch, std::size_t total_epochs, double anneal_start);

// True iff this elementary step (1-based) triggers a hyperparameter update.
bool due_for_hyper_update(std::uint64_t step, std::uint64_t interval);

}  // namespace t1t2

#endif
