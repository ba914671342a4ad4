#ifndef T1T2_REGULARIZATION_HPP
#define T1T2_REGULARIZATION_HPP

#include <string>
#include <vector>

#include "t1t2/params.hpp"

namespace t1t2 {

enum class HyperLayout { tied, per_layer };

// Regularization hyperparameters for a net with W weight matrices:
//   noise_std[i], i = 0..W-1 : additive-noise std on the input of weight
//                              layer i+1 (index 0 = input noise, the rest
//                              hidden-activation noise)
//   l2[i],        i = 0..W-1 : L2 strength for weight matrix i+1
// Values are stored expanded per layer in both layouts; the tied layout
// constrains hidden noise entries to one shared value and all L2 entries to
// another, which reduce_tied/pack_dof expose as single trainable slots.
struct HyperParams {
    std::vector<double> noise_std;
    std::vector<double> l2;
    HyperLayout layout = HyperLayout::tied;

    std::size_t layer_count() const { return l2.size(); }
};

HyperParams make_hypers(std::size_t weight_layers, double noise_input, double noise_hidden, double l2,
                        HyperLayout layout);

// Componentwise max(value, 0); idempotent.
HyperParams project(HyperParams hypers);
bool feasible(const HyperParams& hypers);

struct L2Result {
    double penalty = 0.0;  // sum_l (lambda_l / 2) ||w_l||^2
    ParamSet grad;         // lambda_l * w_l on weights, zero elsewhere
};

// Penalty covers weights only; biases and batch-norm gamma/beta are excluded.
L2Result l2_penalty_and_grad(const ParamSet& params, const HyperParams& hypers);

// Adds the penalty gradient into `grad` and returns the penalty value.
double add_l2_gradient(const ParamSet& params, const HyperParams& hypers, ParamSet& grad);

struct PerLayerHypers {
    std::vector<double> noise_std;
    std::vector<double> l2;
};

// Broadcast view of a tied layout; contract error on per-layer layout.
PerLayerHypers expand_tied(const HyperParams& hypers);

struct TiedGradient {
    double noise_input = 0.0;
    double noise_hidden = 0.0;  // sum over hidden sites (chain rule for the shared value)
    double l2 = 0.0;            // sum over weight matrices
};

// Sums per-layer hypergradients into the tied slots; contract error on
// per-layer layout.
TiedGradient reduce_tied(const HyperParams& hypers, const std::vector<double>& noise_grad,
                         const std::vector<double>& l2_grad);

// --- trainable degrees of freedom -------------------------------------------
// per_layer: noise_0..noise_{W-1}, l2_1..l2_W
// tied:      noise_0, noise_hidden, l2
std::vector<std::string> hyper_dof_names(const HyperParams& hypers);
std::vector<double> pack_dof(const HyperParams& hypers);
void unpack_dof(const std::vector<double>& dof, HyperParams& hypers);
std::vector<double> reduce_gradient_to_dof(const HyperParams& hypers, const std::vector<double>& noise_grad,
                                           const std::vector<double>& l2_grad);
bool dof_is_noise(const HyperParams& hypers, std::size_t dof_index);

// Per-layer column names used by trajectory CSVs regardless of layout.
std::vector<std::string> hyper_column_names(const HyperParams& hypers);

}  // namespace t1t2

#endif
