#pragma once

#include <span>

#include "kinn/graph.hpp"

namespace kinn {

struct LossSpec {
    enum class Kind { mse, kinematic };

    Kind kind = Kind::mse;
    int t_f = 0;                        // forecast horizon, required for kinematic
    bool velocity_supervision = false;  // optional direct velocity error term
    double consistency_weight = 1.0;    // weight on the velocity-consistency term

    static LossSpec mse() { return LossSpec{}; }
    static LossSpec kinematic(int t_f) {
        return LossSpec{.kind = Kind::kinematic, .t_f = t_f};
    }
};

// Mean of squared componentwise differences.
double mse_loss(std::span<const double> pred, std::span<const double> target);

// Two-term loss over a value/velocity layout [v_1..v_Tf, e_1..e_{Tf-1}]:
// mean squared value error plus mean squared violation of
// v_t = v_{t-1} + e_{t-1}. Velocities enter supervision only when
// spec.velocity_supervision is set.
double kinematic_loss(std::span<const double> pred, std::span<const double> target,
                      const LossSpec& spec);

// Graph-fragment builders; pred/target must be BxN nodes with matching N.
// The appended subgraph evaluates to the batch-mean loss as a 1x1 node.
ad::NodeId append_mse_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target);
ad::NodeId append_kinematic_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target,
                                 const LossSpec& spec);
ad::NodeId append_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target, const LossSpec& spec);

}  // namespace kinn
