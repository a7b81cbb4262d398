#include "kinn/loss.hpp"

#include <stdexcept>
#include <string>

namespace kinn {

namespace {

void check_lengths(std::size_t pred, std::size_t target) {
    if (pred != target) {
        throw std::invalid_argument("loss: prediction length " + std::to_string(pred) +
                                    " != target length " + std::to_string(target));
    }
}

void check_kinematic(const LossSpec& spec, std::size_t n) {
    if (spec.t_f < 2) {
        throw std::invalid_argument("kinematic loss: horizon must be at least 2");
    }
    const auto expected = static_cast<std::size_t>(2 * spec.t_f - 1);
    if (n != expected) {
        throw std::invalid_argument("kinematic loss: vector length " + std::to_string(n) +
                                    " != 2*T_f-1 = " + std::to_string(expected));
    }
}

}  // namespace

double mse_loss(std::span<const double> pred, std::span<const double> target) {
    check_lengths(pred.size(), target.size());
    if (pred.empty()) throw std::invalid_argument("loss: empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double kinematic_loss(std::span<const double> pred, std::span<const double> target,
                      const LossSpec& spec) {
    check_lengths(pred.size(), target.size());
    check_kinematic(spec, pred.size());
    const std::size_t tf = static_cast<std::size_t>(spec.t_f);

    double value_term = 0.0;
    for (std::size_t t = 0; t < tf; ++t) {
        const double d = pred[t] - target[t];
        value_term += d * d;
    }
    value_term /= static_cast<double>(tf);

    double consistency_term = 0.0;
    for (std::size_t t = 1; t < tf; ++t) {
        const double d = pred[t] - (pred[t - 1] + pred[tf + t - 1]);
        consistency_term += d * d;
    }
    consistency_term /= static_cast<double>(tf - 1);

    double loss = value_term + spec.consistency_weight * consistency_term;
    if (spec.velocity_supervision) {
        double vel_term = 0.0;
        for (std::size_t t = tf; t < 2 * tf - 1; ++t) {
            const double d = pred[t] - target[t];
            vel_term += d * d;
        }
        loss += vel_term / static_cast<double>(tf - 1);
    }
    return loss;
}

ad::NodeId append_mse_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target) {
    return g.mean_all(g.square(g.sub(pred, target)));
}

ad::NodeId append_kinematic_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target,
                                 const LossSpec& spec) {
    if (spec.t_f < 2) {
        throw std::invalid_argument("kinematic loss: horizon must be at least 2");
    }
    const auto tf = static_cast<std::size_t>(spec.t_f);
    const auto all = ad::kAllRows;

    auto v = g.slice(pred, 0, all, 0, tf);
    auto v_hat = g.slice(target, 0, all, 0, tf);
    auto value_term = g.mean_all(g.square(g.sub(v, v_hat)));

    // v_t - v_{t-1} - e_{t-1} for t = 2..T_f
    auto v_next = g.slice(pred, 0, all, 1, tf);
    auto v_prev = g.slice(pred, 0, all, 0, tf - 1);
    auto e_prev = g.slice(pred, 0, all, tf, 2 * tf - 1);
    auto violation = g.sub(g.sub(v_next, v_prev), e_prev);
    auto consistency_term = g.mean_all(g.square(violation));

    auto loss = g.add(value_term, spec.consistency_weight == 1.0
                                      ? consistency_term
                                      : g.scale(consistency_term, spec.consistency_weight));
    if (spec.velocity_supervision) {
        auto e = g.slice(pred, 0, all, tf, 2 * tf - 1);
        auto e_hat = g.slice(target, 0, all, tf, 2 * tf - 1);
        loss = g.add(loss, g.mean_all(g.square(g.sub(e, e_hat))));
    }
    return loss;
}

ad::NodeId append_loss(ad::Graph& g, ad::NodeId pred, ad::NodeId target, const LossSpec& spec) {
    return spec.kind == LossSpec::Kind::mse ? append_mse_loss(g, pred, target)
                                            : append_kinematic_loss(g, pred, target, spec);
}

}  // namespace kinn
