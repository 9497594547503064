// SPDX-License-Identifier: Apache-2.0
#include "credkit/model.hpp"

#include <cmath>

#include "credkit/errors.hpp"
#include "credkit/parallel.hpp"

namespace credkit {

ModelConfig::ModelConfig() {
    // Default spot recovery mean: decreasing trend over the default
    // probability with a local peak at p = 0.15; variance at 25% of the
    // admissible maximum. Both are configuration inputs, not market data.
    base_recovery.mu = PiecewiseLinear({0.0, 0.10, 0.15, 0.30, 0.60, 1.0},
                                       {0.55, 0.40, 0.50, 0.35, 0.25, 0.10});
    base_recovery.alpha = 0.25;
    base_recovery.name_scale = 1.0;
}

double effective_gamma(const CreditCurve& curve, double t, std::size_t horizon_index,
                       const ModelConfig& cfg) {
    if (!cfg.gamma_ramp.empty() &&
        curve.default_prob_at(cfg.anchor_tenor) > cfg.distressed_p5) {
        std::size_t k = std::min(horizon_index, cfg.gamma_ramp.size() - 1);
        return cfg.gamma_ramp[k];
    }
    return curve.gamma_at(t);
}

std::vector<RecoverySpec> calibrate_scales(const Portfolio& pf, const FactorMarginal& anchor,
                                           const ModelConfig& cfg) {
    cfg.base_recovery.validate();
    std::vector<RecoverySpec> specs(pf.size(), cfg.base_recovery);
    parallel_for(pf.size(), [&](std::size_t i) {
        const CreditCurve& c = pf.names[i];
        double p = c.default_prob_at(anchor.horizon);
        double gamma = effective_gamma(c, anchor.horizon, 0, cfg);
        ConditionalCurve cond = calibrate_beta(p, gamma, anchor);
        Eigen::VectorXd cond_p = conditional_default_probs(cond, anchor.grid);
        specs[i].name_scale =
            calibrate_name_scale(cfg.base_recovery, anchor.probs, cond_p, p, c.curve_recovery);
    });
    return specs;
}

namespace {

struct NameBuild {
    ConditionalCurve cond;
    double p_adj = 0.0;
    double term_rec = 0.0;
    Eigen::VectorXd cond_p;
};

NameBuild build_name(const CreditCurve& curve, const RecoverySpec& spec,
                     const FactorMarginal& marginal, std::size_t horizon_index, bool is_anchor,
                     const ConditionalCurve* prev, double p_floor, const ModelConfig& cfg) {
    NameBuild nb;
    const double t = marginal.horizon;
    const double p_raw = curve.default_prob_at(t);
    const double gamma = effective_gamma(curve, t, horizon_index, cfg);
    const double target_el = p_raw * (1.0 - curve.curve_recovery);
    double p_adj = std::max(p_raw, p_floor);
    for (int it = 0; it < 100; ++it) {
        nb.cond = calibrate_beta(p_adj, gamma, marginal, prev);
        nb.cond_p = conditional_default_probs(nb.cond, marginal.grid);
        nb.term_rec = unconditional_term_recovery(spec, marginal.probs, nb.cond_p, p_adj);
        if (is_anchor) break; // scale calibration already matched the recovery here
        double p_next = target_el / (1.0 - nb.term_rec);
        CK_NUMERIC_REQUIRE(p_next < 1.0, "curve ", curve.name, " at ", t,
                           "y: expected loss not attainable under model recovery");
        p_next = std::max(p_next, p_floor);
        double delta = std::abs(p_next - p_adj);
        p_adj = p_next;
        if (delta < 1e-14) {
            nb.cond = calibrate_beta(p_adj, gamma, marginal, prev);
            nb.cond_p = conditional_default_probs(nb.cond, marginal.grid);
            nb.term_rec = unconditional_term_recovery(spec, marginal.probs, nb.cond_p, p_adj);
            break;
        }
    }
    nb.p_adj = p_adj;
    return nb;
}

} // namespace

HorizonBuild build_horizon(const Portfolio& pf, const std::vector<RecoverySpec>& specs,
                           const FactorMarginal& marginal, std::size_t horizon_index,
                           bool is_anchor, const HorizonBuild* prev, const ModelConfig& cfg) {
    CK_REQUIRE(specs.size() == pf.size(), "build_horizon: specs size mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(pf.size());
    const Eigen::Index J = marginal.grid.size();

    HorizonBuild hb;
    hb.model.t = marginal.horizon;
    hb.model.marginal = marginal;
    hb.model.weights = pf.weights();
    hb.model.cond_p.resize(n, J);
    hb.model.rec_mean.resize(n, J);
    hb.model.rec_var.resize(n, J);
    hb.conds.resize(pf.size());
    hb.p_adj.resize(n);
    hb.term_rec.resize(n);

    std::vector<NameBuild> builds(pf.size());
    parallel_for(pf.size(), [&](std::size_t i) {
        const ConditionalCurve* prev_cond = prev ? &prev->conds[i] : nullptr;
        // adjusted probabilities may never fall below the previous horizon
        double p_floor = prev ? prev->p_adj[static_cast<Eigen::Index>(i)] : 0.0;
        builds[i] = build_name(pf.names[i], specs[i], marginal, horizon_index, is_anchor,
                               prev_cond, p_floor, cfg);
        for (Eigen::Index j = 0; j < J; ++j) {
            RecoveryMoments rm = term_moments(specs[i], builds[i].cond_p[j]);
            hb.model.rec_mean(static_cast<Eigen::Index>(i), j) = rm.mean;
            hb.model.rec_var(static_cast<Eigen::Index>(i), j) = rm.variance;
        }
        hb.model.cond_p.row(static_cast<Eigen::Index>(i)) = builds[i].cond_p.transpose();
    });
    for (std::size_t i = 0; i < pf.size(); ++i) {
        hb.conds[i] = builds[i].cond;
        hb.p_adj[static_cast<Eigen::Index>(i)] = builds[i].p_adj;
        hb.term_rec[static_cast<Eigen::Index>(i)] = builds[i].term_rec;
        hb.beta_clamps += builds[i].cond.beta_clamped ? 1 : 0;
        hb.c_clamps += builds[i].cond.c_clamped ? 1 : 0;
    }
    return hb;
}

const HorizonBuild& ModelState::at(double t) const {
    int idx = horizon_index(t);
    CK_REQUIRE(idx >= 0, "ModelState: no horizon calibrated at t=", t);
    return horizons[static_cast<std::size_t>(idx)];
}

int ModelState::horizon_index(double t) const {
    for (std::size_t h = 0; h < horizons.size(); ++h)
        if (std::abs(horizons[h].model.t - t) < 1e-9) return static_cast<int>(h);
    return -1;
}

ModelState build_model_state(const Portfolio& pf, const MarginalFamily& family,
                             const ModelConfig& cfg) {
    pf.validate();
    family.validate(1e-9);
    CK_REQUIRE(std::abs(family.marginals.front().horizon - cfg.anchor_tenor) < 1e-9,
               "anchor tenor (", cfg.anchor_tenor, ") must be the first marginal horizon (",
               family.marginals.front().horizon, ")");
    ModelState state;
    state.portfolio = pf;
    state.family = family;
    state.specs = calibrate_scales(pf, family.marginals.front(), cfg);
    for (std::size_t h = 0; h < family.marginals.size(); ++h) {
        const HorizonBuild* prev = h == 0 ? nullptr : &state.horizons[h - 1];
        state.horizons.push_back(
            build_horizon(pf, state.specs, family.marginals[h], h, h == 0, prev, cfg));
        state.beta_clamps += state.horizons.back().beta_clamps;
        state.c_clamps += state.horizons.back().c_clamps;
    }
    return state;
}

} // namespace credkit
