// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "credkit/copula.hpp"
#include "credkit/market_data.hpp"
#include "credkit/pricer.hpp"
#include "credkit/recovery.hpp"

namespace credkit {

/// Numeric knobs shared by calibration, pricing, simulation and the lattice.
struct ModelConfig {
    int grid_size = 101;
    double x_min_pos = 0.01;
    double x_max = 30.0;

    double anchor_tenor = 5.0;    ///< must be the first calibrated horizon
    double distressed_p5 = 0.5;   ///< anchor-tenor default probability threshold
    std::vector<double> gamma_ramp = {0.5, 0.7, 0.9}; ///< per-horizon gamma for distressed names

    RecoverySpec base_recovery;   ///< unscaled mu table + alpha
    double el_consistency_tol = 1e-3;

    double entropy_tol = 1e-11;
    int entropy_max_iter = 200;
    double relax_weight = 1e6;
    double fixed_point_tol = 1e-9;
    int fixed_point_max_iter = 100;

    ModelConfig();
};

/// Per-horizon calibration of the conditional curves against one marginal:
/// adjusts default probabilities to preserve per-name expected loss under the
/// model term recovery, then splits the hazard into systemic and
/// idiosyncratic parts.
struct HorizonBuild {
    HorizonModel model;
    std::vector<ConditionalCurve> conds;
    Eigen::VectorXd p_adj;    ///< adjusted unconditional default probabilities
    Eigen::VectorXd term_rec; ///< model term recovery R(0,t) per name
    int beta_clamps = 0;
    int c_clamps = 0;
};

/// Effective systemic fraction of a name at a horizon; distressed names (by
/// anchor-tenor default probability) follow the config's increasing ramp.
double effective_gamma(const CreditCurve& curve, double t, std::size_t horizon_index,
                       const ModelConfig& cfg);

/// Scales the base mu table per name so the unconditional term recovery at
/// the anchor marginal matches the curve recovery.
std::vector<RecoverySpec> calibrate_scales(const Portfolio& pf, const FactorMarginal& anchor,
                                           const ModelConfig& cfg);

HorizonBuild build_horizon(const Portfolio& pf, const std::vector<RecoverySpec>& specs,
                           const FactorMarginal& marginal, std::size_t horizon_index,
                           bool is_anchor, const HorizonBuild* prev, const ModelConfig& cfg);

/// The full calibrated state across all marginal horizons.
struct ModelState {
    Portfolio portfolio;
    std::vector<RecoverySpec> specs;
    MarginalFamily family;
    std::vector<HorizonBuild> horizons;
    int beta_clamps = 0;
    int c_clamps = 0;

    const HorizonBuild& at(double t) const;
    int horizon_index(double t) const; ///< -1 when absent
};

/// Deterministically rebuilds the model state from a portfolio and an
/// already-calibrated marginal family (anchor scale calibration first, then
/// horizons in ascending order).
ModelState build_model_state(const Portfolio& pf, const MarginalFamily& family,
                             const ModelConfig& cfg);

} // namespace credkit
