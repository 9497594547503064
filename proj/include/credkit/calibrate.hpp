// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "credkit/market_data.hpp"
#include "credkit/model.hpp"

namespace credkit {

enum class ConstraintSense { Equality, LessEqual };

/// One linear functional a.q (=|<=) bound. A finite weight turns an equality
/// into a quadratic relaxation with that weight, so near-infeasible target
/// surfaces degrade gracefully instead of blowing up the dual.
struct LinearConstraint {
    Eigen::VectorXd coeffs;
    double bound = 0.0;
    ConstraintSense sense = ConstraintSense::Equality;
    double weight = std::numeric_limits<double>::infinity();
    std::string label;
};

struct EntropyProblem {
    Eigen::VectorXd prior; ///< strictly positive; normalized internally
    std::vector<LinearConstraint> constraints;
};

struct EntropyOptions {
    double tol = 1e-11; ///< max-norm of the dual gradient
    int max_iter = 200;
};

struct EntropySolution {
    Eigen::VectorXd q;
    Eigen::VectorXd multipliers; ///< per input constraint; 0 for inactive inequalities
    Eigen::VectorXd residuals;   ///< a.q - bound per constraint
    std::vector<bool> active;    ///< inequality activity
    int iterations = 0;
    double entropy = 0.0;        ///< -sum q log q
    double kl = 0.0;             ///< sum q log(q/prior)
};

/// Maximum-entropy distribution subject to linear constraints, solved in the
/// dual by damped Newton with an active set over the inequalities. The
/// solution has the exponential-tilt form q_j ~ prior_j exp(sum_k l_k a_kj).
EntropySolution max_entropy_solve(const EntropyProblem& problem, const EntropyOptions& opts = {});

/// Diagnostics of one calibrated horizon.
struct HorizonCalibration {
    FactorMarginal marginal;
    Eigen::VectorXd target_etl; ///< per tranche row, fraction of tranche notional
    Eigen::VectorXd model_etl;
    int outer_iterations = 0;
    bool soft_fallback = false; ///< equality rows were quadratically relaxed
    int active_dominance = 0;
    int beta_clamps = 0;
    int c_clamps = 0;
    double entropy = 0.0;
    double kl = 0.0;
    std::vector<double> step_history; ///< max |dq| per outer iteration
};

struct CalibrationResult {
    ModelState state;
    EtlTargets targets;
    std::vector<HorizonCalibration> horizons;
};

/// Calibrates factor marginals to the ETL targets horizon by horizon:
/// iterate (conditional curves from current marginal) -> (max-entropy solve)
/// until the marginal is a fixed point. The portfolio expected-loss row is a
/// hard constraint; tranche rows fall back to a quadratic relaxation only if
/// the hard dual diverges. Later horizons carry CDF-dominance constraints
/// against the previous one and use it as the entropy prior.
CalibrationResult calibrate(const Portfolio& pf, const EtlTargets& targets,
                            const ModelConfig& cfg);

/// Per-tranche/horizon residual table plus solver diagnostics.
std::string calibration_report(const CalibrationResult& result);

} // namespace credkit
