// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace credkit {

/// Discrete distribution of the common factor X_t at one horizon.
struct FactorMarginal {
    Eigen::VectorXd grid;  ///< ascending abscissae, grid[0] >= 0
    Eigen::VectorXd probs; ///< q_j >= 0, sum 1
    double horizon = 0.0;

    Eigen::VectorXd cdf() const;
    void validate() const;
};

/// A set of marginals over ascending horizons on a shared grid. Valid
/// families satisfy CDF dominance F(x, t2) <= F(x, t1) for t1 < t2, the
/// discrete counterpart of an increasing factor process.
struct MarginalFamily {
    std::vector<FactorMarginal> marginals;

    const Eigen::VectorXd& grid() const;
    std::vector<double> horizons() const;
    void validate(double dominance_tol = 1e-12) const;
};

MarginalFamily load_marginals(const std::string& path);
void save_marginals(const MarginalFamily& m, const std::string& path);

/// Geometric grid on [0, x_max] with x_1 = 0 and points quantised so the
/// conditional default probability resolves both small and large factor
/// moves.
Eigen::VectorXd make_factor_grid(int size, double x_min_pos, double x_max);

/// Conditional default probability parameters for one name at one horizon:
/// p(x,t) = 1 - c e^{-beta x}.
struct ConditionalCurve {
    double beta = 0.0;
    double c = 1.0;
    bool beta_clamped = false; ///< beta was raised to the previous horizon's value
    bool c_clamped = false;    ///< c was lowered to the previous horizon's value
};

/// Calibrates (beta, c) against a marginal from the hazard-split rule
///   E[e^{-beta x}] = (1-p)^gamma,
/// then fixes c so the unconditional probability is matched exactly:
///   sum_j q_j (1 - c e^{-beta x_j}) = p.
/// When prev is given, beta is kept non-decreasing and c non-increasing
/// versus the previous horizon; the matching of p is never sacrificed.
ConditionalCurve calibrate_beta(double p_t, double gamma, const FactorMarginal& marginal,
                                const ConditionalCurve* prev = nullptr);

double conditional_default_prob(const ConditionalCurve& cond, double x);

/// Conditional probabilities at every grid node.
Eigen::VectorXd conditional_default_probs(const ConditionalCurve& cond,
                                          const Eigen::VectorXd& grid);

/// One-factor Gaussian copula conditional default probability,
///   Phi((Phi^{-1}(p_t) - sqrt(rho) x) / sqrt(1-rho)).
/// Standalone reference model for pricer cross-checks.
double gaussian_reference(double p_t, double rho, double x);

} // namespace credkit
