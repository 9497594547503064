// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "credkit/markov.hpp"
#include "credkit/model.hpp"

namespace credkit {

/// Ornstein-Uhlenbeck driver parameters.
struct OuParams {
    double kappa = 0.05;
    double ybar = 1.0;
    double vol = 1.0;
    double y0 = 1.0;

    void validate() const;
};

struct OuMoments {
    double mean = 0.0;
    double var = 0.0;
};

/// Unconditional mean and variance of the OU process at time t:
/// mean = y0 e^{-kt} + ybar (1 - e^{-kt}), var = v^2 (1 - e^{-2kt}) / (2k).
OuMoments ou_moments(const OuParams& params, double t);

struct LatticeOptions {
    double y_span = 6.0;    ///< standardized grid half-width in stationary sd
    int y_buckets = 73;
    double leak_tol = 1e-8; ///< max transition mass allowed beyond the grid
    double threshold_tol = 1e-12;
};

/// Joint (X_t, y_t) lattice: per horizon the joint distribution over factor
/// states and standardized-driver buckets, plus per transition the solved
/// thresholds and the conditional transition tensors.
struct LatticeState {
    std::vector<double> horizons;
    Eigen::VectorXd z_nodes; ///< standardized driver grid
    OuParams ou;
    double beta = 0.0;
    std::vector<Eigen::MatrixXd> joint;      ///< per horizon: X x Z
    std::vector<Eigen::MatrixXd> thresholds; ///< per step: (j,k) = c_k(x_j), +-inf sentinels
    std::vector<Eigen::MatrixXd> y_trans;    ///< per step: Z x Z row-stochastic
    /// per step, per z-bucket: X x X conditional transition P(X'=k | X=j, z_m)
    std::vector<std::vector<Eigen::MatrixXd>> x_trans;
    Eigen::VectorXd x_marginal_error; ///< per horizon vs the unconditional chain
};

/// Thresholds c_k solving
///   sum_m f_y[m] Phi((c_k - beta z_m)/sqrt(1-beta^2)) = row_cdf[k]
/// per level k, with -inf/+inf sentinels at CDF 0/1. c is non-decreasing.
Eigen::VectorXd solve_thresholds(const Eigen::VectorXd& row_cdf, const Eigen::VectorXd& f_y,
                                 const Eigen::VectorXd& z_nodes, double beta,
                                 double tol = 1e-12);

/// Builds the joint lattice through all chain horizons. The first step from
/// t=0 uses the unconditional chain (the driver carries no information at
/// t=0 where its variance vanishes), so X and y start independent.
LatticeState forward_induct(const TransitionChain& chain, const OuParams& params, double beta,
                            const LatticeOptions& opts = {});

/// Residual of the threshold equations against the unconditional chain rows,
/// maximised over steps, states and levels.
double max_threshold_residual(const LatticeState& lattice, const TransitionChain& chain);

/// European option to buy protection on a zero-coupon tranche: at exercise
/// the holder pays the strike and receives the terminal expected tranche
/// loss. Terminal values are the conditional tranche losses at t_maturity;
/// backward induction through the lattice gives the forward value at
/// t_exercise. Discounting is omitted. Returns one price per tranche,
/// as a fraction of tranche notional.
/// strikes: one per tranche; pass an empty vector for at-the-money strikes
/// (the model ETL at t_maturity).
Eigen::VectorXd price_tranche_option(const LatticeState& lattice, const ModelState& state,
                                     const std::vector<TrancheDef>& tranches, double t_exercise,
                                     double t_maturity,
                                     const Eigen::VectorXd& strikes = Eigen::VectorXd());

} // namespace credkit
