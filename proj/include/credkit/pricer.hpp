// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "credkit/copula.hpp"
#include "credkit/market_data.hpp"
#include "credkit/recovery.hpp"

namespace credkit {

/// Conditional moments of the portfolio loss L and the recovered notional A
/// given the factor value.
struct CondLossMoments {
    double mu_loss = 0.0;
    double var_loss = 0.0;
    double mu_rec = 0.0;
    double var_rec = 0.0;
};

/// Everything needed to price one horizon: the factor marginal, per-name
/// conditional default probabilities on the grid and the term recovery
/// moments evaluated at those probabilities.
struct HorizonModel {
    double t = 0.0;
    FactorMarginal marginal;
    Eigen::VectorXd weights;  ///< n
    Eigen::MatrixXd cond_p;   ///< n x J
    Eigen::MatrixXd rec_mean; ///< n x J, term mean mu(0, p(x_j,t))
    Eigen::MatrixXd rec_var;  ///< n x J, term variance sigma^2(0, p(x_j,t))
};

/// Loss and recovered-notional moments from per-name conditional default
/// probabilities and term recovery moments (all sums of independent
/// Bernoulli-mixture contributions).
CondLossMoments conditional_moments(const Eigen::VectorXd& weights, const Eigen::VectorXd& cond_p,
                                    const Eigen::VectorXd& rec_mean, const Eigen::VectorXd& rec_var);

/// Convenience overload evaluating the term recovery moments on the fly.
CondLossMoments conditional_moments(const Eigen::VectorXd& weights, const Eigen::VectorXd& cond_p,
                                    const std::vector<RecoverySpec>& specs);

/// Normal-approximation E[min(L,K)] for a variable with mean mu and standard
/// deviation sigma. Returns min(mu,K) when sigma = 0 and 0 when K <= 0.
double base_tranche_cond_etl(double mu, double sigma, double K);

CondLossMoments node_moments(const HorizonModel& h, Eigen::Index j);

/// E[min(L,K) | x_j] for every grid node.
Eigen::VectorXd cond_base_etl(const HorizonModel& h, double K);

/// Conditional tranche loss fraction per grid node:
/// (E[min(L,det)|x] - E[min(L,att)|x]) / (det - att).
Eigen::VectorXd cond_tranche_loss(const HorizonModel& h, const TrancheDef& tranche);

/// Unconditional expected tranche loss as a fraction of tranche notional.
double etl(const HorizonModel& h, double attach, double detach);

/// Expected tranche amortization: recovered notional eats the structure from
/// the top, so a tranche [att, det] amortizes by
/// (E[min(A,1-att)] - E[min(A,1-det)]) / (det - att).
double eta(const HorizonModel& h, double attach, double detach);

/// ETL and ETA term curves for a set of tranches, values clamped to [0,1].
struct EtlCurve {
    std::vector<double> horizons;
    std::vector<TrancheDef> tranches;
    Eigen::MatrixXd etl; ///< tranches x horizons
    Eigen::MatrixXd eta; ///< tranches x horizons

    void validate() const;
};

struct TrancheLegs {
    double protection = 0.0;
    double premium = 0.0;
    double pv = 0.0; ///< protection-buyer PV: protection - premium
};

/// Prices one tranche from its ETL/ETA sampled on an ascending time grid
/// (fractions of tranche notional; both start at 0 at t=0).
/// protection = sum df(t_mid) dETL; premium accrues the coupon on the
/// average outstanding notional 1 - ETL - ETA.
TrancheLegs tranche_pv(const std::vector<double>& times, const std::vector<double>& etl_curve,
                       const std::vector<double>& eta_curve, double coupon,
                       const DiscountCurve& discount);

} // namespace credkit
