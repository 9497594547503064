// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "credkit/math.hpp"

namespace credkit {

/// Spot-recovery moment functions: a piecewise-linear mean mu(p,p) over the
/// default probability, a name-specific multiplier on it, and a variance
/// equal to a fixed fraction alpha of the maximum admissible variance,
/// sigma^2(p,p) = alpha * mu(p,p) (1 - mu(p,p)).
struct RecoverySpec {
    PiecewiseLinear mu;      ///< knots must span [0,1], values in [0,1]
    double alpha = 0.25;     ///< variance fraction in [0,1]
    double name_scale = 1.0; ///< multiplier on mu; scaled mu must stay in [0,1]

    void validate() const;
};

struct RecoveryMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Moments of the recovery given default exactly at the point where the
/// cumulative default probability equals p.
RecoveryMoments spot_moments(const RecoverySpec& spec, double p);

/// Moments of the recovery given default anywhere in (0, t], where
/// p_t is the cumulative default probability at t. Exact per-segment
/// integration of the spot moment functions (polynomials of degree <= 2).
RecoveryMoments term_moments(const RecoverySpec& spec, double p_t);

/// Moments of the recovery given default in the slice (t1, t2] whose
/// cumulative default probabilities are p1 < p2.
RecoveryMoments segment_moments(const RecoverySpec& spec, double p1, double p2);

/// Support of the two-point distribution matching (mean, variance) with the
/// upper point carried with probability mean. Both points stay inside [0,1]
/// for every admissible variance.
struct TwoPoint {
    double lower = 0.0;
    double upper = 0.0;
    double prob_upper = 0.0;
};
TwoPoint two_point_support(double mean, double variance);

/// Draws from the two-point distribution using a uniform variate u in [0,1).
double two_point_draw(double mean, double variance, double u);

/// Unconditional term recovery: weighted average of the conditional term
/// means over the factor marginal,
///   R(0,t) = (1/p_t) sum_j mu(0, p(x_j,t)) p(x_j,t) q_j.
double unconditional_term_recovery(const RecoverySpec& spec, const Eigen::VectorXd& probs,
                                   const Eigen::VectorXd& cond_p, double p_t);

/// Solves for the name scale that makes the unconditional term recovery at
/// the anchor tenor match target_recovery. Bisection on [0, 1/max mu].
double calibrate_name_scale(const RecoverySpec& base, const Eigen::VectorXd& probs,
                            const Eigen::VectorXd& cond_p, double p_t, double target_recovery);

} // namespace credkit
