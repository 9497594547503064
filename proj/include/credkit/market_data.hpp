// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace credkit {

/// Per-name default probability term structure plus static attributes.
/// Immutable after load; interpolation between quoted horizons is
/// piecewise-linear in cumulative hazard -log(1-p).
struct CreditCurve {
    std::string name;
    std::vector<double> horizons;    ///< ascending, > 0
    Eigen::VectorXd default_prob;    ///< cumulative p(t) at horizons, in [0,1)
    double curve_recovery = 0.4;     ///< flat recovery marked on the curve
    double weight = 0.0;             ///< notional fraction, > 0
    std::vector<double> gamma_horizons; ///< empty => constant gamma
    Eigen::VectorXd gamma;           ///< size 1 (constant) or matching gamma_horizons

    double default_prob_at(double t) const;
    double gamma_at(double t) const;
    void validate() const;
};

struct Portfolio {
    std::vector<CreditCurve> names;

    std::size_t size() const { return names.size(); }
    Eigen::VectorXd weights() const;
    /// Portfolio expected loss at t under the curves' own recovery marks.
    double expected_loss(double t) const;
    void validate() const;
};

struct TrancheDef {
    double attach = 0.0;
    double detach = 0.0;
    double width() const { return detach - attach; }
};

/// Expected-tranche-loss calibration targets: one row per tranche
/// (including the 0-100% portfolio row), one column per horizon.
struct EtlTargets {
    std::vector<double> horizons;
    std::vector<TrancheDef> tranches;
    Eigen::MatrixXd etl; ///< tranches x horizons, fractions of tranche notional

    void validate() const;
    /// Index of the 0-100% row, or -1 when absent.
    int portfolio_row() const;
};

Portfolio load_portfolio(const std::string& path);
void save_portfolio(const Portfolio& p, const std::string& path);

EtlTargets load_targets(const std::string& path);
void save_targets(const EtlTargets& t, const std::string& path);

/// Checks that the targets' 0-100% row matches the portfolio expected loss
/// within tol; throws InputError otherwise.
void check_portfolio_row(const Portfolio& p, const EtlTargets& t, double tol);

/// Rescales default probabilities so the per-name expected loss under the
/// model term recovery equals the one under the curve recovery:
/// p'(t) (1 - R_model(0,t)) = p(t) (1 - curve_recovery). The adjusted
/// probabilities are clamped to stay monotone and below 1.
/// model_recovery is names x horizons, evaluated at each curve horizon.
Portfolio adjust_curves_preserve_el(const Portfolio& p, const Eigen::MatrixXd& model_recovery);

/// Simple discount curve: log-linear interpolation of discount factors,
/// df(0) = 1. Queries beyond the last knot are an error.
class DiscountCurve {
public:
    DiscountCurve() = default;
    DiscountCurve(std::vector<double> times, std::vector<double> dfs);
    static DiscountCurve flat(double rate, double t_max);

    double df(double t) const;

private:
    std::vector<double> times_;
    std::vector<double> log_dfs_;
};

} // namespace credkit
