// SPDX-License-Identifier: Apache-2.0
#include "credkit/pricer.hpp"

#include <cmath>

#include "credkit/errors.hpp"
#include "credkit/math.hpp"

namespace credkit {

CondLossMoments conditional_moments(const Eigen::VectorXd& weights, const Eigen::VectorXd& cond_p,
                                    const Eigen::VectorXd& rec_mean,
                                    const Eigen::VectorXd& rec_var) {
    const Eigen::Index n = weights.size();
    CK_REQUIRE(cond_p.size() == n && rec_mean.size() == n && rec_var.size() == n,
               "conditional_moments: size mismatch");
    CondLossMoments m;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights[i];
        const double p = cond_p[i];
        const double mu = rec_mean[i];
        const double v = rec_var[i];
        const double lgd = 1.0 - mu;
        m.mu_loss += w * p * lgd;
        m.var_loss += w * w * p * (v + (1.0 - p) * lgd * lgd);
        m.mu_rec += w * p * mu;
        m.var_rec += w * w * p * (v + (1.0 - p) * mu * mu);
    }
    return m;
}

CondLossMoments conditional_moments(const Eigen::VectorXd& weights, const Eigen::VectorXd& cond_p,
                                    const std::vector<RecoverySpec>& specs) {
    const Eigen::Index n = weights.size();
    CK_REQUIRE(static_cast<Eigen::Index>(specs.size()) == n, "conditional_moments: specs size mismatch");
    Eigen::VectorXd mu(n), var(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        RecoveryMoments rm = term_moments(specs[static_cast<std::size_t>(i)], cond_p[i]);
        mu[i] = rm.mean;
        var[i] = rm.variance;
    }
    return conditional_moments(weights, cond_p, mu, var);
}

double base_tranche_cond_etl(double mu, double sigma, double K) {
    if (K <= 0.0) return 0.0;
    CK_REQUIRE(sigma >= 0.0, "base_tranche_cond_etl: sigma must be >= 0");
    if (sigma == 0.0) return std::min(mu, K);
    const double z = (K - mu) / sigma;
    return K + (mu - K) * norm_cdf(z) - sigma * norm_pdf(z);
}

CondLossMoments node_moments(const HorizonModel& h, Eigen::Index j) {
    return conditional_moments(h.weights, h.cond_p.col(j), h.rec_mean.col(j), h.rec_var.col(j));
}

Eigen::VectorXd cond_base_etl(const HorizonModel& h, double K) {
    const Eigen::Index J = h.marginal.grid.size();
    Eigen::VectorXd out(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        CondLossMoments m = node_moments(h, j);
        out[j] = base_tranche_cond_etl(m.mu_loss, std::sqrt(std::max(m.var_loss, 0.0)), K);
    }
    return out;
}

Eigen::VectorXd cond_tranche_loss(const HorizonModel& h, const TrancheDef& tranche) {
    CK_REQUIRE(tranche.width() > 0.0, "cond_tranche_loss: empty tranche");
    const Eigen::Index J = h.marginal.grid.size();
    Eigen::VectorXd out(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        CondLossMoments m = node_moments(h, j);
        double sd = std::sqrt(std::max(m.var_loss, 0.0));
        out[j] = (base_tranche_cond_etl(m.mu_loss, sd, tranche.detach) -
                  base_tranche_cond_etl(m.mu_loss, sd, tranche.attach)) /
                 tranche.width();
    }
    return out;
}

double etl(const HorizonModel& h, double attach, double detach) {
    CK_REQUIRE(detach > attach, "etl: detach must exceed attach");
    return h.marginal.probs.dot(cond_tranche_loss(h, TrancheDef{attach, detach}));
}

double eta(const HorizonModel& h, double attach, double detach) {
    CK_REQUIRE(detach > attach, "eta: detach must exceed attach");
    const Eigen::Index J = h.marginal.grid.size();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
        CondLossMoments m = node_moments(h, j);
        double sd = std::sqrt(std::max(m.var_rec, 0.0));
        acc += h.marginal.probs[j] *
               (base_tranche_cond_etl(m.mu_rec, sd, 1.0 - attach) -
                base_tranche_cond_etl(m.mu_rec, sd, 1.0 - detach));
    }
    return acc / (detach - attach);
}

void EtlCurve::validate() const {
    CK_REQUIRE(etl.rows() == static_cast<Eigen::Index>(tranches.size()) &&
                   etl.cols() == static_cast<Eigen::Index>(horizons.size()) &&
                   eta.rows() == etl.rows() && eta.cols() == etl.cols(),
               "EtlCurve: shape mismatch");
    for (Eigen::Index r = 0; r < etl.rows(); ++r)
        for (Eigen::Index h = 0; h < etl.cols(); ++h) {
            CK_REQUIRE(etl(r, h) >= 0.0 && etl(r, h) <= 1.0, "EtlCurve: ETL out of [0,1]");
            CK_REQUIRE(eta(r, h) >= 0.0 && eta(r, h) <= 1.0, "EtlCurve: ETA out of [0,1]");
            if (h > 0)
                CK_REQUIRE(etl(r, h) >= etl(r, h - 1) - 1e-12,
                           "EtlCurve: ETL must be non-decreasing in horizon");
        }
}

TrancheLegs tranche_pv(const std::vector<double>& times, const std::vector<double>& etl_curve,
                       const std::vector<double>& eta_curve, double coupon,
                       const DiscountCurve& discount) {
    CK_REQUIRE(!times.empty() && times.front() > 0.0, "tranche_pv: empty or non-positive time grid");
    CK_REQUIRE(times.size() == etl_curve.size() && times.size() == eta_curve.size(),
               "tranche_pv: curve size mismatch");
    TrancheLegs legs;
    double t_prev = 0.0, etl_prev = 0.0, eta_prev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        CK_REQUIRE(times[k] > t_prev, "tranche_pv: times must be ascending");
        CK_REQUIRE(etl_curve[k] >= etl_prev - 1e-12, "tranche_pv: ETL must be non-decreasing");
        const double dt = times[k] - t_prev;
        legs.protection += discount.df(0.5 * (t_prev + times[k])) * (etl_curve[k] - etl_prev);
        const double out_prev = 1.0 - etl_prev - eta_prev;
        const double out_now = 1.0 - etl_curve[k] - eta_curve[k];
        legs.premium += coupon * discount.df(times[k]) * dt * 0.5 * (out_prev + out_now);
        t_prev = times[k];
        etl_prev = etl_curve[k];
        eta_prev = eta_curve[k];
    }
    legs.pv = legs.protection - legs.premium;
    return legs;
}

} // namespace credkit
