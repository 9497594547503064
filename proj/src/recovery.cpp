// SPDX-License-Identifier: Apache-2.0
#include "credkit/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "credkit/errors.hpp"
#include "credkit/roots.hpp"

namespace credkit {

void RecoverySpec::validate() const {
    CK_REQUIRE(!mu.knots().empty(), "RecoverySpec: empty mu table");
    CK_REQUIRE(mu.knots().front() == 0.0 && mu.knots().back() == 1.0,
               "RecoverySpec: mu knots must span [0,1]");
    CK_REQUIRE(alpha >= 0.0 && alpha <= 1.0, "RecoverySpec: alpha must be in [0,1]");
    CK_REQUIRE(name_scale >= 0.0, "RecoverySpec: name_scale must be >= 0");
    for (double v : mu.values()) {
        CK_REQUIRE(v >= 0.0 && v <= 1.0, "RecoverySpec: mu values must be in [0,1]");
        CK_REQUIRE(name_scale * v <= 1.0 + 1e-15,
                   "RecoverySpec: scaled mu exceeds 1 (scale ", name_scale, ")");
    }
}

RecoveryMoments spot_moments(const RecoverySpec& spec, double p) {
    CK_REQUIRE(p >= 0.0 && p <= 1.0, "spot_moments: p out of [0,1]");
    double m = spec.name_scale * spec.mu(p);
    return {m, spec.alpha * m * (1.0 - m)};
}

namespace {

struct RawIntegrals {
    double i1 = 0.0; // integral of mu
    double i2 = 0.0; // integral of mu^2 + sigma^2 = (1-alpha) mu^2 + alpha mu
};

// Exact integral of the spot moment functions over (0, p_hi].
RawIntegrals integrate(const RecoverySpec& spec, double p_lo, double p_hi) {
    RawIntegrals out;
    const auto& xs = spec.mu.knots();
    const auto& ys = spec.mu.values();
    const double s = spec.name_scale;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        double a = std::max(xs[k], p_lo);
        double b = std::min(xs[k + 1], p_hi);
        if (b <= a) continue;
        double slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        double m0 = s * (ys[k] + slope * (a - xs[k]));
        double m1 = s * (ys[k] + slope * (b - xs[k]));
        double len = b - a;
        double int_mu = 0.5 * len * (m0 + m1);
        double int_mu2 = len * (m0 * m0 + m0 * m1 + m1 * m1) / 3.0;
        out.i1 += int_mu;
        out.i2 += (1.0 - spec.alpha) * int_mu2 + spec.alpha * int_mu;
    }
    return out;
}

} // namespace

RecoveryMoments segment_moments(const RecoverySpec& spec, double p1, double p2) {
    CK_REQUIRE(p1 >= 0.0 && p2 <= 1.0 && p1 <= p2, "segment_moments: need 0 <= p1 <= p2 <= 1");
    if (p2 - p1 <= 0.0) return spot_moments(spec, p1);
    RawIntegrals raw = integrate(spec, p1, p2);
    double inv = 1.0 / (p2 - p1);
    double mean = raw.i1 * inv;
    double var = raw.i2 * inv - mean * mean;
    return {mean, std::max(var, 0.0)};
}

RecoveryMoments term_moments(const RecoverySpec& spec, double p_t) {
    CK_REQUIRE(p_t >= 0.0 && p_t <= 1.0, "term_moments: p_t out of [0,1]");
    if (p_t == 0.0) return spot_moments(spec, 0.0); // continuity at p -> 0+
    return segment_moments(spec, 0.0, p_t);
}

TwoPoint two_point_support(double mean, double variance) {
    CK_REQUIRE(mean >= 0.0 && mean <= 1.0, "two_point_support: mean out of [0,1]");
    double max_var = mean * (1.0 - mean);
    CK_REQUIRE(variance >= 0.0 && variance <= max_var * (1.0 + 1e-12) + 1e-300,
               "two_point_support: variance ", variance, " outside [0, mu(1-mu)]");
    if (variance <= 0.0 || max_var == 0.0) return {mean, mean, mean};
    variance = std::min(variance, max_var);
    double sd = std::sqrt(variance);
    TwoPoint tp;
    tp.prob_upper = mean;
    tp.lower = mean - sd * std::sqrt(mean / (1.0 - mean));
    tp.upper = mean + sd * std::sqrt((1.0 - mean) / mean);
    tp.lower = std::max(tp.lower, 0.0);
    tp.upper = std::min(tp.upper, 1.0);
    return tp;
}

double two_point_draw(double mean, double variance, double u) {
    TwoPoint tp = two_point_support(mean, variance);
    return u < 1.0 - tp.prob_upper ? tp.lower : tp.upper;
}

double unconditional_term_recovery(const RecoverySpec& spec, const Eigen::VectorXd& probs,
                                   const Eigen::VectorXd& cond_p, double p_t) {
    CK_REQUIRE(probs.size() == cond_p.size(), "unconditional_term_recovery: size mismatch");
    if (p_t <= 0.0) return term_moments(spec, 0.0).mean;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < probs.size(); ++j)
        acc += term_moments(spec, cond_p[j]).mean * cond_p[j] * probs[j];
    return acc / p_t;
}

double calibrate_name_scale(const RecoverySpec& base, const Eigen::VectorXd& probs,
                            const Eigen::VectorXd& cond_p, double p_t, double target_recovery) {
    CK_REQUIRE(target_recovery >= 0.0 && target_recovery < 1.0,
               "calibrate_name_scale: target recovery out of [0,1)");
    double max_mu = base.mu.max_value();
    CK_REQUIRE(max_mu > 0.0, "calibrate_name_scale: mu table is identically zero");
    double hi = 1.0 / max_mu;
    RecoverySpec probe = base;
    auto implied = [&](double scale) {
        probe.name_scale = scale;
        return unconditional_term_recovery(probe, probs, cond_p, p_t) - target_recovery;
    };
    CK_NUMERIC_REQUIRE(implied(hi) >= 0.0, "calibrate_name_scale: curve recovery ",
                       target_recovery, " not attainable with this mu table");
    return bisect(implied, 0.0, hi, 1e-10);
}

} // namespace credkit
