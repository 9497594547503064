// SPDX-License-Identifier: Apache-2.0
#include "credkit/lattice.hpp"

#include <cmath>
#include <limits>

#include "credkit/errors.hpp"
#include "credkit/math.hpp"
#include "credkit/pricer.hpp"
#include "credkit/roots.hpp"

namespace credkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void OuParams::validate() const {
    CK_REQUIRE(kappa > 0.0, "OuParams: kappa must be > 0");
    CK_REQUIRE(vol > 0.0, "OuParams: vol must be > 0");
}

OuMoments ou_moments(const OuParams& params, double t) {
    params.validate();
    CK_REQUIRE(t >= 0.0, "ou_moments: t must be >= 0");
    double decay = std::exp(-params.kappa * t);
    OuMoments m;
    m.mean = params.y0 * decay + params.ybar * (1.0 - decay);
    m.var = params.vol * params.vol / (2.0 * params.kappa) * (1.0 - decay * decay);
    return m;
}

namespace {

// Trapezoid bucket weights of a normal(mean, sd) density on equally spaced
// nodes, normalized to 1. Returns the mass of the exact kernel beyond the
// bucket edges.
double bucket_normal(const Eigen::VectorXd& nodes, double mean, double sd, Eigen::VectorXd& out) {
    const Eigen::Index m = nodes.size();
    out.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) out[i] = norm_pdf((nodes[i] - mean) / sd) / sd;
    out[0] *= 0.5;
    out[m - 1] *= 0.5;
    double sum = out.sum();
    CK_NUMERIC_REQUIRE(sum > 0.0, "lattice: transition kernel has no mass on the y grid");
    out /= sum;
    double step = nodes[1] - nodes[0];
    double leak = norm_cdf((nodes[0] - 0.5 * step - mean) / sd) +
                  1.0 - norm_cdf((nodes[m - 1] + 0.5 * step - mean) / sd);
    return leak;
}

Eigen::VectorXd row_cdf_of(const Eigen::MatrixXd& matrix, Eigen::Index j) {
    Eigen::VectorXd cdf(matrix.cols());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < matrix.cols(); ++k) {
        acc += matrix(j, k);
        cdf[k] = std::min(acc, 1.0);
    }
    return cdf;
}

// P(X'=k | thresholds row, z) from CDF differences with sentinel handling.
void conditional_row(const Eigen::VectorXd& thresholds, double z, double beta,
                     Eigen::VectorXd& out) {
    const Eigen::Index J = thresholds.size();
    out.resize(J);
    const double s = std::sqrt(1.0 - beta * beta);
    double prev = 0.0;
    for (Eigen::Index k = 0; k < J; ++k) {
        double c = thresholds[k];
        double cum;
        if (c == -kInf)
            cum = 0.0;
        else if (c == kInf)
            cum = 1.0;
        else
            cum = norm_cdf((c - beta * z) / s);
        out[k] = std::max(cum - prev, 0.0);
        prev = cum;
    }
}

} // namespace

Eigen::VectorXd solve_thresholds(const Eigen::VectorXd& row_cdf, const Eigen::VectorXd& f_y,
                                 const Eigen::VectorXd& z_nodes, double beta, double tol) {
    CK_REQUIRE(beta >= 0.0 && beta < 1.0, "solve_thresholds: beta must be in [0,1)");
    CK_REQUIRE(f_y.size() == z_nodes.size(), "solve_thresholds: f_y/z size mismatch");
    const Eigen::Index J = row_cdf.size();
    const double s = std::sqrt(1.0 - beta * beta);
    Eigen::VectorXd c(J);
    double prev = -kInf;
    for (Eigen::Index k = 0; k < J; ++k) {
        double target = row_cdf[k];
        CK_REQUIRE(target >= -1e-14 && target <= 1.0 + 1e-14,
                   "solve_thresholds: row CDF out of [0,1]");
        if (target < 1e-15) {
            c[k] = -kInf;
            continue;
        }
        if (target > 1.0 - 1e-15) {
            c[k] = kInf;
            prev = kInf;
            continue;
        }
        if (beta == 0.0) {
            c[k] = norm_quantile(target);
        } else {
            auto residual = [&](double x) {
                double acc = 0.0;
                for (Eigen::Index m = 0; m < z_nodes.size(); ++m)
                    acc += f_y[m] * norm_cdf((x - beta * z_nodes[m]) / s);
                return acc - target;
            };
            double lo = -10.0, hi = 10.0;
            int guard = 0;
            while (residual(lo) > 0.0 && guard++ < 8) lo *= 2.0;
            guard = 0;
            while (residual(hi) < 0.0 && guard++ < 8) hi *= 2.0;
            c[k] = brent(residual, lo, hi, tol);
        }
        if (prev != -kInf && c[k] < prev) c[k] = prev; // thresholds are CDF levels
        prev = c[k];
    }
    return c;
}

LatticeState forward_induct(const TransitionChain& chain, const OuParams& params, double beta,
                            const LatticeOptions& opts) {
    chain.validate();
    params.validate();
    CK_REQUIRE(beta >= 0.0 && beta < 1.0, "forward_induct: beta must be in [0,1)");
    CK_REQUIRE(opts.y_buckets >= 5, "forward_induct: y grid too small");
    CK_REQUIRE(chain.horizons.front() > 0.0, "forward_induct: first horizon must be > 0");

    LatticeState lat;
    lat.horizons = chain.horizons;
    lat.ou = params;
    lat.beta = beta;
    const Eigen::Index M = opts.y_buckets;
    const Eigen::Index J = chain.initial.size();
    lat.z_nodes.resize(M);
    const double step = 2.0 * opts.y_span / static_cast<double>(M - 1);
    for (Eigen::Index m = 0; m < M; ++m) lat.z_nodes[m] = -opts.y_span + step * static_cast<double>(m);

    // First transition from t=0 is unconditional: X and the standardized
    // driver start independent.
    Eigen::VectorXd z_weights;
    bucket_normal(lat.z_nodes, 0.0, 1.0, z_weights);
    lat.joint.push_back(chain.initial * z_weights.transpose());
    lat.x_marginal_error.resize(static_cast<Eigen::Index>(chain.horizons.size()));
    lat.x_marginal_error[0] = 0.0;

    for (std::size_t s_idx = 0; s_idx < chain.matrices.size(); ++s_idx) {
        const double t0 = chain.horizons[s_idx];
        const double t1 = chain.horizons[s_idx + 1];
        OuMoments m0 = ou_moments(params, t0);
        OuMoments m1 = ou_moments(params, t1);
        const double decay = std::exp(-params.kappa * (t1 - t0));
        const double a = std::sqrt(m0.var / m1.var) * decay;
        const double b = std::sqrt(std::max(1.0 - a * a, 1e-300));

        const Eigen::MatrixXd& joint = lat.joint.back();
        Eigen::VectorXd x_marg = joint.rowwise().sum();

        // y transition on the standardized grid: z' | z ~ N(a z, b)
        Eigen::MatrixXd ytr(M, M);
        double leak = 0.0;
        Eigen::VectorXd z_marg = joint.colwise().sum();
        for (Eigen::Index m = 0; m < M; ++m) {
            Eigen::VectorXd row;
            double l = bucket_normal(lat.z_nodes, a * lat.z_nodes[m], b, row);
            ytr.row(m) = row.transpose();
            leak += z_marg[m] * l;
        }
        CK_NUMERIC_REQUIRE(leak <= opts.leak_tol, "lattice: transition mass ", leak,
                           " beyond the y grid exceeds ", opts.leak_tol,
                           "; widen y_span or add buckets");

        // thresholds per X state from the conditional driver distribution
        Eigen::MatrixXd thresholds(J, J);
        for (Eigen::Index j = 0; j < J; ++j) {
            Eigen::VectorXd f_y =
                x_marg[j] > 0.0 ? (joint.row(j) / x_marg[j]).transpose() : z_weights;
            thresholds.row(j) =
                solve_thresholds(row_cdf_of(chain.matrices[s_idx], j), f_y, lat.z_nodes, beta,
                                 opts.threshold_tol)
                    .transpose();
        }

        // conditional X transitions per z bucket
        std::vector<Eigen::MatrixXd> xtr(static_cast<std::size_t>(M));
        Eigen::VectorXd row;
        for (Eigen::Index m = 0; m < M; ++m) {
            Eigen::MatrixXd& pm = xtr[static_cast<std::size_t>(m)];
            pm.resize(J, J);
            for (Eigen::Index j = 0; j < J; ++j) {
                conditional_row(thresholds.row(j).transpose(), lat.z_nodes[m], beta, row);
                pm.row(j) = row.transpose();
            }
        }

        // joint(t+1)(k, m') = sum_m [sum_j joint(j,m) P(X'=k|j,z_m)] ytr(m,m')
        Eigen::MatrixXd staged(J, M);
        for (Eigen::Index m = 0; m < M; ++m)
            staged.col(m) = xtr[static_cast<std::size_t>(m)].transpose() * joint.col(m);
        Eigen::MatrixXd next = staged * ytr;

        lat.thresholds.push_back(std::move(thresholds));
        lat.y_trans.push_back(std::move(ytr));
        lat.x_trans.push_back(std::move(xtr));
        lat.joint.push_back(std::move(next));

        Eigen::VectorXd pushed = chain.push(s_idx + 1);
        lat.x_marginal_error[static_cast<Eigen::Index>(s_idx + 1)] =
            (lat.joint.back().rowwise().sum() - pushed).lpNorm<Eigen::Infinity>();
    }
    return lat;
}

double max_threshold_residual(const LatticeState& lattice, const TransitionChain& chain) {
    double worst = 0.0;
    const double s = std::sqrt(1.0 - lattice.beta * lattice.beta);
    for (std::size_t st = 0; st < lattice.thresholds.size(); ++st) {
        const Eigen::MatrixXd& joint = lattice.joint[st];
        Eigen::VectorXd x_marg = joint.rowwise().sum();
        for (Eigen::Index j = 0; j < joint.rows(); ++j) {
            if (x_marg[j] <= 0.0) continue;
            Eigen::VectorXd f_y = (joint.row(j) / x_marg[j]).transpose();
            Eigen::VectorXd cdf = row_cdf_of(chain.matrices[st], j);
            for (Eigen::Index k = 0; k < cdf.size(); ++k) {
                double c = lattice.thresholds[st](j, k);
                double value;
                if (c == -kInf)
                    value = 0.0;
                else if (c == kInf)
                    value = 1.0;
                else {
                    value = 0.0;
                    for (Eigen::Index m = 0; m < lattice.z_nodes.size(); ++m)
                        value += f_y[m] * norm_cdf((c - lattice.beta * lattice.z_nodes[m]) / s);
                }
                if (cdf[k] >= 1e-15 && cdf[k] <= 1.0 - 1e-15)
                    worst = std::max(worst, std::abs(value - cdf[k]));
            }
        }
    }
    return worst;
}

Eigen::VectorXd price_tranche_option(const LatticeState& lattice, const ModelState& state,
                                     const std::vector<TrancheDef>& tranches, double t_exercise,
                                     double t_maturity, const Eigen::VectorXd& strikes) {
    CK_REQUIRE(t_exercise < t_maturity, "tranche option: exercise must precede maturity");
    int i1 = -1, i2 = -1;
    for (std::size_t h = 0; h < lattice.horizons.size(); ++h) {
        if (std::abs(lattice.horizons[h] - t_exercise) < 1e-9) i1 = static_cast<int>(h);
        if (std::abs(lattice.horizons[h] - t_maturity) < 1e-9) i2 = static_cast<int>(h);
    }
    CK_REQUIRE(i1 >= 0 && i2 >= 0, "tranche option: exercise/maturity must lie on the lattice grid");
    if (strikes.size() > 0)
        CK_REQUIRE(strikes.size() == static_cast<Eigen::Index>(tranches.size()),
                   "tranche option: one strike per tranche required");

    const HorizonBuild& terminal = state.at(t_maturity);
    const Eigen::Index M = lattice.z_nodes.size();
    Eigen::VectorXd prices(static_cast<Eigen::Index>(tranches.size()));

    for (std::size_t k = 0; k < tranches.size(); ++k) {
        Eigen::VectorXd tl = cond_tranche_loss(terminal.model, tranches[k]);
        double strike = strikes.size() > 0
                            ? strikes[static_cast<Eigen::Index>(k)]
                            : terminal.model.marginal.probs.dot(tl);
        CK_REQUIRE(strike >= 0.0, "tranche option: strike must be >= 0");
        Eigen::MatrixXd value = tl * Eigen::RowVectorXd::Ones(M);
        for (int st = i2 - 1; st >= i1; --st) {
            const auto& xtr = lattice.x_trans[static_cast<std::size_t>(st)];
            Eigen::MatrixXd smoothed = value * lattice.y_trans[static_cast<std::size_t>(st)].transpose();
            Eigen::MatrixXd next(value.rows(), M);
            for (Eigen::Index m = 0; m < M; ++m)
                next.col(m) = xtr[static_cast<std::size_t>(m)] * smoothed.col(m);
            value = std::move(next);
        }
        const Eigen::MatrixXd& joint = lattice.joint[static_cast<std::size_t>(i1)];
        double price = 0.0;
        for (Eigen::Index j = 0; j < joint.rows(); ++j)
            for (Eigen::Index m = 0; m < M; ++m)
                price += joint(j, m) * std::max(value(j, m) - strike, 0.0);
        prices[static_cast<Eigen::Index>(k)] = price;
    }
    return prices;
}

} // namespace credkit
