// SPDX-License-Identifier: Apache-2.0
#include "credkit/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "credkit/errors.hpp"
#include "credkit/pricer.hpp"

namespace credkit {

namespace {

struct DualState {
    Eigen::VectorXd q;
    double log_z = 0.0;
};

// q(lambda) with log-sum-exp stabilisation.
DualState tilt(const Eigen::VectorXd& log_prior, const Eigen::MatrixXd& A,
               const Eigen::VectorXd& lambda) {
    Eigen::VectorXd s = log_prior;
    if (A.rows() > 0) s += A.transpose() * lambda;
    double m = s.maxCoeff();
    Eigen::VectorXd e = (s.array() - m).exp();
    double z = e.sum();
    DualState st;
    st.q = e / z;
    st.log_z = m + std::log(z);
    return st;
}

double dual_value(const DualState& st, const Eigen::VectorXd& b, const Eigen::VectorXd& lambda,
                  const Eigen::VectorXd& inv_w) {
    double g = b.dot(lambda) - st.log_z;
    for (Eigen::Index k = 0; k < lambda.size(); ++k)
        g -= 0.5 * inv_w[k] * lambda[k] * lambda[k];
    return g;
}

// Damped Newton ascent on the dual for a fixed working set of rows.
// Throws NumericError on divergence.
Eigen::VectorXd solve_working_set(const Eigen::VectorXd& log_prior, const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& b, const Eigen::VectorXd& inv_w,
                                  Eigen::VectorXd lambda, const EntropyOptions& opts,
                                  int* iterations) {
    const Eigen::Index k_rows = A.rows();
    if (k_rows == 0) return lambda;
    DualState st = tilt(log_prior, A, lambda);
    double g = dual_value(st, b, lambda, inv_w);
    for (int it = 0; it < opts.max_iter; ++it) {
        Eigen::VectorXd ea = A * st.q;
        Eigen::VectorXd grad = b - ea - inv_w.cwiseProduct(lambda);
        if (iterations) *iterations = it;
        if (grad.lpNorm<Eigen::Infinity>() < opts.tol) return lambda;
        Eigen::MatrixXd cov = A * st.q.asDiagonal() * A.transpose() - ea * ea.transpose();
        cov.diagonal() += inv_w;
        double ridge = std::max(1e-14, 1e-13 * cov.trace() / static_cast<double>(k_rows));
        cov.diagonal().array() += ridge;
        Eigen::VectorXd step = cov.ldlt().solve(grad);
        double slope = grad.dot(step);
        if (slope <= 0.0) step = grad, slope = grad.squaredNorm(); // fall back to ascent direction
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd cand = lambda + t * step;
            DualState st_c = tilt(log_prior, A, cand);
            double g_c = dual_value(st_c, b, cand, inv_w);
            if (g_c >= g + 1e-4 * t * slope) {
                lambda = cand;
                st = st_c;
                g = g_c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        CK_NUMERIC_REQUIRE(accepted, "max_entropy_solve: line search stalled at iteration ", it);
    }
    throw NumericError("max_entropy_solve: dual divergence, no convergence after " +
                       std::to_string(opts.max_iter) + " iterations");
}

} // namespace

EntropySolution max_entropy_solve(const EntropyProblem& problem, const EntropyOptions& opts) {
    const Eigen::Index n = problem.prior.size();
    CK_REQUIRE(n > 0, "max_entropy_solve: empty prior");
    CK_REQUIRE(problem.prior.minCoeff() > 0.0, "max_entropy_solve: prior must be strictly positive");
    Eigen::VectorXd prior = problem.prior / problem.prior.sum();
    Eigen::VectorXd log_prior = prior.array().log();

    const std::size_t m = problem.constraints.size();
    // Feasibility certificates: a probability vector keeps every functional
    // inside the coefficient range.
    for (const auto& c : problem.constraints) {
        CK_REQUIRE(c.coeffs.size() == n, "max_entropy_solve: constraint '", c.label,
                   "' has wrong length");
        CK_REQUIRE(c.coeffs.allFinite(), "max_entropy_solve: constraint '", c.label,
                   "' has non-finite coefficients");
        double lo = c.coeffs.minCoeff(), hi = c.coeffs.maxCoeff();
        if (c.sense == ConstraintSense::Equality && std::isinf(c.weight)) {
            CK_NUMERIC_REQUIRE(c.bound >= lo - 1e-12 && c.bound <= hi + 1e-12,
                               "max_entropy_solve: infeasible constraint '", c.label, "': bound ",
                               c.bound, " outside attainable range [", lo, ", ", hi, "]");
        } else if (c.sense == ConstraintSense::LessEqual) {
            CK_NUMERIC_REQUIRE(lo <= c.bound + 1e-12, "max_entropy_solve: infeasible constraint '",
                               c.label, "': minimum attainable value ", lo, " exceeds bound ",
                               c.bound);
        }
    }

    std::vector<std::size_t> eq_rows, ineq_rows;
    for (std::size_t k = 0; k < m; ++k)
        (problem.constraints[k].sense == ConstraintSense::Equality ? eq_rows : ineq_rows)
            .push_back(k);

    std::vector<bool> active(m, false);
    Eigen::VectorXd multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    EntropySolution sol;
    sol.q = prior;

    const int outer_cap = static_cast<int>(2 * ineq_rows.size() + 8);
    for (int outer = 0; outer < outer_cap; ++outer) {
        std::vector<std::size_t> working = eq_rows;
        for (std::size_t k : ineq_rows)
            if (active[k]) working.push_back(k);
        const Eigen::Index kw = static_cast<Eigen::Index>(working.size());
        Eigen::MatrixXd A(kw, n);
        Eigen::VectorXd b(kw), inv_w(kw), lambda(kw);
        for (Eigen::Index r = 0; r < kw; ++r) {
            const auto& c = problem.constraints[working[static_cast<std::size_t>(r)]];
            A.row(r) = c.coeffs.transpose();
            b[r] = c.bound;
            inv_w[r] = std::isinf(c.weight) ? 0.0 : 1.0 / c.weight;
            lambda[r] = multipliers[static_cast<Eigen::Index>(working[static_cast<std::size_t>(r)])];
        }
        int iterations = 0;
        lambda = solve_working_set(log_prior, A, b, inv_w, lambda, opts, &iterations);
        sol.iterations += iterations;
        sol.q = tilt(log_prior, A, lambda).q;
        multipliers.setZero();
        for (Eigen::Index r = 0; r < kw; ++r)
            multipliers[static_cast<Eigen::Index>(working[static_cast<std::size_t>(r)])] = lambda[r];

        // KKT checks for the inequalities: drop actives with wrong-sign
        // multipliers, add the most violated inactive row.
        int drop = -1;
        double worst_sign = 1e-10;
        for (std::size_t k : ineq_rows)
            if (active[k] && multipliers[static_cast<Eigen::Index>(k)] > worst_sign) {
                worst_sign = multipliers[static_cast<Eigen::Index>(k)];
                drop = static_cast<int>(k);
            }
        if (drop >= 0) {
            active[static_cast<std::size_t>(drop)] = false;
            multipliers[drop] = 0.0;
            continue;
        }
        int add = -1;
        double worst_viol = 10.0 * opts.tol;
        for (std::size_t k : ineq_rows) {
            if (active[k]) continue;
            double r = problem.constraints[k].coeffs.dot(sol.q) - problem.constraints[k].bound;
            if (r > worst_viol) {
                worst_viol = r;
                add = static_cast<int>(k);
            }
        }
        if (add >= 0) {
            active[static_cast<std::size_t>(add)] = true;
            continue;
        }
        break;
    }

    sol.multipliers = multipliers;
    sol.active = active;
    sol.residuals.resize(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k)
        sol.residuals[static_cast<Eigen::Index>(k)] =
            problem.constraints[k].coeffs.dot(sol.q) - problem.constraints[k].bound;
    sol.entropy = 0.0;
    sol.kl = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (sol.q[j] > 0.0) {
            sol.entropy -= sol.q[j] * std::log(sol.q[j]);
            sol.kl += sol.q[j] * std::log(sol.q[j] / prior[j]);
        }
    }
    return sol;
}

namespace {

struct HorizonProblem {
    EntropyProblem problem;
    std::vector<int> tranche_constraint; ///< constraint index per tranche row
};

// Assembles the constraint system for one horizon from the conditional state
// `hb` computed against the current marginal iterate.
HorizonProblem make_problem(const HorizonBuild& hb, const EtlTargets& targets,
                            std::size_t h_index, const Portfolio& pf,
                            const FactorMarginal* prev_marginal, const Eigen::VectorXd& prior,
                            bool soft, double relax_weight) {
    HorizonProblem hp;
    hp.problem.prior = prior;
    const Eigen::Index J = hb.model.marginal.grid.size();
    const double t = hb.model.t;

    // Portfolio expected loss under the original curves: preserved exactly.
    double el = 0.0;
    for (const auto& c : pf.names)
        el += c.weight * c.default_prob_at(t) * (1.0 - c.curve_recovery);
    Eigen::VectorXd mu_l(J);
    for (Eigen::Index j = 0; j < J; ++j) mu_l[j] = node_moments(hb.model, j).mu_loss;
    hp.problem.constraints.push_back({mu_l, el, ConstraintSense::Equality,
                                      std::numeric_limits<double>::infinity(), "portfolio-el"});

    hp.tranche_constraint.assign(targets.tranches.size(), -1);
    for (std::size_t k = 0; k < targets.tranches.size(); ++k) {
        const TrancheDef& tr = targets.tranches[k];
        if (tr.attach == 0.0 && tr.detach == 1.0) {
            hp.tranche_constraint[k] = 0; // served by the expected-loss row
            continue;
        }
        Eigen::VectorXd coeffs =
            cond_tranche_loss(hb.model, tr) * tr.width(); // absolute loss units
        double bound = targets.etl(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h_index)) *
                       tr.width();
        std::ostringstream label;
        label << "etl " << tr.attach << "-" << tr.detach;
        hp.tranche_constraint[k] = static_cast<int>(hp.problem.constraints.size());
        hp.problem.constraints.push_back(
            {coeffs, bound, ConstraintSense::Equality,
             soft ? relax_weight : std::numeric_limits<double>::infinity(), label.str()});
    }

    if (prev_marginal) {
        Eigen::VectorXd f_prev = prev_marginal->cdf();
        for (Eigen::Index j = 0; j + 1 < J; ++j) {
            Eigen::VectorXd ind = Eigen::VectorXd::Zero(J);
            ind.head(j + 1).setOnes();
            std::ostringstream label;
            label << "dominance@" << j;
            hp.problem.constraints.push_back(
                {ind, f_prev[j], ConstraintSense::LessEqual,
                 std::numeric_limits<double>::infinity(), label.str()});
        }
    }
    return hp;
}

} // namespace

CalibrationResult calibrate(const Portfolio& pf, const EtlTargets& targets,
                            const ModelConfig& cfg) {
    pf.validate();
    targets.validate();
    check_portfolio_row(pf, targets, cfg.el_consistency_tol);
    CK_REQUIRE(std::abs(targets.horizons.front() - cfg.anchor_tenor) < 1e-9,
               "first target horizon (", targets.horizons.front(),
               ") must equal the anchor tenor (", cfg.anchor_tenor, ")");

    Eigen::VectorXd grid = make_factor_grid(cfg.grid_size, cfg.x_min_pos, cfg.x_max);
    const Eigen::Index J = grid.size();

    CalibrationResult result;
    result.targets = targets;
    result.state.portfolio = pf;

    EntropyOptions eopts;
    eopts.tol = cfg.entropy_tol;
    eopts.max_iter = cfg.entropy_max_iter;

    std::vector<RecoverySpec> specs;
    const FactorMarginal* prev_marginal = nullptr;
    const HorizonBuild* prev_build = nullptr;

    for (std::size_t h = 0; h < targets.horizons.size(); ++h) {
        const double t = targets.horizons[h];
        FactorMarginal marginal;
        marginal.grid = grid;
        marginal.horizon = t;
        Eigen::VectorXd prior =
            h == 0 ? Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J))
                   : result.state.family.marginals.back().probs;
        marginal.probs = prior;

        HorizonCalibration diag;
        bool converged = false;
        HorizonBuild build;
        EntropySolution sol;
        for (int outer = 0; outer < cfg.fixed_point_max_iter; ++outer) {
            if (h == 0) specs = calibrate_scales(pf, marginal, cfg);
            build = build_horizon(pf, specs, marginal, h, h == 0, prev_build, cfg);
            HorizonProblem hp = make_problem(build, targets, h, pf, prev_marginal, prior,
                                             diag.soft_fallback, cfg.relax_weight);
            try {
                sol = max_entropy_solve(hp.problem, eopts);
            } catch (const NumericError&) {
                if (diag.soft_fallback) throw;
                diag.soft_fallback = true; // relax the tranche rows, keep the EL row hard
                HorizonProblem soft_hp = make_problem(build, targets, h, pf, prev_marginal,
                                                      prior, true, cfg.relax_weight);
                sol = max_entropy_solve(soft_hp.problem, eopts);
            }
            double delta = (sol.q - marginal.probs).lpNorm<Eigen::Infinity>();
            diag.step_history.push_back(delta);
            marginal.probs = sol.q;
            diag.outer_iterations = outer + 1;
            if (delta < cfg.fixed_point_tol) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "calibration at " << t << "y did not converge after "
               << cfg.fixed_point_max_iter << " iterations; |dq| trace:";
            for (double d : diag.step_history) os << " " << d;
            throw NumericError(os.str());
        }

        // Final state against the converged marginal.
        if (h == 0) specs = calibrate_scales(pf, marginal, cfg);
        build = build_horizon(pf, specs, marginal, h, h == 0, prev_build, cfg);

        diag.marginal = marginal;
        diag.entropy = sol.entropy;
        diag.kl = sol.kl;
        diag.beta_clamps = build.beta_clamps;
        diag.c_clamps = build.c_clamps;
        diag.active_dominance =
            static_cast<int>(std::count(sol.active.begin(), sol.active.end(), true));
        diag.target_etl.resize(static_cast<Eigen::Index>(targets.tranches.size()));
        diag.model_etl.resize(static_cast<Eigen::Index>(targets.tranches.size()));
        for (std::size_t k = 0; k < targets.tranches.size(); ++k) {
            const TrancheDef& tr = targets.tranches[k];
            diag.target_etl[static_cast<Eigen::Index>(k)] =
                targets.etl(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h));
            diag.model_etl[static_cast<Eigen::Index>(k)] = etl(build.model, tr.attach, tr.detach);
        }

        result.state.family.marginals.push_back(marginal);
        result.state.horizons.push_back(std::move(build));
        result.state.beta_clamps += result.state.horizons.back().beta_clamps;
        result.state.c_clamps += result.state.horizons.back().c_clamps;
        result.horizons.push_back(std::move(diag));
        prev_marginal = &result.state.family.marginals.back();
        prev_build = &result.state.horizons.back();
    }
    result.state.specs = specs;
    result.state.family.validate(1e-9);
    return result;
}

std::string calibration_report(const CalibrationResult& result) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6);
    os << "# calibration residuals\n";
    os << "# horizon attach detach target model residual\n";
    for (std::size_t h = 0; h < result.horizons.size(); ++h) {
        const auto& d = result.horizons[h];
        for (std::size_t k = 0; k < result.targets.tranches.size(); ++k) {
            const auto& tr = result.targets.tranches[k];
            double tgt = d.target_etl[static_cast<Eigen::Index>(k)];
            double mod = d.model_etl[static_cast<Eigen::Index>(k)];
            os << result.targets.horizons[h] << " " << tr.attach << " " << tr.detach << " " << tgt
               << " " << mod << " " << (mod - tgt) << "\n";
        }
    }
    os << "# horizon iterations entropy kl beta_clamps c_clamps soft_fallback active_dominance\n";
    for (std::size_t h = 0; h < result.horizons.size(); ++h) {
        const auto& d = result.horizons[h];
        os << "# " << result.targets.horizons[h] << " " << d.outer_iterations << " " << d.entropy
           << " " << d.kl << " " << d.beta_clamps << " " << d.c_clamps << " "
           << (d.soft_fallback ? 1 : 0) << " " << d.active_dominance << "\n";
    }
    return os.str();
}

} // namespace credkit
