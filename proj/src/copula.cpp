// SPDX-License-Identifier: Apache-2.0
#include "credkit/copula.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "credkit/errors.hpp"
#include "credkit/math.hpp"
#include "credkit/roots.hpp"

namespace credkit {

Eigen::VectorXd FactorMarginal::cdf() const {
    Eigen::VectorXd f(probs.size());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        f[j] = acc;
    }
    return f;
}

void FactorMarginal::validate() const {
    CK_REQUIRE(grid.size() == probs.size() && grid.size() > 0, "FactorMarginal: bad sizes");
    CK_REQUIRE(grid[0] >= 0.0, "FactorMarginal: grid must be non-negative");
    for (Eigen::Index j = 1; j < grid.size(); ++j)
        CK_REQUIRE(grid[j] > grid[j - 1], "FactorMarginal: grid must be ascending");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        CK_REQUIRE(probs[j] >= -1e-15, "FactorMarginal: negative probability at node ", j);
        sum += probs[j];
    }
    CK_REQUIRE(std::abs(sum - 1.0) <= 1e-12, "FactorMarginal: probabilities sum to ", sum);
}

const Eigen::VectorXd& MarginalFamily::grid() const {
    CK_REQUIRE(!marginals.empty(), "MarginalFamily: empty");
    return marginals.front().grid;
}

std::vector<double> MarginalFamily::horizons() const {
    std::vector<double> h;
    h.reserve(marginals.size());
    for (const auto& m : marginals) h.push_back(m.horizon);
    return h;
}

void MarginalFamily::validate(double dominance_tol) const {
    CK_REQUIRE(!marginals.empty(), "MarginalFamily: empty");
    for (const auto& m : marginals) m.validate();
    for (std::size_t k = 1; k < marginals.size(); ++k) {
        CK_REQUIRE(marginals[k].horizon > marginals[k - 1].horizon,
                   "MarginalFamily: horizons not ascending");
        CK_REQUIRE(marginals[k].grid.size() == marginals[k - 1].grid.size() &&
                       (marginals[k].grid.array() == marginals[k - 1].grid.array()).all(),
                   "MarginalFamily: marginals must share one grid");
        Eigen::VectorXd f_prev = marginals[k - 1].cdf();
        Eigen::VectorXd f = marginals[k].cdf();
        for (Eigen::Index j = 0; j < f.size(); ++j)
            CK_REQUIRE(f[j] <= f_prev[j] + dominance_tol,
                       "MarginalFamily: CDF dominance violated at node ", j, " between t=",
                       marginals[k - 1].horizon, " and t=", marginals[k].horizon);
    }
}

MarginalFamily load_marginals(const std::string& path) {
    std::ifstream in(path);
    CK_REQUIRE(in.good(), "cannot open marginals file '", path, "'");
    std::string line;
    int line_no = 0;
    std::vector<double> ts, xs, qs;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        double t, x, q;
        CK_REQUIRE(static_cast<bool>(is >> t >> x >> q), "marginals file line ", line_no,
                   ": expected 't x q'");
        ts.push_back(t);
        xs.push_back(x);
        qs.push_back(q);
    }
    CK_REQUIRE(!ts.empty(), "marginals file '", path, "' is empty");
    MarginalFamily fam;
    std::size_t i = 0;
    while (i < ts.size()) {
        FactorMarginal m;
        m.horizon = ts[i];
        std::vector<double> grid, probs;
        while (i < ts.size() && ts[i] == m.horizon) {
            grid.push_back(xs[i]);
            probs.push_back(qs[i]);
            ++i;
        }
        m.grid = Eigen::Map<Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
        m.probs = Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
        fam.marginals.push_back(std::move(m));
    }
    fam.validate(1e-9);
    return fam;
}

void save_marginals(const MarginalFamily& fam, const std::string& path) {
    std::ofstream out(path);
    CK_REQUIRE(out.good(), "cannot open '", path, "' for writing");
    out << "# t x q\n" << std::setprecision(17);
    for (const auto& m : fam.marginals)
        for (Eigen::Index j = 0; j < m.grid.size(); ++j)
            out << m.horizon << " " << m.grid[j] << " " << m.probs[j] << "\n";
}

Eigen::VectorXd make_factor_grid(int size, double x_min_pos, double x_max) {
    CK_REQUIRE(size >= 3, "factor grid needs at least 3 points");
    CK_REQUIRE(x_min_pos > 0.0 && x_max > x_min_pos, "factor grid needs 0 < x_min < x_max");
    Eigen::VectorXd g(size);
    g[0] = 0.0;
    double ratio = std::pow(x_max / x_min_pos, 1.0 / (size - 2));
    for (int j = 1; j < size; ++j) g[j] = x_min_pos * std::pow(ratio, j - 1);
    g[size - 1] = x_max;
    return g;
}

namespace {

double exp_load(const FactorMarginal& m, double beta) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.grid.size(); ++j)
        acc += m.probs[j] * std::exp(-beta * m.grid[j]);
    return acc;
}

// Solves E[e^{-beta x}] = target for beta >= 0; the objective is strictly
// decreasing when the marginal carries mass at x > 0.
double solve_beta(const FactorMarginal& m, double target) {
    double mass_at_zero = 0.0;
    for (Eigen::Index j = 0; j < m.grid.size(); ++j)
        if (m.grid[j] == 0.0) mass_at_zero += m.probs[j];
    CK_NUMERIC_REQUIRE(mass_at_zero < target, "hazard split infeasible: factor mass at x=0 (",
                       mass_at_zero, ") >= survival target (", target, ")");
    double hi = 1.0;
    while (exp_load(m, hi) > target) {
        hi *= 2.0;
        CK_NUMERIC_REQUIRE(hi < 1e12, "hazard split infeasible: no finite beta reaches target ",
                           target);
    }
    double beta = bisect([&](double b) { return exp_load(m, b) - target; }, 0.0, hi, 1e-13);
    // Newton polish
    for (int it = 0; it < 4; ++it) {
        double f = 0.0, df = 0.0;
        for (Eigen::Index j = 0; j < m.grid.size(); ++j) {
            double e = m.probs[j] * std::exp(-beta * m.grid[j]);
            f += e;
            df -= m.grid[j] * e;
        }
        if (df == 0.0) break;
        double step = (f - target) / df;
        double next = beta - step;
        if (next < 0.0) break;
        beta = next;
        if (std::abs(step) < 1e-15 * (1.0 + beta)) break;
    }
    return beta;
}

} // namespace

ConditionalCurve calibrate_beta(double p_t, double gamma, const FactorMarginal& marginal,
                                const ConditionalCurve* prev) {
    CK_REQUIRE(p_t >= 0.0 && p_t < 1.0, "calibrate_beta: p_t out of [0,1)");
    CK_REQUIRE(gamma >= 0.0 && gamma <= 1.0, "calibrate_beta: gamma out of [0,1]");
    ConditionalCurve out;
    if (p_t == 0.0 || gamma == 0.0) {
        out.beta = 0.0;
        out.c = 1.0 - p_t;
    } else {
        double target = std::pow(1.0 - p_t, gamma);
        out.beta = solve_beta(marginal, target);
        out.c = (1.0 - p_t) / exp_load(marginal, out.beta);
    }
    if (prev) {
        if (out.beta < prev->beta) {
            // raise beta to keep p(x,t) non-decreasing in t at large x and
            // re-solve c from the exact unconditional probability
            out.beta = prev->beta;
            out.c = (1.0 - p_t) / exp_load(marginal, out.beta);
            out.beta_clamped = true;
        }
        if (out.c > prev->c * (1.0 + 1e-14)) {
            // lower c to the previous value (keeps p(0,t) non-decreasing) and
            // push the difference into beta, still matching p exactly
            double target = (1.0 - p_t) / prev->c;
            CK_NUMERIC_REQUIRE(target <= 1.0, "monotonicity violation: cannot keep c non-increasing for p=", p_t);
            out.c = prev->c;
            out.beta = solve_beta(marginal, target);
            out.c_clamped = true;
            CK_NUMERIC_REQUIRE(out.beta >= prev->beta * (1.0 - 1e-12),
                               "monotonicity violation: beta and c constraints conflict at p=", p_t);
            out.beta = std::max(out.beta, prev->beta);
        }
    }
    CK_NUMERIC_REQUIRE(out.c > 0.0 && out.c <= 1.0 + 1e-14,
                       "calibrate_beta: idiosyncratic survival out of (0,1]: ", out.c);
    out.c = std::min(out.c, 1.0);
    return out;
}

double conditional_default_prob(const ConditionalCurve& cond, double x) {
    CK_REQUIRE(x >= 0.0, "conditional_default_prob: x must be >= 0");
    double p = 1.0 - cond.c * std::exp(-cond.beta * x);
    return std::min(std::max(p, 0.0), 1.0);
}

Eigen::VectorXd conditional_default_probs(const ConditionalCurve& cond,
                                          const Eigen::VectorXd& grid) {
    Eigen::VectorXd p(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) p[j] = conditional_default_prob(cond, grid[j]);
    return p;
}

double gaussian_reference(double p_t, double rho, double x) {
    CK_REQUIRE(p_t > 0.0 && p_t < 1.0, "gaussian_reference: p_t out of (0,1)");
    CK_REQUIRE(rho >= 0.0 && rho < 1.0, "gaussian_reference: rho out of [0,1)");
    return norm_cdf((norm_quantile(p_t) - std::sqrt(rho) * x) / std::sqrt(1.0 - rho));
}

} // namespace credkit
