// SPDX-License-Identifier: Apache-2.0
#include "credkit/markov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "credkit/errors.hpp"

namespace credkit {

void TransitionChain::validate() const {
    CK_REQUIRE(!horizons.empty(), "TransitionChain: no horizons");
    CK_REQUIRE(matrices.size() + 1 == horizons.size(), "TransitionChain: matrix count mismatch");
    const Eigen::Index J = initial.size();
    CK_REQUIRE(J > 0, "TransitionChain: empty initial distribution");
    CK_REQUIRE(std::abs(initial.sum() - 1.0) <= 1e-12, "TransitionChain: initial distribution sums to ",
               initial.sum());
    for (std::size_t s = 0; s < matrices.size(); ++s) {
        CK_REQUIRE(horizons[s + 1] > horizons[s], "TransitionChain: horizons not ascending");
        const Eigen::MatrixXd& m = matrices[s];
        CK_REQUIRE(m.rows() == J && m.cols() == J, "TransitionChain: matrix ", s, " has wrong shape");
        for (Eigen::Index j = 0; j < J; ++j) {
            double row = 0.0;
            for (Eigen::Index k = 0; k < J; ++k) {
                CK_REQUIRE(m(j, k) >= 0.0, "TransitionChain: negative entry at (", j, ",", k, ")");
                CK_REQUIRE(k >= j || m(j, k) == 0.0,
                           "TransitionChain: downward move at (", j, ",", k, ")");
                row += m(j, k);
            }
            CK_REQUIRE(std::abs(row - 1.0) <= 1e-12, "TransitionChain: row ", j, " of matrix ", s,
                       " sums to ", row);
        }
    }
}

Eigen::VectorXd TransitionChain::push(std::size_t steps) const {
    CK_REQUIRE(steps < horizons.size(), "TransitionChain: push beyond last horizon");
    Eigen::VectorXd q = initial;
    for (std::size_t s = 0; s < steps; ++s) q = matrices[s].transpose() * q;
    return q;
}

namespace {

void require_dominance(const MarginalFamily& family) {
    try {
        family.validate(1e-12);
    } catch (const InputError& e) {
        throw InputError(std::string("chain construction needs an increasing factor family: ") +
                         e.what());
    }
}

Eigen::MatrixXd comonotonic_matrix(const FactorMarginal& from, const FactorMarginal& to) {
    const Eigen::Index J = from.grid.size();
    Eigen::VectorXd f0 = from.cdf();
    Eigen::VectorXd f1 = to.cdf();
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(J, J);
    for (Eigen::Index j = 0; j < J; ++j) {
        double q_j = from.probs[j];
        if (q_j <= 0.0) {
            pi(j, j) = 1.0; // zero-mass state: point mass, carries no probability
            continue;
        }
        double lo_j = j == 0 ? 0.0 : f0[j - 1];
        double hi_j = f0[j];
        for (Eigen::Index k = j; k < J; ++k) {
            double lo_k = k == 0 ? 0.0 : f1[k - 1];
            double hi_k = f1[k];
            double overlap = std::min(hi_j, hi_k) - std::max(lo_j, lo_k);
            if (overlap > 0.0) pi(j, k) = overlap / q_j;
        }
        double row = pi.row(j).sum();
        if (row > 0.0) pi.row(j) /= row;
    }
    return pi;
}

Eigen::MatrixXd max_entropy_matrix(const FactorMarginal& from, const FactorMarginal& to) {
    const Eigen::Index J = from.grid.size();
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(J, J);
    for (Eigen::Index j = 0; j < J; ++j)
        for (Eigen::Index k = j; k < J; ++k)
            if (from.probs[j] > 0.0 && to.probs[k] > 0.0) joint(j, k) = 1.0;

    const double tol = 1e-12;
    const int max_sweeps = 100000;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (Eigen::Index j = 0; j < J; ++j) {
            double rs = joint.row(j).sum();
            if (rs > 0.0) joint.row(j) *= from.probs[j] / rs;
        }
        double err = 0.0;
        for (Eigen::Index k = 0; k < J; ++k) {
            double cs = joint.col(k).sum();
            if (cs > 0.0) joint.col(k) *= to.probs[k] / cs;
            err = std::max(err, std::abs(cs - to.probs[k]));
        }
        // row error after the column pass
        double row_err = 0.0;
        for (Eigen::Index j = 0; j < J; ++j)
            row_err = std::max(row_err, std::abs(joint.row(j).sum() - from.probs[j]));
        if (err < tol && row_err < tol) {
            converged = true;
            break;
        }
    }
    CK_NUMERIC_REQUIRE(converged, "max_entropy_chain: proportional fitting stalled between t=",
                       from.horizon, " and t=", to.horizon);

    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(J, J);
    for (Eigen::Index j = 0; j < J; ++j) {
        double rs = joint.row(j).sum();
        if (rs <= 0.0) {
            pi(j, j) = 1.0;
        } else {
            pi.row(j) = joint.row(j) / rs;
        }
    }
    return pi;
}

} // namespace

TransitionChain comonotonic_chain(const MarginalFamily& family) {
    require_dominance(family);
    TransitionChain chain;
    chain.horizons = family.horizons();
    chain.initial = family.marginals.front().probs;
    for (std::size_t s = 0; s + 1 < family.marginals.size(); ++s)
        chain.matrices.push_back(
            comonotonic_matrix(family.marginals[s], family.marginals[s + 1]));
    chain.validate();
    return chain;
}

TransitionChain max_entropy_chain(const MarginalFamily& family) {
    require_dominance(family);
    TransitionChain chain;
    chain.horizons = family.horizons();
    chain.initial = family.marginals.front().probs;
    for (std::size_t s = 0; s + 1 < family.marginals.size(); ++s)
        chain.matrices.push_back(
            max_entropy_matrix(family.marginals[s], family.marginals[s + 1]));
    chain.validate();
    return chain;
}

ChainDiagnostics validate_chain(const TransitionChain& chain, const MarginalFamily& family) {
    ChainDiagnostics d;
    auto fam_h = family.horizons();
    d.horizons_match = fam_h == chain.horizons &&
                       family.marginals.front().probs.size() == chain.initial.size();
    if (d.horizons_match)
        d.max_marginal_error =
            (chain.initial - family.marginals.front().probs).lpNorm<Eigen::Infinity>();
    for (std::size_t s = 0; s < chain.matrices.size(); ++s) {
        const Eigen::MatrixXd& m = chain.matrices[s];
        for (Eigen::Index j = 0; j < m.rows(); ++j) {
            d.max_row_sum_error = std::max(d.max_row_sum_error, std::abs(m.row(j).sum() - 1.0));
            for (Eigen::Index k = 0; k < j; ++k)
                if (m(j, k) != 0.0) ++d.support_violations;
        }
        if (d.horizons_match && s + 1 < family.marginals.size()) {
            Eigen::VectorXd pushed = m.transpose() * family.marginals[s].probs;
            d.max_marginal_error = std::max(
                d.max_marginal_error,
                (pushed - family.marginals[s + 1].probs).lpNorm<Eigen::Infinity>());
        }
    }
    return d;
}

TransitionChain load_chain(const std::string& path) {
    std::ifstream in(path);
    CK_REQUIRE(in.good(), "cannot open chain file '", path, "'");
    TransitionChain chain;
    std::string line;
    int line_no = 0;
    std::vector<double> initial;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string tag;
        is >> tag;
        if (tag == "H") {
            double t;
            while (is >> t) chain.horizons.push_back(t);
        } else if (tag == "Q") {
            int j;
            double q;
            CK_REQUIRE(static_cast<bool>(is >> j >> q), "chain file line ", line_no, ": bad Q row");
            CK_REQUIRE(j == static_cast<int>(initial.size()), "chain file line ", line_no,
                       ": Q rows must be in state order");
            initial.push_back(q);
        } else if (tag == "T") {
            int s, j, k;
            double v;
            CK_REQUIRE(static_cast<bool>(is >> s >> j >> k >> v), "chain file line ", line_no,
                       ": bad T row");
            CK_REQUIRE(!initial.empty(), "chain file line ", line_no, ": T before Q rows");
            const Eigen::Index J = static_cast<Eigen::Index>(initial.size());
            while (chain.matrices.size() <= static_cast<std::size_t>(s))
                chain.matrices.push_back(Eigen::MatrixXd::Zero(J, J));
            CK_REQUIRE(j >= 0 && j < J && k >= 0 && k < J, "chain file line ", line_no,
                       ": state index out of range");
            chain.matrices[static_cast<std::size_t>(s)](j, k) = v;
        } else {
            throw InputError("chain file line " + std::to_string(line_no) + ": unknown tag '" +
                             tag + "'");
        }
    }
    chain.initial =
        Eigen::Map<Eigen::VectorXd>(initial.data(), static_cast<Eigen::Index>(initial.size()));
    chain.validate();
    return chain;
}

void save_chain(const TransitionChain& chain, const std::string& path) {
    std::ofstream out(path);
    CK_REQUIRE(out.good(), "cannot open '", path, "' for writing");
    out << "# credkit chain: H horizons; Q j q_initial; T step j k pi\n";
    out << std::setprecision(17);
    out << "H";
    for (double t : chain.horizons) out << " " << t;
    out << "\n";
    for (Eigen::Index j = 0; j < chain.initial.size(); ++j)
        out << "Q " << j << " " << chain.initial[j] << "\n";
    for (std::size_t s = 0; s < chain.matrices.size(); ++s)
        for (Eigen::Index j = 0; j < chain.matrices[s].rows(); ++j)
            for (Eigen::Index k = 0; k < chain.matrices[s].cols(); ++k)
                if (chain.matrices[s](j, k) != 0.0)
                    out << "T " << s << " " << j << " " << k << " " << chain.matrices[s](j, k)
                        << "\n";
}

} // namespace credkit
