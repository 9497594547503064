// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "credkit/copula.hpp"

namespace credkit {

/// Markov chain of the common factor across the calibrated horizons:
/// the initial distribution plus one row-stochastic matrix per consecutive
/// pair. Upward moves only (upper-triangular support).
struct TransitionChain {
    std::vector<double> horizons;        ///< ascending, size >= 1
    Eigen::VectorXd initial;             ///< distribution of X at horizons[0]
    std::vector<Eigen::MatrixXd> matrices; ///< size horizons.size()-1

    std::size_t states() const { return static_cast<std::size_t>(initial.size()); }
    void validate() const;
    /// Pushes the initial distribution through the first `steps` matrices.
    Eigen::VectorXd push(std::size_t steps) const;
};

/// Quantile (co-monotonic) coupling: mass at x_j flows to the states spanning
/// the same CDF interval at the next horizon. Maximises the temporal
/// association of the factor.
TransitionChain comonotonic_chain(const MarginalFamily& family);

/// Entropy-maximal coupling with the given consecutive marginals and
/// monotone support, computed by iterative proportional fitting on a masked
/// uniform kernel.
TransitionChain max_entropy_chain(const MarginalFamily& family);

struct ChainDiagnostics {
    double max_row_sum_error = 0.0;
    double max_marginal_error = 0.0; ///< worst |q(t) pi - q(t+1)| entry, plus initial mismatch
    int support_violations = 0;      ///< entries below the diagonal
    bool horizons_match = true;
};

ChainDiagnostics validate_chain(const TransitionChain& chain, const MarginalFamily& family);

TransitionChain load_chain(const std::string& path);
void save_chain(const TransitionChain& chain, const std::string& path);

} // namespace credkit
