// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "credkit/markov.hpp"
#include "credkit/model.hpp"
#include "credkit/rng.hpp"

namespace credkit {

struct SimConfig {
    std::int64_t paths = 1000000;
    std::uint64_t seed = 20090115;
    double condition_tenor = 5.0; ///< tenor of the conditioning loss cap
    double condition_cap = 0.10;  ///< keep paths with loss(condition_tenor) < cap
    enum class RecoveryDist { TwoPoint, Beta };
    RecoveryDist recovery_dist = RecoveryDist::TwoPoint;
};

/// Inverse-CDF sampler over a transition chain.
class ChainSampler {
public:
    explicit ChainSampler(const TransitionChain& chain);
    /// Draws a full factor path (one grid index per horizon).
    void draw(PhiloxStream& rng, std::vector<int>& path) const;
    std::size_t steps() const { return row_cdfs_.size() + 1; }

private:
    Eigen::VectorXd initial_cdf_;
    std::vector<Eigen::MatrixXd> row_cdfs_;
};

/// Convenience wrapper around ChainSampler for one-off draws.
std::vector<int> draw_path(const TransitionChain& chain, PhiloxStream& rng);

struct SimResult {
    std::vector<double> horizons;
    std::vector<TrancheDef> tranches;
    std::int64_t paths = 0;
    Eigen::MatrixXd etl, etl_se; ///< tranches x horizons, fractions of tranche notional
    Eigen::MatrixXd eta, eta_se;
    Eigen::MatrixXd name_el, name_el_se; ///< names x horizons, per unit name notional

    // Accumulators for incremental period losses on the conditioned subsample.
    std::int64_t cond_count = 0;
    Eigen::VectorXd cond_sum;
    Eigen::MatrixXd cond_cross;
};

/// Draws default-time and recovery paths from the chain:
/// 1. factor path from the Markov chain;
/// 2. per name one uniform d, assigned to the first period where the
///    conditional default probability along the path exceeds d;
/// 3. spot recovery drawn at d from a two-point (or moment-matched beta)
///    distribution.
/// Deterministic for a fixed seed regardless of the worker count.
SimResult simulate_portfolio(const SimConfig& config, const ModelState& state,
                             const TransitionChain& chain,
                             const std::vector<TrancheDef>& tranches);

/// Pearson correlations of incremental losses between periods on the
/// conditioned subsample.
Eigen::MatrixXd temporal_loss_correlation(const SimResult& result);

struct RecoveryCrosscheck {
    SimResult two_point;
    SimResult beta;
    Eigen::MatrixXd etl_diff; ///< |two-point - beta| per tranche/horizon
};

/// Re-runs the simulation with a moment-matched beta spot recovery and
/// reports the tranche ETL differences against the two-point run.
RecoveryCrosscheck beta_recovery_crosscheck(const SimConfig& config, const ModelState& state,
                                            const TransitionChain& chain,
                                            const std::vector<TrancheDef>& tranches);

} // namespace credkit
