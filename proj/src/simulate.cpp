// SPDX-License-Identifier: Apache-2.0
#include "credkit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "credkit/errors.hpp"
#include "credkit/parallel.hpp"

namespace credkit {

namespace {

int sample_cdf(const Eigen::VectorXd& cdf, double u) {
    const double* begin = cdf.data();
    const double* end = begin + cdf.size();
    const double* it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return static_cast<int>(it - begin);
}

double beta_draw(double mean, double variance, PhiloxStream& rng) {
    if (variance <= 0.0) return mean;
    double max_var = mean * (1.0 - mean);
    variance = std::min(variance, max_var * (1.0 - 1e-12));
    double nu = max_var / variance - 1.0;
    std::gamma_distribution<double> ga(mean * nu, 1.0);
    std::gamma_distribution<double> gb((1.0 - mean) * nu, 1.0);
    double a = ga(rng);
    double b = gb(rng);
    double s = a + b;
    return s > 0.0 ? a / s : mean;
}

struct Accumulator {
    Eigen::MatrixXd tl_sum, tl_sq, ta_sum, ta_sq; // tranches x horizons
    Eigen::MatrixXd el_sum, el_sq;                // names x horizons
    Eigen::VectorXd cond_sum;
    Eigen::MatrixXd cond_cross;
    std::int64_t cond_count = 0;

    Accumulator(Eigen::Index n_tranches, Eigen::Index n_horizons, Eigen::Index n_names) {
        tl_sum = Eigen::MatrixXd::Zero(n_tranches, n_horizons);
        tl_sq = tl_sum;
        ta_sum = tl_sum;
        ta_sq = tl_sum;
        el_sum = Eigen::MatrixXd::Zero(n_names, n_horizons);
        el_sq = el_sum;
        cond_sum = Eigen::VectorXd::Zero(n_horizons);
        cond_cross = Eigen::MatrixXd::Zero(n_horizons, n_horizons);
    }

    void merge(const Accumulator& o) {
        tl_sum += o.tl_sum;
        tl_sq += o.tl_sq;
        ta_sum += o.ta_sum;
        ta_sq += o.ta_sq;
        el_sum += o.el_sum;
        el_sq += o.el_sq;
        cond_sum += o.cond_sum;
        cond_cross += o.cond_cross;
        cond_count += o.cond_count;
    }
};

} // namespace

ChainSampler::ChainSampler(const TransitionChain& chain) {
    chain.validate();
    initial_cdf_.resize(chain.initial.size());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < chain.initial.size(); ++j) {
        acc += chain.initial[j];
        initial_cdf_[j] = acc;
    }
    for (const auto& m : chain.matrices) {
        Eigen::MatrixXd cdf(m.rows(), m.cols());
        for (Eigen::Index j = 0; j < m.rows(); ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < m.cols(); ++k) {
                s += m(j, k);
                cdf(j, k) = s;
            }
        }
        row_cdfs_.push_back(std::move(cdf));
    }
}

void ChainSampler::draw(PhiloxStream& rng, std::vector<int>& path) const {
    path.resize(steps());
    int j = sample_cdf(initial_cdf_, rng.next_double());
    path[0] = j;
    for (std::size_t s = 0; s < row_cdfs_.size(); ++s) {
        const auto& cdf = row_cdfs_[s];
        double u = rng.next_double();
        Eigen::VectorXd row = cdf.row(j).transpose();
        j = sample_cdf(row, u);
        path[s + 1] = j;
    }
}

std::vector<int> draw_path(const TransitionChain& chain, PhiloxStream& rng) {
    std::vector<int> path;
    ChainSampler(chain).draw(rng, path);
    return path;
}

SimResult simulate_portfolio(const SimConfig& config, const ModelState& state,
                             const TransitionChain& chain,
                             const std::vector<TrancheDef>& tranches) {
    CK_REQUIRE(config.paths >= 1, "simulate: paths must be >= 1");
    CK_REQUIRE(!tranches.empty(), "simulate: no tranches");
    const std::size_t n_h = state.horizons.size();
    CK_REQUIRE(chain.horizons.size() == n_h, "simulate: chain horizons differ from model horizons");
    for (std::size_t h = 0; h < n_h; ++h)
        CK_REQUIRE(std::abs(chain.horizons[h] - state.horizons[h].model.t) < 1e-9,
                   "simulate: chain horizon ", chain.horizons[h], " does not match model");
    // The conditional curves must be calibrated against the same marginals
    // the chain reproduces.
    for (std::size_t h = 0; h < n_h; ++h) {
        Eigen::VectorXd pushed = chain.push(h);
        double err = (pushed - state.family.marginals[h].probs).lpNorm<Eigen::Infinity>();
        CK_REQUIRE(err <= 1e-6, "simulate: chain marginal at t=", chain.horizons[h],
                   " deviates from the calibrated marginal by ", err);
    }

    const Eigen::Index n_names = static_cast<Eigen::Index>(state.portfolio.size());
    const Eigen::Index n_tr = static_cast<Eigen::Index>(tranches.size());
    const Eigen::Index n_hz = static_cast<Eigen::Index>(n_h);

    int cond_idx = -1;
    for (std::size_t h = 0; h < n_h; ++h)
        if (std::abs(chain.horizons[h] - config.condition_tenor) < 1e-9)
            cond_idx = static_cast<int>(h);

    ChainSampler sampler(chain);
    const Eigen::VectorXd weights = state.portfolio.weights();

    const std::int64_t block_size = 65536;
    const std::int64_t n_blocks = (config.paths + block_size - 1) / block_size;
    std::vector<Accumulator> blocks(static_cast<std::size_t>(n_blocks),
                                    Accumulator(n_tr, n_hz, n_names));

    parallel_for(static_cast<std::size_t>(n_blocks), [&](std::size_t blk) {
        Accumulator& acc = blocks[blk];
        std::vector<int> path;
        std::vector<double> loss(n_h), rec(n_h);
        const std::int64_t lo = static_cast<std::int64_t>(blk) * block_size;
        const std::int64_t hi = std::min(lo + block_size, config.paths);
        for (std::int64_t p = lo; p < hi; ++p) {
            PhiloxStream path_rng(config.seed, static_cast<std::uint64_t>(p), 0,
                                  StreamPurpose::PathDraw);
            sampler.draw(path_rng, path);
            std::fill(loss.begin(), loss.end(), 0.0);
            std::fill(rec.begin(), rec.end(), 0.0);
            for (Eigen::Index i = 0; i < n_names; ++i) {
                PhiloxStream d_rng(config.seed, static_cast<std::uint64_t>(p),
                                   static_cast<std::uint32_t>(i), StreamPurpose::DefaultTime);
                const double d = d_rng.next_open();
                int period = -1;
                for (std::size_t h = 0; h < n_h; ++h) {
                    if (d < state.horizons[h].model.cond_p(i, path[h])) {
                        period = static_cast<int>(h);
                        break;
                    }
                }
                if (period < 0) continue;
                RecoveryMoments spot =
                    spot_moments(state.specs[static_cast<std::size_t>(i)], d);
                PhiloxStream r_rng(config.seed, static_cast<std::uint64_t>(p),
                                   static_cast<std::uint32_t>(i), StreamPurpose::Recovery);
                double r = config.recovery_dist == SimConfig::RecoveryDist::TwoPoint
                               ? two_point_draw(spot.mean, spot.variance, r_rng.next_double())
                               : beta_draw(spot.mean, spot.variance, r_rng);
                const double w = weights[i];
                for (std::size_t h = static_cast<std::size_t>(period); h < n_h; ++h) {
                    loss[h] += w * (1.0 - r);
                    rec[h] += w * r;
                    acc.el_sum(i, static_cast<Eigen::Index>(h)) += 1.0 - r;
                    acc.el_sq(i, static_cast<Eigen::Index>(h)) += (1.0 - r) * (1.0 - r);
                }
            }
            for (Eigen::Index k = 0; k < n_tr; ++k) {
                const TrancheDef& tr = tranches[static_cast<std::size_t>(k)];
                const double width = tr.width();
                for (std::size_t h = 0; h < n_h; ++h) {
                    double tl = (std::min(loss[h], tr.detach) - std::min(loss[h], tr.attach)) / width;
                    double ta = (std::min(rec[h], 1.0 - tr.attach) -
                                 std::min(rec[h], 1.0 - tr.detach)) /
                                width;
                    acc.tl_sum(k, static_cast<Eigen::Index>(h)) += tl;
                    acc.tl_sq(k, static_cast<Eigen::Index>(h)) += tl * tl;
                    acc.ta_sum(k, static_cast<Eigen::Index>(h)) += ta;
                    acc.ta_sq(k, static_cast<Eigen::Index>(h)) += ta * ta;
                }
            }
            if (cond_idx >= 0 && loss[static_cast<std::size_t>(cond_idx)] < config.condition_cap) {
                ++acc.cond_count;
                Eigen::VectorXd incr(n_hz);
                for (std::size_t h = 0; h < n_h; ++h)
                    incr[static_cast<Eigen::Index>(h)] = loss[h] - (h == 0 ? 0.0 : loss[h - 1]);
                acc.cond_sum += incr;
                acc.cond_cross += incr * incr.transpose();
            }
        }
    });

    Accumulator total(n_tr, n_hz, n_names);
    for (const auto& b : blocks) total.merge(b);

    SimResult res;
    res.horizons = chain.horizons;
    res.tranches = tranches;
    res.paths = config.paths;
    const double n = static_cast<double>(config.paths);
    auto finish = [&](const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq, Eigen::MatrixXd& mean,
                      Eigen::MatrixXd& se) {
        mean = sum / n;
        se = ((sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0) / n).cwiseSqrt();
    };
    finish(total.tl_sum, total.tl_sq, res.etl, res.etl_se);
    finish(total.ta_sum, total.ta_sq, res.eta, res.eta_se);
    finish(total.el_sum, total.el_sq, res.name_el, res.name_el_se);
    res.cond_count = total.cond_count;
    res.cond_sum = total.cond_sum;
    res.cond_cross = total.cond_cross;
    return res;
}

Eigen::MatrixXd temporal_loss_correlation(const SimResult& result) {
    CK_REQUIRE(result.cond_count > 0, "temporal_loss_correlation: empty conditioned subsample");
    const double n = static_cast<double>(result.cond_count);
    Eigen::VectorXd mean = result.cond_sum / n;
    Eigen::MatrixXd cov = result.cond_cross / n - mean * mean.transpose();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    for (Eigen::Index a = 0; a < cov.rows(); ++a)
        for (Eigen::Index b = 0; b < cov.cols(); ++b) {
            if (a == b) continue;
            double denom = std::sqrt(cov(a, a) * cov(b, b));
            CK_NUMERIC_REQUIRE(denom > 0.0, "temporal_loss_correlation: zero variance in period ",
                               a == b ? a : (cov(a, a) <= 0.0 ? a : b));
            corr(a, b) = cov(a, b) / denom;
        }
    return corr;
}

RecoveryCrosscheck beta_recovery_crosscheck(const SimConfig& config, const ModelState& state,
                                            const TransitionChain& chain,
                                            const std::vector<TrancheDef>& tranches) {
    RecoveryCrosscheck out;
    SimConfig cfg = config;
    cfg.recovery_dist = SimConfig::RecoveryDist::TwoPoint;
    out.two_point = simulate_portfolio(cfg, state, chain, tranches);
    cfg.recovery_dist = SimConfig::RecoveryDist::Beta;
    out.beta = simulate_portfolio(cfg, state, chain, tranches);
    out.etl_diff = (out.two_point.etl - out.beta.etl).cwiseAbs();
    return out;
}

} // namespace credkit
