// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace credkit {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF, accurate in both tails (erfc based).
double norm_cdf(double x);

/// Inverse standard normal CDF. Accurate to full double precision
/// (rational approximation polished with one Halley step).
double norm_quantile(double p);

/// Continuous piecewise-linear function on ascending knots.
/// Evaluation outside the knot range extrapolates flat.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    std::size_t segments() const { return xs_.empty() ? 0 : xs_.size() - 1; }
    const std::vector<double>& knots() const { return xs_; }
    const std::vector<double>& values() const { return ys_; }
    double min_value() const;
    double max_value() const;

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

} // namespace credkit
