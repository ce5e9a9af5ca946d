#pragma once

#include <span>
#include <vector>

namespace arraykit {

/// Degree-1 locally weighted regression (lowess): each local fit uses the
/// floor(span*n) nearest points in x with tricube weights, and
/// `iterations` Tukey-biweight robustness passes reweight the fit points.
/// Returns the fitted curve evaluated at every `xEval`. All inputs finite.
///
/// With delta > 0, local fits are computed only at anchor points at least
/// delta * (range of x) apart and the curve is interpolated linearly between
/// them, both for the robustness residuals and for `xEval` inside the range
/// of x (Cleveland's lowess shortcut). delta = 0 fits at every point.
std::vector<double> loess_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> xEval, double span, int iterations, double delta = 0);

/// Anchor spacing used by the normalization steps, as a fraction of the
/// range of A.
inline constexpr double kLowessDelta = 0.01;

}  // namespace arraykit
