#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace vaxalloc::normal {

template <typename Scalar>
Scalar pdf(Scalar z) {
  return std::exp(Scalar(-0.5) * z * z) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Scalar cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley refinement against erfc, which brings it to double precision.
template <typename Scalar>
Scalar quantile(Scalar p) {
  if (p <= Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
  if (p >= Scalar(1)) return std::numeric_limits<Scalar>::infinity();

  constexpr Scalar a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr Scalar b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01, -1.328068155288572e+01};
  constexpr Scalar c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr Scalar d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  constexpr Scalar p_low = 0.02425;

  Scalar x;
  if (p < p_low) {
    const Scalar q = std::sqrt(Scalar(-2) * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - p_low) {
    const Scalar q = std::sqrt(Scalar(-2) * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const Scalar q = p - Scalar(0.5);
    const Scalar r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  const Scalar e = cdf(x) - p;
  const Scalar u = e * std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

/// E[(X - threshold)^+] for X ~ Normal(mean, sd^2). A zero sd degenerates to
/// (mean - threshold)^+.
template <typename Scalar>
Scalar expected_positive_part(Scalar mean, Scalar sd, Scalar threshold = Scalar(0)) {
  const Scalar gap = mean - threshold;
  if (!(sd > Scalar(0))) {
    return gap > Scalar(0) ? gap : Scalar(0);
  }
  const Scalar z = gap / sd;
  const Scalar value = gap * cdf(z) + sd * pdf(z);
  return value > Scalar(0) ? value : Scalar(0);
}

}  // namespace vaxalloc::normal
