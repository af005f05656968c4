#include <algorithm>
#include <cmath>
#include <limits>

#include "lamcoal/kernels.hpp"

namespace lamcoal::kernels::scalar {

LogMoments log_moments(std::span<const double> x) {
  LogMoments out;
  if (x.empty()) return out;
  out.max = -std::numeric_limits<double>::infinity();
  for (double v : x) out.max = std::max(out.max, v);
  if (!std::isfinite(out.max)) return out;
  for (double v : x) out.sum_exp += std::exp(v - out.max);
  const double mean = out.sum_exp / static_cast<double>(x.size());
  for (double v : x) {
    const double d = std::exp(v - out.max) - mean;
    out.sum_sq_dev += d * d;
  }
  return out;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::exp(x[i] - shift) * f[i];
  return s;
}

}  // namespace lamcoal::kernels::scalar
