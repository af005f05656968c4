#pragma once
#include <cstddef>
#include <span>
#include <string_view>

namespace lamcoal::kernels {

// Shifted moments of exp(x): with m = max x,
// sum_exp = sum exp(x - m), sum_sq_dev = sum (exp(x - m) - sum_exp / N)^2.
struct LogMoments {
  double max = 0;
  double sum_exp = 0;
  double sum_sq_dev = 0;
};

enum class Isa { Scalar, Avx2 };

Isa active_isa();
std::string_view isa_name(Isa isa);
// Forces a variant (tests); Avx2 silently degrades to Scalar if unsupported.
void force_isa(Isa isa);
bool avx2_supported();

LogMoments log_moments(std::span<const double> x);
double l1_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
// sum_i exp(x_i - shift) * f_i
double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift);

namespace scalar {
LogMoments log_moments(std::span<const double> x);
double l1_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift);
}  // namespace scalar

namespace avx2 {
LogMoments log_moments(std::span<const double> x);
double l1_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift);
}  // namespace avx2

}  // namespace lamcoal::kernels
