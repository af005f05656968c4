// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "lamcoal/kernels.hpp"

namespace lamcoal::kernels::avx2 {
namespace {

// exp for x <= 0; values below -708 flush to zero.
inline __m256d exp_nonpos(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d dead = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lo);
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);
  static constexpr double c[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
                                 1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
                                 1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
                                 1.0 / 24.0,         1.0 / 6.0,         0.5,
                                 1.0,                1.0};
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));
  const __m128i ki = _mm256_cvtpd_epi32(k);
  __m256i e = _mm256_cvtepi32_epi64(ki);
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  p = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  return _mm256_andnot_pd(dead, p);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline double exp_tail(double v) { return v < -708.0 ? 0.0 : std::exp(v); }

}  // namespace

LogMoments log_moments(std::span<const double> x) {
  LogMoments out;
  const std::size_t n = x.size();
  if (n == 0) return out;
  const double* p = x.data();
  __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(p + i));
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, vmax);
  out.max = std::max(std::max(tmp[0], tmp[1]), std::max(tmp[2], tmp[3]));
  for (; i < n; ++i) out.max = std::max(out.max, p[i]);
  if (!std::isfinite(out.max)) return out;

  const __m256d m = _mm256_set1_pd(out.max);
  __m256d acc = _mm256_setzero_pd();
  for (i = 0; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, exp_nonpos(_mm256_sub_pd(_mm256_loadu_pd(p + i), m)));
  out.sum_exp = hsum(acc);
  for (; i < n; ++i) out.sum_exp += exp_tail(p[i] - out.max);

  const double mean = out.sum_exp / static_cast<double>(n);
  const __m256d vm = _mm256_set1_pd(mean);
  acc = _mm256_setzero_pd();
  for (i = 0; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(exp_nonpos(_mm256_sub_pd(_mm256_loadu_pd(p + i), m)), vm);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  out.sum_sq_dev = hsum(acc);
  for (; i < n; ++i) {
    const double d = exp_tail(p[i] - out.max) - mean;
    out.sum_sq_dev += d * d;
  }
  return out;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                                                                  _mm256_loadu_pd(b.data() + i))));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift) {
  const std::size_t n = x.size();
  const __m256d m = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(exp_nonpos(_mm256_sub_pd(_mm256_loadu_pd(x.data() + i), m)),
                          _mm256_loadu_pd(f.data() + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += exp_tail(x[i] - shift) * f[i];
  return s;
}

}  // namespace lamcoal::kernels::avx2
