#include <atomic>
#include <cstdlib>
#include <cstring>

#include "lamcoal/kernels.hpp"

namespace lamcoal::kernels {
namespace {

Isa detect() {
  const char* env = std::getenv("LAMCOAL_ISA");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return avx2_supported() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_supported()) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
}

LogMoments log_moments(std::span<const double> x) {
  return active_isa() == Isa::Avx2 ? avx2::log_moments(x) : scalar::log_moments(x);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  return active_isa() == Isa::Avx2 ? avx2::l1_distance(a, b) : scalar::l1_distance(a, b);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return active_isa() == Isa::Avx2 ? avx2::dot(a, b) : scalar::dot(a, b);
}

double weighted_exp_sum(std::span<const double> x, std::span<const double> f, double shift) {
  return active_isa() == Isa::Avx2 ? avx2::weighted_exp_sum(x, f, shift)
                                   : scalar::weighted_exp_sum(x, f, shift);
}

}  // namespace lamcoal::kernels
