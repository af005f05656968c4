#include "lamcoal/exact.hpp"

#include <cmath>

#include "lamcoal/errors.hpp"

namespace lamcoal {

double recursion_coefficient(const Genetree& g, const ReverseEvent& e, const RateTable& rates, double r) {
  const int n = g.n();
  const double rn = rates.total(n) + n * r;
  switch (e.kind) {
    case ReverseEvent::Kind::Merge: {
      const int k = e.l + 1;
      return rates.binom(n, k) * rates.lambda(n, k) * (g.mult(e.type) - k + 1) / (n - k + 1) / rn;
    }
    case ReverseEvent::Kind::RemoveKeep:
      return r / rn;
    case ReverseEvent::Kind::RemoveAbsorb:
      return r / rn * (g.mult(e.target) + 1) / g.d();
  }
  return 0;
}

std::vector<RecursionTerm> recursion_terms(const Genetree& g, const RateTable& rates, double r) {
  std::vector<RecursionTerm> out;
  if (g.n() > rates.n_max()) throw ArgumentError("rate table too small for sample");
  for (const auto& e : enumerate_reverse_events(g)) out.push_back({e, recursion_coefficient(g, e, rates, r)});
  return out;
}

ExactSolver::ExactSolver(LambdaModel model, double r, int complexity_limit, MemoKey key)
    : model_(std::move(model)), r_(r), limit_(complexity_limit), key_(key) {
  if (!(r >= 0) || !std::isfinite(r)) throw ArgumentError("mutation rate must be finite and nonnegative");
  rates_ = std::make_shared<const RateTable>(model_, 16);
}

std::shared_ptr<const RateTable> ExactSolver::rates(int n) {
  std::lock_guard lock(mu_);
  if (rates_->n_max() < n) rates_ = std::make_shared<const RateTable>(model_, std::max(n, 2 * rates_->n_max()));
  return rates_;
}

std::size_t ExactSolver::memo_size() const {
  std::lock_guard lock(mu_);
  return memo_.size();
}

double ExactSolver::solve(const Genetree& g, const RateTable& rates) {
  if (g.is_root()) return 1.0;
  std::string key = canonical_key(g, key_ == MemoKey::Ordered);
  {
    std::lock_guard lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  double p = 0;
  for (const auto& t : recursion_terms(g, rates, r_))
    if (t.coeff > 0) p += t.coeff * solve(apply_event(g, t.event), rates);
  std::lock_guard lock(mu_);
  memo_.emplace(std::move(key), p);
  return p;
}

double ExactSolver::p_ordered(const Genetree& g) {
  if (g.complexity() > limit_)
    throw ResourceError("complexity " + std::to_string(g.complexity()) + " exceeds exact limit " +
                        std::to_string(limit_) + "; use importance sampling");
  auto table = rates(g.n());
  return solve(g, *table);
}

double ExactSolver::p_unordered(const Genetree& g) {
  return p_ordered(g) * std::tgamma(g.d() + 1.0) / symmetry_count(g);
}

double ExactSolver::p_zero(const Genetree& g) { return p_ordered(g) * std::tgamma(g.d() + 1.0); }

std::vector<OptimalStep> ExactSolver::optimal_reverse_distribution(const Genetree& g) {
  const double p = p_ordered(g);
  if (!(p > 0)) throw NumericError("state has zero probability");
  auto table = rates(g.n());
  std::vector<OptimalStep> out;
  for (const auto& t : recursion_terms(g, *table, r_))
    out.push_back({t.event, t.coeff > 0 ? t.coeff * solve(apply_event(g, t.event), *table) / p : 0.0});
  return out;
}

// ---------------------------------------------------------------- IMA

AllelicPartition allelic_partition(const Genetree& g) {
  AllelicPartition c(g.n(), 0);
  for (int m : g.mults()) ++c[m - 1];
  return c;
}

ImaSolver::ImaSolver(LambdaModel model, double r, int n_limit)
    : model_(std::move(model)), r_(r), limit_(n_limit), rates_(model_, std::max(n_limit, 2)) {}

std::vector<ImaSolver::Term> ImaSolver::terms(const AllelicPartition& c) {
  int n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) n += static_cast<int>(i + 1) * c[i];
  std::vector<Term> out;
  if (n > limit_) throw ResourceError("allelic partition size exceeds limit");
  const double rn = rates_.total(n) + n * r_;
  auto trimmed = [](AllelicPartition v) {
    while (!v.empty() && v.back() == 0) v.pop_back();
    return v;
  };
  if (!c.empty() && c[0] > 0) {
    AllelicPartition next = c;
    --next[0];
    out.push_back({trimmed(next), n * r_ / rn});
  }
  for (int i = 1; i <= n - 1; ++i) {
    const double merge = rates_.binom(n, i + 1) * rates_.lambda(n, i + 1) / rn;
    if (merge == 0) continue;
    for (int j = 1; i + j <= n; ++j) {
      if (static_cast<int>(c.size()) < i + j || c[i + j - 1] == 0) continue;
      AllelicPartition next = c;
      ++next[j - 1];
      --next[i + j - 1];
      const double cj1 = (j <= static_cast<int>(c.size()) ? c[j - 1] : 0) + 1;
      out.push_back({trimmed(next), merge * j * cj1 / (n - i)});
    }
  }
  return out;
}

double ImaSolver::solve(const AllelicPartition& c) {
  if (c.size() == 1 && c[0] == 1) return 1.0;
  auto it = memo_.find(c);
  if (it != memo_.end()) return it->second;
  double q = 0;
  for (const auto& t : terms(c)) q += t.coeff * solve(t.next);
  memo_.emplace(c, q);
  return q;
}

double ImaSolver::probability(const AllelicPartition& raw) {
  AllelicPartition c = raw;
  while (!c.empty() && c.back() == 0) c.pop_back();
  for (int v : c)
    if (v < 0) return 0.0;
  if (c.empty()) throw ArgumentError("empty allelic partition");
  return solve(c);
}

std::vector<std::pair<AllelicPartition, double>> ImaSolver::optimal_transition(const AllelicPartition& raw) {
  AllelicPartition c = raw;
  while (!c.empty() && c.back() == 0) c.pop_back();
  const double q = probability(c);
  std::vector<std::pair<AllelicPartition, double>> out;
  for (const auto& t : terms(c)) out.emplace_back(t.next, t.coeff * solve(t.next) / q);
  return out;
}

}  // namespace lamcoal
