#pragma once
#include <memory>
#include <string>
#include <vector>

#include "lamcoal/coalescent.hpp"
#include "lamcoal/exact.hpp"
#include "lamcoal/genetree.hpp"

namespace lamcoal {

// Exact probabilities and optimal reverse transitions for all states with at
// most two segregating sites and size <= n_max.
//   M0(n)        : one type of size n
//   M1(n,d)      : root group n-d, one mutation carried by d
//   M2(n,d1,d2)  : two disjoint mutations carried by d1 and d2
//   N(n,d1,d2)   : nested mutations, outer carried by d1, inner by d2 <= d1
class CompressedTables {
 public:
  CompressedTables(const LambdaModel& model, double r, int n_max);

  int n_max() const { return n_max_; }
  double r() const { return r_; }
  const LambdaModel& model() const { return rates_->model(); }
  const RateTable& rates() const { return *rates_; }
  std::shared_ptr<const RateTable> rates_ptr() const { return rates_; }

  double pM0(int n) const { return m0_[n]; }
  double pM1(int n, int d) const { return d == 0 ? m0_[n] : m1_[n * w_ + d]; }
  double pM2(int n, int d1, int d2) const;
  double pN(int n, int d1, int d2) const;
  double probability(const CompressedConfig& c) const;
  // Probability of any genetree with s <= 2 via its shape.
  double probability(const Genetree& g) const;

  // Merge coefficient of a group of size g in a sample of size n losing l lineages.
  double merge_coeff(int n, int g, int l) const;

  // Q* of individual transitions. Out-of-range arguments give 0.
  double q_m0_merge(int n, int l) const;
  double q_m1_root(int n, int d, int l) const;
  double q_m1_mut(int n, int d, int l) const;
  double q_m1_remove(int n) const;  // M^n_1 -> M^n_0
  double q_m2_first(int n, int d1, int d2, int l) const;
  double q_m2_root(int n, int d1, int d2, int l) const;
  double q_m2_remove_first(int n, int d2) const;  // M^n_{1,d2} -> M^n_{d2}
  double q_n_inner(int n, int d1, int d2, int l) const;
  double q_n_middle(int n, int d1, int d2, int l) const;
  double q_n_root(int n, int d1, int d2, int l) const;
  double q_n_remove(int n, int d1) const;  // N^n_{d1,1} -> M^n_{d1}

  // Total Q* mass of events hitting one group (all merge sizes plus removal when applicable).
  double mass_m1_mut(int n, int d) const { return d == 0 ? 0.0 : m1_mut_[n * w_ + d]; }
  double mass_m1_root(int n, int d) const { return d == 0 ? 1.0 : m1_root_[n * w_ + d]; }
  double mass_m2_first(int n, int d1, int d2) const;
  double mass_m2_root(int n, int d1, int d2) const;
  double mass_n_inner(int n, int d1, int d2) const;
  double mass_n_middle(int n, int d1, int d2) const;
  double mass_n_root(int n, int d1, int d2) const;

  // Optimal reverse distribution for a state with s <= 2 from the tables.
  std::vector<OptimalStep> optimal_small(const Genetree& g) const;

  void save(const std::string& path) const;
  // Returns nullptr if the file is missing, corrupt, or built for other parameters.
  static std::unique_ptr<CompressedTables> load(const std::string& path, const LambdaModel& model, double r,
                                                int n_max);
  static std::size_t required_bytes(int n_max);

 private:
  CompressedTables() = default;
  std::size_t idx(int n, int a, int b) const { return (static_cast<std::size_t>(n) * w_ + a) * w_ + b; }
  double rn(int n) const { return rates_->total(n) + n * r_; }
  void build();
  void build_masses();

  std::shared_ptr<const RateTable> rates_;
  double r_ = 0;
  int n_max_ = 0;
  int w_ = 0;
  std::vector<double> m0_, m1_, m2_, nn_;
  std::vector<double> m1_mut_, m1_root_, m2_first_, m2_root_, n_inner_, n_middle_, n_root_;
};

}  // namespace lamcoal
