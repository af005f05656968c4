#pragma once
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "lamcoal/coalescent.hpp"
#include "lamcoal/genetree.hpp"

namespace lamcoal {

struct RecursionTerm {
  ReverseEvent event;
  double coeff;
};

// Right-hand side of the ordered recursion at state g: every reverse event with its coefficient.
std::vector<RecursionTerm> recursion_terms(const Genetree& g, const RateTable& rates, double r);
double recursion_coefficient(const Genetree& g, const ReverseEvent& e, const RateTable& rates, double r);

struct OptimalStep {
  ReverseEvent event;
  double probability;
};

class ExactSolver {
 public:
  // Unordered keys collapse type permutations (p(t,n) is permutation invariant);
  // Ordered keys are kept for cross-checking.
  enum class MemoKey { Unordered, Ordered };

  ExactSolver(LambdaModel model, double r, int complexity_limit = 40, MemoKey key = MemoKey::Unordered);

  const LambdaModel& model() const { return model_; }
  double r() const { return r_; }
  int complexity_limit() const { return limit_; }
  std::shared_ptr<const RateTable> rates(int n);

  double p_ordered(const Genetree& g);
  double p_unordered(const Genetree& g);
  double p_zero(const Genetree& g);
  std::vector<OptimalStep> optimal_reverse_distribution(const Genetree& g);
  std::size_t memo_size() const;

 private:
  double solve(const Genetree& g, const RateTable& rates);

  LambdaModel model_;
  double r_;
  int limit_;
  MemoKey key_;
  mutable std::mutex mu_;
  std::shared_ptr<const RateTable> rates_;
  std::unordered_map<std::string, double> memo_;
};

// Allelic partition c = (c_1, c_2, ...), c_i = number of alleles with i copies.
using AllelicPartition = std::vector<int>;

class ImaSolver {
 public:
  ImaSolver(LambdaModel model, double r, int n_limit = 40);
  double probability(const AllelicPartition& c);
  // (c', Q*(c'|c)) over all predecessors
  std::vector<std::pair<AllelicPartition, double>> optimal_transition(const AllelicPartition& c);

 private:
  struct Term {
    AllelicPartition next;
    double coeff;
  };
  std::vector<Term> terms(const AllelicPartition& c);
  double solve(const AllelicPartition& c);

  LambdaModel model_;
  double r_;
  int limit_;
  RateTable rates_;
  std::map<AllelicPartition, double> memo_;
};

// Allelic partition of the types of g (infinitely-many-alleles projection).
AllelicPartition allelic_partition(const Genetree& g);

}  // namespace lamcoal
