#pragma once
#include <memory>
#include <string>
#include <vector>

#include "lamcoal/compressed.hpp"
#include "lamcoal/exact.hpp"
#include "lamcoal/genetree.hpp"
#include "lamcoal/rng.hpp"

namespace lamcoal {

enum class SchemeKind { GT, SD, HUW1, HUW2Alpha, HUW2Beta, HUW2A, HUW2B, HUW15, Optimal };

SchemeKind parse_scheme(const std::string& name);
std::string scheme_name(SchemeKind kind);
bool scheme_needs_tables(SchemeKind kind);
const std::vector<SchemeKind>& non_optimal_schemes();

// Root-type merger sizes under the alpha rule. RootMerge (default) takes the
// target M^{n-l}_{n-n_i}, shrinking the root group. Literal takes M^{n-l}_{n-l-n_i};
// it can give admissible root-type merges zero weight.
enum class AlphaRootRule { Literal, RootMerge };

struct ProposalContext {
  std::shared_ptr<const RateTable> rates;
  double r = 0;
  const CompressedTables* tables = nullptr;
  ExactSolver* solver = nullptr;
  AlphaRootRule alpha_root = AlphaRootRule::RootMerge;
};

struct StepDistribution {
  std::vector<ReverseEvent> events;
  std::vector<double> coeff;  // recursion coefficients
  std::vector<double> prob;   // proposal probabilities, sum 1
  bool fallback = false;      // zero total weight; GT used instead
};

StepDistribution step_distribution(SchemeKind kind, const Genetree& g, const ProposalContext& ctx);

// f_theta: sum of all recursion coefficients at g.
double gt_normalizer(const Genetree& g, const ProposalContext& ctx);

// Pair weight for the two distinct sites a, b and type i losing l lineages (l = 0: mutation removal).
double pair_weight(const Genetree& g, int a, int b, int i, int l, const CompressedTables& tables);

struct ProposedStep {
  int index;
  double log_q;
};
ProposedStep sample_step(const StepDistribution& dist, Philox& rng);

// Half L1 distance between the scheme and the optimal proposal at g.
double tv_distance(SchemeKind kind, const Genetree& g, const ProposalContext& ctx);
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace lamcoal
