#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lamcoal/compressed.hpp"
#include "lamcoal/exact.hpp"
#include "lamcoal/genetree.hpp"
#include "lamcoal/proposals.hpp"

namespace lamcoal {

struct Estimate {
  double log_mean = 0;      // natural log of the estimated probability
  double rel_std_err = 0;
  std::uint64_t runs = 0;
  SchemeKind scheme = SchemeKind::GT;
  std::uint64_t fallback_count = 0;
  std::uint64_t zero_weight_runs = 0;
  bool support_warning = false;  // some run had zero target probability
  double wall_time = 0;
  std::string target;            // model and rate label for multi-target runs
  // Conditional functional estimates (estimate_functional only).
  double ratio = std::nan("");
  double ratio_std_err = std::nan("");
};

struct StopRule {
  std::uint64_t fixed_runs = 0;      // > 0: run exactly this many
  double rel_err = 0.01;             // otherwise: grow batches x4 until below
  std::uint64_t initial_batch = 1000;
  std::uint64_t max_runs = 100'000'000;
  static StopRule fixed(std::uint64_t m) { return {m, 0, 0, m}; }
  static StopRule relative(double e, std::uint64_t first = 1000) { return {0, e, first, 100'000'000}; }
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  StopRule stop;
  bool keep_log_weights = false;
};

// Model parameters plus the precomputed data proposals may need.
class Problem {
 public:
  Problem(LambdaModel model, double r, int n_max, SchemeKind scheme,
          std::shared_ptr<const CompressedTables> tables = nullptr, int exact_limit = 40);
  const LambdaModel& model() const { return model_; }
  double r() const { return r_; }
  SchemeKind scheme() const { return scheme_; }
  ProposalContext& context() { return ctx_; }
  const RateTable& rates() const { return *ctx_.rates; }
  ExactSolver& solver() { return *solver_; }
  std::shared_ptr<ExactSolver> solver_ptr() { return solver_; }

 private:
  LambdaModel model_;
  double r_;
  SchemeKind scheme_;
  std::shared_ptr<const CompressedTables> tables_;
  std::shared_ptr<ExactSolver> solver_;
  ProposalContext ctx_;
};

struct Target {
  LambdaModel model;
  double r;
};

struct BoundarySet {
  std::function<bool(const Genetree&)> contains;
  std::shared_ptr<ExactSolver> solver;  // must use the problem's model and rate
  static BoundarySet complexity_at_most(int limit, std::shared_ptr<ExactSolver> solver);
  static BoundarySet root_only();
};

// Reverse path with holding times; labels track original site identities.
struct TimedPath {
  std::vector<Genetree> states;  // from the observed sample back to the root
  std::vector<ReverseEvent> events;
  std::vector<int> removed_site;  // original site removed by events[k], or -1
  std::vector<double> holding;   // time spent in states[k], k < states.size()-1
  double tmrca() const;
  double mutation_age(int site) const;  // NaN if the site is never removed
};

using Functional = std::function<double(const TimedPath&)>;
Functional tmrca_mean();
Functional tmrca_cdf(double x);
Functional mutation_age(int site);

Estimate estimate(const Genetree& g, Problem& problem, const RunConfig& cfg,
                  std::vector<double>* log_weights = nullptr);
std::vector<Estimate> estimate_multi(const Genetree& g, Problem& driving, const std::vector<Target>& targets,
                                     const RunConfig& cfg);
Estimate estimate_with_boundary(const Genetree& g, Problem& problem, const BoundarySet& boundary,
                                const RunConfig& cfg, std::vector<double>* log_weights = nullptr);
Estimate estimate_functional(const Genetree& g, Problem& problem, const Functional& f, const RunConfig& cfg);

// Log-space summary of a weight sample.
struct WeightSummary {
  double log_mean;
  double rel_std_err;
};
WeightSummary summarize_log_weights(const std::vector<double>& logw);

struct TvCell {
  double r;
  double alpha;
  SchemeKind scheme;
  double mean_tv;          // uniform over unordered classes
  double mean_tv_ordered;  // uniform over ordered configurations (class weight d!/c)
  std::uint64_t classes;
};

struct TvOptions {
  AlphaRootRule alpha_root = AlphaRootRule::RootMerge;
  std::function<void(const std::string&)> progress;
};

// Mean TV distance to the optimal proposal over all classes of complexity K.
std::vector<TvCell> tv_study(int K, const std::vector<double>& rates, const std::vector<double>& alphas,
                             const std::vector<SchemeKind>& schemes, const TvOptions& opts = {});

}  // namespace lamcoal
