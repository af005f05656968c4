#include "lamcoal/estimator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "lamcoal/errors.hpp"
#include "lamcoal/kernels.hpp"
#include "lamcoal/rng.hpp"

namespace lamcoal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kCacheLimit = 200'000;

// Exact layout key: cached step distributions refer to type indices.
std::string layout_key(const Genetree& g) {
  std::string k;
  k.reserve(4 * (g.s() + 2 * g.d() + 2));
  auto put = [&](int v) {
    k.push_back(static_cast<char>(v & 0xff));
    k.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  put(g.s());
  for (int v = 1; v <= g.s(); ++v) put(g.parent(v));
  put(g.d());
  for (int i = 0; i < g.d(); ++i) {
    put(g.type_node(i));
    put(g.mult(i));
  }
  return k;
}

class StepCache {
 public:
  StepCache(SchemeKind kind, const ProposalContext& ctx) : kind_(kind), ctx_(ctx) {}
  const StepDistribution& get(const Genetree& g) {
    auto key = layout_key(g);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    if (map_.size() >= kCacheLimit) map_.clear();
    return map_.emplace(std::move(key), step_distribution(kind_, g, ctx_)).first->second;
  }

 private:
  SchemeKind kind_;
  const ProposalContext& ctx_;
  std::unordered_map<std::string, StepDistribution> map_;
};

struct RunResult {
  double logw = kNegInf;
  bool fallback = false;
  double f = 0;  // functional value (estimate_functional)
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs [begin, end) in parallel; each worker owns a fresh per-run worker state.
template <class MakeWorker>
void parallel_runs(std::uint64_t begin, std::uint64_t end, unsigned workers, MakeWorker make_worker) {
  if (workers == 0) workers = 1;
  std::atomic<std::uint64_t> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    try {
      auto work = make_worker();
      constexpr std::uint64_t chunk = 64;
      for (;;) {
        const std::uint64_t b = next.fetch_add(chunk);
        if (b >= end) break;
        const std::uint64_t e = std::min(end, b + chunk);
        for (std::uint64_t i = b; i < e; ++i) work(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = end;
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// Drives the stop rule; `run_batch(begin, end)` fills results[begin, end).
template <class RunBatch>
void run_until_done(const StopRule& stop, std::vector<RunResult>& results, RunBatch run_batch) {
  if (stop.fixed_runs > 0) {
    results.resize(stop.fixed_runs);
    run_batch(0, stop.fixed_runs);
    return;
  }
  if (!(stop.rel_err > 0)) throw ArgumentError("relative error target must be positive");
  std::uint64_t total = std::max<std::uint64_t>(stop.initial_batch, 2);
  std::uint64_t done = 0;
  std::vector<double> logw;
  for (;;) {
    results.resize(total);
    run_batch(done, total);
    done = total;
    logw.resize(done);
    for (std::uint64_t i = 0; i < done; ++i) logw[i] = results[i].logw;
    const auto s = summarize_log_weights(logw);
    if (std::isfinite(s.rel_std_err) && s.rel_std_err <= stop.rel_err) return;
    if (done >= stop.max_runs) return;
    total = std::min(stop.max_runs, done * 4);
  }
}

Estimate finish(const std::vector<RunResult>& results, SchemeKind scheme, double seconds) {
  std::vector<double> logw(results.size());
  Estimate est;
  for (std::size_t i = 0; i < results.size(); ++i) {
    logw[i] = results[i].logw;
    if (results[i].fallback) ++est.fallback_count;
    if (!(logw[i] > kNegInf)) ++est.zero_weight_runs;
  }
  const auto s = summarize_log_weights(logw);
  est.log_mean = s.log_mean;
  est.rel_std_err = s.rel_std_err;
  est.runs = results.size();
  est.scheme = scheme;
  est.support_warning = est.zero_weight_runs > 0;
  est.wall_time = seconds;
  return est;
}

void check_input(const Genetree& g) {
  validate(g);
  if (g.complexity() > 0 && g.n() < 1) throw ArgumentError("sample size must be positive");
}

}  // namespace

WeightSummary summarize_log_weights(const std::vector<double>& logw) {
  if (logw.empty()) return {kNegInf, std::nan("")};
  const auto m = kernels::log_moments(logw);
  const double n = static_cast<double>(logw.size());
  if (!std::isfinite(m.max)) return {kNegInf, std::nan("")};
  const double mean = m.sum_exp / n;
  const double var = logw.size() > 1 ? m.sum_sq_dev / (n - 1) : 0.0;
  return {m.max + std::log(mean), std::sqrt(var / n) / mean};
}

Problem::Problem(LambdaModel model, double r, int n_max, SchemeKind scheme,
                 std::shared_ptr<const CompressedTables> tables, int exact_limit)
    : model_(std::move(model)), r_(r), scheme_(scheme), tables_(std::move(tables)) {
  if (!(r > 0) || !std::isfinite(r)) throw ArgumentError("mutation rate must be positive and finite");
  if (n_max < 1) throw ArgumentError("sample size bound must be positive");
  if (scheme_needs_tables(scheme) && !tables_)
    tables_ = std::make_shared<CompressedTables>(model_, r, n_max);
  if (tables_ && (tables_->n_max() < n_max || tables_->r() != r))
    throw ConfigurationError("precomputed tables do not match the problem");
  solver_ = std::make_shared<ExactSolver>(model_, r, exact_limit);
  ctx_.rates = tables_ ? tables_->rates_ptr() : std::make_shared<const RateTable>(model_, n_max);
  ctx_.r = r;
  ctx_.tables = tables_.get();
  ctx_.solver = solver_.get();
}

BoundarySet BoundarySet::complexity_at_most(int limit, std::shared_ptr<ExactSolver> solver) {
  return {[limit](const Genetree& g) { return g.complexity() <= limit; }, std::move(solver)};
}

BoundarySet BoundarySet::root_only() {
  return {[](const Genetree& g) { return g.is_root(); }, nullptr};
}

double TimedPath::tmrca() const {
  double t = 0;
  for (std::size_t k = 0; k < holding.size(); ++k)
    if (states[k].n() > 1) t += holding[k];
  return t;
}

double TimedPath::mutation_age(int site) const {
  double t = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    t += holding[k];
    if (removed_site[k] == site) return t;
  }
  return std::nan("");
}

Functional tmrca_mean() {
  return [](const TimedPath& p) { return p.tmrca(); };
}

Functional tmrca_cdf(double x) {
  return [x](const TimedPath& p) { return p.tmrca() <= x ? 1.0 : 0.0; };
}

Functional mutation_age(int site) {
  return [site](const TimedPath& p) { return p.mutation_age(site); };
}

Estimate estimate_with_boundary(const Genetree& g, Problem& problem, const BoundarySet& boundary,
                                const RunConfig& cfg, std::vector<double>* log_weights) {
  check_input(g);
  if (g.n() > problem.rates().n_max()) throw ArgumentError("sample exceeds the problem's sample size bound");
  const auto t0 = std::chrono::steady_clock::now();
  auto& ctx = problem.context();
  const SchemeKind kind = problem.scheme();
  std::vector<RunResult> results;
  run_until_done(cfg.stop, results, [&](std::uint64_t b, std::uint64_t e) {
    parallel_runs(b, e, cfg.workers, [&] {
      return [&, cache = std::make_shared<StepCache>(kind, ctx)](std::uint64_t run) {
        Philox rng(cfg.seed, run);
        Genetree cur = g;
        double logw = 0;
        bool fallback = false;
        while (!boundary.contains(cur)) {
          const auto& dist = cache->get(cur);
          fallback |= dist.fallback;
          const auto step = sample_step(dist, rng);
          logw += std::log(dist.coeff[step.index]) - step.log_q;
          cur = apply_event(cur, dist.events[step.index]);
        }
        if (boundary.solver && !cur.is_root()) logw += std::log(boundary.solver->p_ordered(cur));
        results[run] = {logw, fallback, 0};
      };
    });
  });
  auto est = finish(results, kind, elapsed(t0));
  if (log_weights) {
    log_weights->resize(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) (*log_weights)[i] = results[i].logw;
  }
  return est;
}

Estimate estimate(const Genetree& g, Problem& problem, const RunConfig& cfg, std::vector<double>* log_weights) {
  return estimate_with_boundary(g, problem, BoundarySet::root_only(), cfg, log_weights);
}

std::vector<Estimate> estimate_multi(const Genetree& g, Problem& driving, const std::vector<Target>& targets,
                                     const RunConfig& cfg) {
  check_input(g);
  if (targets.empty()) throw ArgumentError("no target parameters given");
  if (cfg.stop.fixed_runs == 0) throw ArgumentError("multi-target estimation needs a fixed run count");
  const auto t0 = std::chrono::steady_clock::now();
  const int n_max = std::max(g.n(), 2);
  std::vector<RateTable> trates;
  for (const auto& t : targets) {
    if (!(t.r > 0) || !std::isfinite(t.r)) throw ArgumentError("target mutation rate must be positive");
    trates.emplace_back(t.model, n_max);
  }
  auto& ctx = driving.context();
  const SchemeKind kind = driving.scheme();
  const std::size_t T = targets.size();
  const std::uint64_t M = cfg.stop.fixed_runs;
  std::vector<double> logw(M * T, kNegInf);
  std::vector<char> fb(M, 0);
  parallel_runs(0, M, cfg.workers, [&] {
    return [&, cache = std::make_shared<StepCache>(kind, ctx)](std::uint64_t run) {
      Philox rng(cfg.seed, run);
      Genetree cur = g;
      double logq = 0;
      std::vector<double> logc(T, 0.0);
      while (!cur.is_root()) {
        const auto& dist = cache->get(cur);
        fb[run] |= dist.fallback;
        const auto step = sample_step(dist, rng);
        logq += step.log_q;
        const auto& ev = dist.events[step.index];
        for (std::size_t t = 0; t < T; ++t)
          logc[t] += std::log(recursion_coefficient(cur, ev, trates[t], targets[t].r));
        cur = apply_event(cur, ev);
      }
      for (std::size_t t = 0; t < T; ++t) logw[run * T + t] = logc[t] - logq;
    };
  });
  const double secs = elapsed(t0);
  std::vector<Estimate> out;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<RunResult> res(M);
    for (std::uint64_t i = 0; i < M; ++i) res[i] = {logw[i * T + t], fb[i] != 0, 0};
    auto est = finish(res, kind, secs);
    est.target = targets[t].model.to_string() + " r=" + std::to_string(targets[t].r);
    out.push_back(est);
  }
  return out;
}

Estimate estimate_functional(const Genetree& g, Problem& problem, const Functional& f, const RunConfig& cfg) {
  check_input(g);
  const auto t0 = std::chrono::steady_clock::now();
  auto& ctx = problem.context();
  const auto& rates = *ctx.rates;
  const double r = problem.r();
  const SchemeKind kind = problem.scheme();
  std::vector<RunResult> results;
  run_until_done(cfg.stop, results, [&](std::uint64_t b, std::uint64_t e) {
    parallel_runs(b, e, cfg.workers, [&] {
      return [&, cache = std::make_shared<StepCache>(kind, ctx)](std::uint64_t run) {
        Philox rng(cfg.seed, run);
        TimedPath path;
        path.states.push_back(g);
        std::vector<int> labels(g.s() + 1);
        for (int v = 0; v <= g.s(); ++v) labels[v] = v;
        double logw = 0;
        bool fallback = false;
        while (!path.states.back().is_root()) {
          const Genetree& cur = path.states.back();
          const auto& dist = cache->get(cur);
          fallback |= dist.fallback;
          const auto step = sample_step(dist, rng);
          const auto& ev = dist.events[step.index];
          logw += std::log(dist.coeff[step.index]) - step.log_q;
          path.removed_site.push_back(ev.kind == ReverseEvent::Kind::Merge ? -1 : labels[cur.type_node(ev.type)]);
          path.events.push_back(ev);
          path.states.push_back(apply_event(cur, ev, labels));
        }
        for (std::size_t k = 0; k + 1 < path.states.size(); ++k) {
          const int m = path.states[k].n();
          path.holding.push_back(rng.exponential(r * m + (m >= 2 ? rates.total(m) : 0.0)));
        }
        results[run] = {logw, fallback, f(path)};
      };
    });
  });
  auto est = finish(results, kind, elapsed(t0));
  // Self-normalized ratio sum(w f) / sum(w) with a delta-method standard error.
  std::vector<double> logw(results.size()), fv(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    logw[i] = results[i].logw;
    fv[i] = results[i].f;
    if (std::isnan(fv[i])) throw NumericError("functional returned NaN on a sampled path");
  }
  const auto m = kernels::log_moments(logw);
  if (std::isfinite(m.max)) {
    const double sw = m.sum_exp;
    const double swf = kernels::weighted_exp_sum(logw, fv, m.max);
    const double ratio = swf / sw;
    std::vector<double> dev(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i) dev[i] = (fv[i] - ratio) * (fv[i] - ratio);
    std::vector<double> logw2(logw.size());
    for (std::size_t i = 0; i < logw.size(); ++i) logw2[i] = 2 * logw[i];
    const double num = kernels::weighted_exp_sum(logw2, dev, 2 * m.max);
    est.ratio = ratio;
    est.ratio_std_err = std::sqrt(num) / sw;
  }
  return est;
}

std::vector<TvCell> tv_study(int K, const std::vector<double>& rates, const std::vector<double>& alphas,
                             const std::vector<SchemeKind>& schemes, const TvOptions& opts) {
  if (K < 1) throw ArgumentError("complexity must be >= 1");
  const auto classes = enumerate_all_genetrees(K);
  std::vector<TvCell> out;
  for (double r : rates) {
    for (double a : alphas) {
      const auto model = LambdaModel::beta(a);
      auto tables = std::make_shared<CompressedTables>(model, r, K + 1);
      ExactSolver solver(model, r, K + 1);
      ProposalContext ctx{tables->rates_ptr(), r, tables.get(), &solver, opts.alpha_root};
      std::vector<double> sum(schemes.size(), 0.0), wsum(schemes.size(), 0.0);
      double wtotal = 0;
      for (const auto& g : classes) {
        const double w = std::exp(std::lgamma(g.d() + 1.0) - log_symmetry_count(g));
        wtotal += w;
        const auto opt = step_distribution(SchemeKind::Optimal, g, ctx);
        for (std::size_t k = 0; k < schemes.size(); ++k) {
          const auto q = step_distribution(schemes[k], g, ctx);
          const double tv = tv_distance(q.prob, opt.prob);
          sum[k] += tv;
          wsum[k] += w * tv;
        }
      }
      for (std::size_t k = 0; k < schemes.size(); ++k)
        out.push_back({r, a, schemes[k], sum[k] / static_cast<double>(classes.size()), wsum[k] / wtotal,
                       classes.size()});
      if (opts.progress)
        opts.progress("r=" + std::to_string(r) + " alpha=" + std::to_string(a) + " done");
    }
  }
  return out;
}

}  // namespace lamcoal
