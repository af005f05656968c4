// lamcoal: exact and importance-sampling likelihoods for infinitely-many-sites
// samples under Lambda-coalescents.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lamcoal/compressed.hpp"
#include "lamcoal/errors.hpp"
#include "lamcoal/estimator.hpp"
#include "lamcoal/exact.hpp"
#include "lamcoal/genetree.hpp"
#include "lamcoal/kernels.hpp"
#include "lamcoal/simulate.hpp"

using json = nlohmann::ordered_json;
using namespace lamcoal;

namespace {

constexpr int kExitUsage = 2, kExitResource = 3, kExitNumeric = 4;

struct Options {
  std::string model = "kingman";
  double rate = 1.0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string format = "json";
  std::string tree_path;
  std::string tables_path;
  std::string out_path;
  // simulate
  int n = 10;
  int count = 1;
  std::string history_path;
  // exact
  std::string quantity = "ordered";
  int limit = 40;
  bool verbose = false;
  // estimate
  std::string proposal = "huw2beta";
  std::uint64_t runs = 0;
  double rel_err = 0.01;
  std::uint64_t first_batch = 1000;
  std::string targets;
  int boundary = -1;
  std::string alpha_root = "rootmerge";
  // surface
  std::vector<std::string> models;
  std::vector<double> rates;
  // tvdist
  int complexity = 15;
  std::vector<double> alphas{1.0, 1.5, 2.0};
  std::vector<std::string> proposals;
  // tmrca
  std::vector<double> cdf_points;
  int mutation_site = -1;
};

std::string read_file(const std::string& path) {
  if (path.empty() || path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tree_hash(const Genetree& g) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_key(g, false)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw ArgumentError("cannot write '" + path + "'");
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// RunConfig record embedded in every artifact.
json run_config(const std::string& command, const Options& o) {
  json j;
  j["command"] = command;
  j["model"] = o.model;
  j["rate"] = o.rate;
  j["seed"] = o.seed;
  j["workers"] = o.workers;
  if (o.runs > 0)
    j["stop"] = {{"runs", o.runs}};
  else
    j["stop"] = {{"rel_err", o.rel_err}, {"first_batch", o.first_batch}};
  j["paths"] = {{"tree", o.tree_path}, {"tables", o.tables_path}, {"out", o.out_path}};
  j["isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  return j;
}

void emit(std::ostream& os, const std::string& format, const json& config, const std::vector<json>& rows) {
  if (format == "json") {
    json doc;
    doc["config"] = config;
    doc["results"] = rows;
    os << doc.dump(2) << "\n";
    return;
  }
  os << "# config " << config.dump() << "\n";
  if (rows.empty()) return;
  bool first = true;
  for (auto it = rows[0].begin(); it != rows[0].end(); ++it) {
    os << (first ? "" : "\t") << it.key();
    first = false;
  }
  os << "\n";
  for (const auto& row : rows) {
    first = true;
    for (auto it = row.begin(); it != row.end(); ++it) {
      os << (first ? "" : "\t");
      if (it->is_string())
        os << it->get<std::string>();
      else
        os << it->dump();
      first = false;
    }
    os << "\n";
  }
}

StopRule stop_rule(const Options& o) {
  return o.runs > 0 ? StopRule::fixed(o.runs) : StopRule::relative(o.rel_err, o.first_batch);
}

std::shared_ptr<const CompressedTables> load_or_build_tables(const Options& o, const LambdaModel& model, int n_max,
                                                             bool* cache_hit = nullptr) {
  if (cache_hit) *cache_hit = false;
  if (!o.tables_path.empty() && std::filesystem::exists(o.tables_path)) {
    auto t = CompressedTables::load(o.tables_path, model, o.rate, n_max);
    if (t) {
      if (cache_hit) *cache_hit = true;
      return t;
    }
  }
  auto t = std::make_shared<CompressedTables>(model, o.rate, n_max);
  if (!o.tables_path.empty()) t->save(o.tables_path);
  return t;
}

json estimate_row(const Genetree& g, const std::string& model, double r, const Estimate& e) {
  json row;
  row["tree_hash"] = tree_hash(g);
  row["model"] = model;
  row["r"] = r;
  row["scheme"] = scheme_name(e.scheme);
  row["log10_p"] = e.log_mean / std::log(10.0);
  row["rel_err"] = e.rel_std_err;
  row["runs"] = e.runs;
  row["seconds"] = e.wall_time;
  row["fallbacks"] = e.fallback_count;
  row["zero_weight_runs"] = e.zero_weight_runs;
  return row;
}

// Target list: comma-separated items "r=<x>", "model=<m>" or "model=<m>/r=<x>".
std::vector<Target> parse_targets(const std::string& text, const LambdaModel& model, double r) {
  std::vector<Target> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Target t{model, r};
    std::stringstream parts(item);
    std::string part;
    while (std::getline(parts, part, '/')) {
      if (part.rfind("r=", 0) == 0) {
        try {
          t.r = std::stod(part.substr(2));
        } catch (...) {
          throw ArgumentError("bad target rate '" + part + "'");
        }
      } else if (part.rfind("model=", 0) == 0) {
        t.model = LambdaModel::parse(part.substr(6));
      } else {
        throw ArgumentError("bad target item '" + part + "'");
      }
    }
    out.push_back(t);
  }
  if (out.empty()) throw ArgumentError("empty target list");
  return out;
}

AlphaRootRule parse_alpha_root(const std::string& s) {
  if (s == "literal") return AlphaRootRule::Literal;
  if (s == "rootmerge") return AlphaRootRule::RootMerge;
  throw ArgumentError("alpha root rule must be literal or rootmerge");
}

json history_json(const History& h) {
  static const char* names[] = {"start", "grow", "mutate", "new_type"};
  json j;
  j["target_n"] = h.target_n;
  j["complete"] = h.complete;
  json states = json::array(), events = json::array();
  for (const auto& s : h.states) states.push_back(serialize_genetree(s));
  for (const auto& e : h.events)
    events.push_back({{"kind", names[static_cast<int>(e.kind)]}, {"type", e.type}, {"amount", e.amount},
                      {"position", e.position}});
  j["states"] = states;
  j["events"] = events;
  return j;
}

int cmd_simulate(const Options& o) {
  const auto model = LambdaModel::parse(o.model);
  if (o.count < 1) throw ArgumentError("count must be >= 1");
  Output out(o.out_path);
  out.os() << "# config " << run_config("simulate", o).dump() << "\n";
  json histories = json::array();
  for (int k = 0; k < o.count; ++k) {
    // Tree k uses stream k of the seed.
    auto h = simulate_sample(o.n, model, o.rate, o.seed + static_cast<std::uint64_t>(k) * 0x9E3779B97F4A7C15ull);
    out.os() << "# tree " << k + 1 << "\n" << serialize_genetree(canonicalize(h.final_state(), true));
    if (!o.history_path.empty()) histories.push_back(history_json(h));
  }
  if (!o.history_path.empty()) {
    Output hist(o.history_path);
    hist.os() << histories.dump(1) << "\n";
  }
  return 0;
}

int cmd_exact(const Options& o) {
  const auto model = LambdaModel::parse(o.model);
  const auto g = parse_genetree(read_file(o.tree_path));
  ExactSolver solver(model, o.rate, o.limit);
  const auto t0 = std::chrono::steady_clock::now();
  const double p = solver.p_ordered(g);
  const double c = symmetry_count(g);
  const double pu = solver.p_unordered(g);
  const double p0 = solver.p_zero(g);
  // p0 = c * p_unordered must hold for every evaluation.
  if (std::fabs(p0 - c * pu) > 1e-9 * std::max(1e-300, std::fabs(p0)))
    throw NumericError("identity p0 = c * p_unordered violated");
  double value = p;
  if (o.quantity == "unordered")
    value = pu;
  else if (o.quantity == "p0")
    value = p0;
  else if (o.quantity != "ordered")
    throw ArgumentError("quantity must be ordered, unordered or p0");
  json row;
  row["tree_hash"] = tree_hash(g);
  row["model"] = model.to_string();
  row["r"] = o.rate;
  row["quantity"] = o.quantity;
  row["value"] = value;
  row["log10_value"] = std::log10(value);
  row["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.verbose) {
    row["ordered"] = p;
    row["unordered"] = pu;
    row["p0"] = p0;
    row["symmetry_count"] = c;
    row["memo_states"] = solver.memo_size();
  }
  Output out(o.out_path);
  emit(out.os(), o.format, run_config("exact", o), {row});
  return 0;
}

int cmd_estimate(const Options& o) {
  const auto model = LambdaModel::parse(o.model);
  const auto g = parse_genetree(read_file(o.tree_path));
  const auto kind = parse_scheme(o.proposal);
  const int n_max = std::max(g.n(), 2);
  std::shared_ptr<const CompressedTables> tables;
  if (scheme_needs_tables(kind)) tables = load_or_build_tables(o, model, n_max);
  Problem problem(model, o.rate, n_max, kind, tables, o.limit);
  problem.context().alpha_root = parse_alpha_root(o.alpha_root);
  RunConfig cfg{o.seed, o.workers, stop_rule(o)};
  std::vector<json> rows;
  if (!o.targets.empty()) {
    for (const auto& e : estimate_multi(g, problem, parse_targets(o.targets, model, o.rate), cfg)) {
      auto row = estimate_row(g, "", 0, e);
      const auto sp = e.target.find(" r=");
      row["model"] = e.target.substr(0, sp);
      row["r"] = std::stod(e.target.substr(sp + 3));
      rows.push_back(row);
    }
  } else if (o.boundary >= 0) {
    auto b = BoundarySet::complexity_at_most(o.boundary, problem.solver_ptr());
    rows.push_back(estimate_row(g, model.to_string(), o.rate, estimate_with_boundary(g, problem, b, cfg)));
  } else {
    rows.push_back(estimate_row(g, model.to_string(), o.rate, estimate(g, problem, cfg)));
  }
  Output out(o.out_path);
  emit(out.os(), o.format, run_config("estimate", o), rows);
  return 0;
}

int cmd_surface(const Options& o) {
  const auto model = LambdaModel::parse(o.model);
  const auto g = parse_genetree(read_file(o.tree_path));
  const auto kind = parse_scheme(o.proposal);
  if (o.runs == 0) throw ArgumentError("surface needs --runs");
  const int n_max = std::max(g.n(), 2);
  std::shared_ptr<const CompressedTables> tables;
  if (scheme_needs_tables(kind)) tables = load_or_build_tables(o, model, n_max);
  Problem problem(model, o.rate, n_max, kind, tables, o.limit);
  std::vector<Target> targets;
  const auto models = o.models.empty() ? std::vector<std::string>{o.model} : o.models;
  const auto rates = o.rates.empty() ? std::vector<double>{o.rate} : o.rates;
  for (const auto& m : models)
    for (double r : rates) targets.push_back({LambdaModel::parse(m), r});
  RunConfig cfg{o.seed, o.workers, StopRule::fixed(o.runs)};
  const auto est = estimate_multi(g, problem, targets, cfg);
  std::vector<json> rows;
  for (std::size_t k = 0; k < est.size(); ++k)
    rows.push_back(estimate_row(g, targets[k].model.to_string(), targets[k].r, est[k]));
  Output out(o.out_path);
  emit(out.os(), o.format == "json" ? "json" : "tsv", run_config("surface", o), rows);
  return 0;
}

int cmd_tvdist(const Options& o) {
  std::vector<SchemeKind> schemes;
  if (o.proposals.empty())
    schemes = non_optimal_schemes();
  else
    for (const auto& p : o.proposals) schemes.push_back(parse_scheme(p));
  const auto rates = o.rates.empty() ? std::vector<double>{0.5, 1.0, 2.0} : o.rates;
  TvOptions opts;
  opts.alpha_root = parse_alpha_root(o.alpha_root);
  if (o.verbose) opts.progress = [](const std::string& s) { std::cerr << s << "\n"; };
  const auto cells = tv_study(o.complexity, rates, o.alphas, schemes, opts);
  std::vector<json> rows;
  for (const auto& c : cells) {
    json row;
    row["complexity"] = o.complexity;
    row["r"] = c.r;
    row["alpha"] = c.alpha;
    row["scheme"] = scheme_name(c.scheme);
    row["mean_tv"] = c.mean_tv;
    row["mean_tv_ordered"] = c.mean_tv_ordered;
    row["classes"] = c.classes;
    rows.push_back(row);
  }
  Output out(o.out_path);
  auto cfg = run_config("tvdist", o);
  cfg["complexity"] = o.complexity;
  cfg["alpha_root"] = o.alpha_root;
  emit(out.os(), o.format, cfg, rows);
  return 0;
}

int cmd_tmrca(const Options& o) {
  const auto model = LambdaModel::parse(o.model);
  const auto g = parse_genetree(read_file(o.tree_path));
  const auto kind = parse_scheme(o.proposal);
  const int n_max = std::max(g.n(), 2);
  std::shared_ptr<const CompressedTables> tables;
  if (scheme_needs_tables(kind)) tables = load_or_build_tables(o, model, n_max);
  Problem problem(model, o.rate, n_max, kind, tables, o.limit);
  RunConfig cfg{o.seed, o.workers, stop_rule(o)};
  std::vector<std::pair<std::string, Functional>> fs{{"tmrca_mean", tmrca_mean()}};
  for (double x : o.cdf_points) fs.emplace_back("tmrca_cdf(" + std::to_string(x) + ")", tmrca_cdf(x));
  if (o.mutation_site >= 0) {
    if (o.mutation_site < 1 || o.mutation_site > g.s()) throw ArgumentError("mutation site out of range");
    fs.emplace_back("mutation_age(" + std::to_string(o.mutation_site) + ")", mutation_age(o.mutation_site));
  }
  std::vector<json> rows;
  for (const auto& [name, f] : fs) {
    const auto e = estimate_functional(g, problem, f, cfg);
    json row;
    row["tree_hash"] = tree_hash(g);
    row["functional"] = name;
    row["value"] = e.ratio;
    row["std_err"] = e.ratio_std_err;
    row["log10_p"] = e.log_mean / std::log(10.0);
    row["runs"] = e.runs;
    row["seconds"] = e.wall_time;
    rows.push_back(row);
  }
  Output out(o.out_path);
  emit(out.os(), o.format, run_config("tmrca", o), rows);
  return 0;
}

int cmd_tables(const Options& o) {
  if (o.tables_path.empty()) throw ArgumentError("tables needs --tables <file>");
  const auto model = LambdaModel::parse(o.model);
  const auto t0 = std::chrono::steady_clock::now();
  bool hit = false;
  load_or_build_tables(o, model, o.n, &hit);
  json row;
  row["model"] = model.to_string();
  row["r"] = o.rate;
  row["n_max"] = o.n;
  row["path"] = o.tables_path;
  row["cache_hit"] = hit;
  row["bytes"] = std::filesystem::file_size(o.tables_path);
  row["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Output out(o.out_path);
  emit(out.os(), o.format, run_config("tables", o), {row});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihoods of infinitely-many-sites samples under Lambda-coalescents"};
  app.set_config("--config", "", "key=value config file; flags override");
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool tree) {
    sub->add_option("--model", o.model, "kingman | beta:<a> | point:<x> | mix:<w>*<m>+...");
    sub->add_option("--rate,-r", o.rate, "mutation rate per lineage");
    sub->add_option("--seed", o.seed);
    sub->add_option("--format", o.format)->check(CLI::IsMember({"json", "tsv"}));
    sub->add_option("--out,-o", o.out_path, "output file (default stdout)");
    if (tree) sub->add_option("--tree,-t", o.tree_path, "genetree file ('-' for stdin)")->required();
  };
  auto sampling = [&](CLI::App* sub) {
    sub->add_option("--proposal,-p", o.proposal, "gt|sd|huw1|huw2alpha|huw2beta|huw2a|huw2b|huw15|optimal");
    sub->add_option("--runs,-M", o.runs, "fixed number of runs");
    sub->add_option("--rel-err", o.rel_err, "target relative standard error");
    sub->add_option("--first-batch", o.first_batch);
    sub->add_option("--workers,-w", o.workers)->check(CLI::Range(1u, 1024u));
    sub->add_option("--tables", o.tables_path, "compressed-table cache file");
    sub->add_option("--limit", o.limit, "exact-solver complexity limit");
  };

  auto* sim = app.add_subcommand("simulate", "simulate samples");
  common(sim, false);
  sim->add_option("--n", o.n, "sample size")->required();
  sim->add_option("--count", o.count);
  sim->add_option("--history", o.history_path, "write forward histories as JSON");

  auto* ex = app.add_subcommand("exact", "exact sampling probability");
  common(ex, true);
  ex->add_option("--quantity", o.quantity)->check(CLI::IsMember({"ordered", "unordered", "p0"}));
  ex->add_option("--limit", o.limit);
  ex->add_flag("--verbose,-v", o.verbose);

  auto* est = app.add_subcommand("estimate", "importance-sampling estimate");
  common(est, true);
  sampling(est);
  est->add_option("--targets", o.targets, "r=<x>,model=<m>/r=<x>,...");
  est->add_option("--boundary", o.boundary, "stop at complexity <= K and finish exactly");
  est->add_option("--alpha-root", o.alpha_root)->check(CLI::IsMember({"literal", "rootmerge"}));

  auto* surf = app.add_subcommand("surface", "likelihood surface from one run set");
  common(surf, true);
  sampling(surf);
  surf->add_option("--models", o.models)->delimiter(',');
  surf->add_option("--rates", o.rates)->delimiter(',');

  auto* tv = app.add_subcommand("tvdist", "mean TV distance to the optimal proposal");
  tv->add_option("--complexity,-K", o.complexity)->check(CLI::Range(1, 24));
  tv->add_option("--rates", o.rates)->delimiter(',');
  tv->add_option("--alphas", o.alphas)->delimiter(',');
  tv->add_option("--proposals", o.proposals)->delimiter(',');
  tv->add_option("--alpha-root", o.alpha_root)->check(CLI::IsMember({"literal", "rootmerge"}));
  tv->add_option("--format", o.format)->check(CLI::IsMember({"json", "tsv"}));
  tv->add_option("--out,-o", o.out_path);
  tv->add_flag("--verbose,-v", o.verbose);

  auto* tm = app.add_subcommand("tmrca", "conditional TMRCA and mutation ages");
  common(tm, true);
  sampling(tm);
  tm->add_option("--cdf", o.cdf_points, "P(TMRCA <= x | data) points")->delimiter(',');
  tm->add_option("--mutation-age", o.mutation_site, "site label (1-based, as in the input)");

  auto* tb = app.add_subcommand("tables", "build or verify a compressed-table cache");
  common(tb, false);
  tb->add_option("--n", o.n, "largest sample size")->required();
  tb->add_option("--tables", o.tables_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*ex) return cmd_exact(o);
    if (*est) return cmd_estimate(o);
    if (*surf) return cmd_surface(o);
    if (*tv) return cmd_tvdist(o);
    if (*tm) return cmd_tmrca(o);
    if (*tb) return cmd_tables(o);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
