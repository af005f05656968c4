#include "lamcoal/proposals.hpp"

#include <cmath>

#include "lamcoal/errors.hpp"
#include "lamcoal/kernels.hpp"

namespace lamcoal {

SchemeKind parse_scheme(const std::string& name) {
  static const std::pair<const char*, SchemeKind> table[] = {
      {"gt", SchemeKind::GT},           {"sd", SchemeKind::SD},           {"huw1", SchemeKind::HUW1},
      {"huw2alpha", SchemeKind::HUW2Alpha}, {"huw2beta", SchemeKind::HUW2Beta}, {"huw2a", SchemeKind::HUW2A},
      {"huw2b", SchemeKind::HUW2B},     {"huw15", SchemeKind::HUW15},     {"optimal", SchemeKind::Optimal}};
  for (auto& [k, v] : table)
    if (name == k) return v;
  throw ArgumentError("unknown proposal '" + name + "'");
}

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::GT: return "gt";
    case SchemeKind::SD: return "sd";
    case SchemeKind::HUW1: return "huw1";
    case SchemeKind::HUW2Alpha: return "huw2alpha";
    case SchemeKind::HUW2Beta: return "huw2beta";
    case SchemeKind::HUW2A: return "huw2a";
    case SchemeKind::HUW2B: return "huw2b";
    case SchemeKind::HUW15: return "huw15";
    case SchemeKind::Optimal: return "optimal";
  }
  return "";
}

bool scheme_needs_tables(SchemeKind kind) {
  return kind != SchemeKind::GT && kind != SchemeKind::SD && kind != SchemeKind::Optimal;
}

const std::vector<SchemeKind>& non_optimal_schemes() {
  static const std::vector<SchemeKind> v = {SchemeKind::GT,        SchemeKind::SD,       SchemeKind::HUW1,
                                            SchemeKind::HUW2B,     SchemeKind::HUW2A,    SchemeKind::HUW2Alpha,
                                            SchemeKind::HUW2Beta,  SchemeKind::HUW15};
  return v;
}

namespace {

struct State {
  const Genetree& g;
  TreeInfo info;
  int n, s, d;
  std::vector<std::vector<char>> anc;  // anc[a][v]: a is v or an ancestor of v
  std::vector<int> merge_at;           // index of event (i, l=1)
  std::vector<int> remove_at;          // index of removal event or -1
  std::vector<char> eligible;

  explicit State(const Genetree& g_) : g(g_), info(g_), n(g_.n()), s(g_.s()), d(g_.d()) {
    anc.assign(s + 1, std::vector<char>(s + 1, 0));
    for (int v = 0; v <= s; ++v)
      for (int u = v; u != -1; u = g.parent(u)) anc[u][v] = 1;
  }

  void index(const std::vector<ReverseEvent>& events) {
    merge_at.assign(d, -1);
    remove_at.assign(d, -1);
    eligible.assign(d, 0);
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& e = events[k];
      if (e.kind == ReverseEvent::Kind::Merge) {
        if (e.l == 1) merge_at[e.type] = static_cast<int>(k);
      } else {
        remove_at[e.type] = static_cast<int>(k);
      }
      eligible[e.type] = 1;
    }
  }

  int node(int i) const { return g.type_node(i); }
  bool carries(int i, int site) const { return anc[site][node(i)]; }
  int D(int site) const { return info.carriers[site]; }
  int event_index(int i, int l) const { return l == 0 ? remove_at[i] : merge_at[i] + (l - 1); }
};

// Pair weight with sites already validated.
double pair_w(const State& st, int a, int b, int i, int l, const CompressedTables& T) {
  const int n = st.n, ni = st.g.mult(i);
  if (st.anc[a][b] || st.anc[b][a]) {
    const int o = st.anc[a][b] ? a : b, u = o == a ? b : a;
    const int d1 = st.D(o), d2 = st.D(u);
    if (st.carries(i, u)) {
      if (l == 0) return d2 == 1 ? ni / double(d2) * T.q_n_remove(n, d1) : 0.0;
      return ni / double(d2) * T.q_n_inner(n, d1, d2, l);
    }
    if (l == 0) return 0.0;
    if (st.carries(i, o)) return ni / double(d1 - d2) * T.q_n_middle(n, d1, d2, l);
    return ni / double(n - d1) * T.q_n_root(n, d1, d2, l);
  }
  if (st.carries(i, a) || st.carries(i, b)) {
    const int sp = st.carries(i, a) ? a : b, spp = sp == a ? b : a;
    const int d1 = st.D(sp), d2 = st.D(spp);
    if (l == 0) return d1 == 1 ? ni / double(d1) * T.q_m2_remove_first(n, d2) : 0.0;
    return ni / double(d1) * T.q_m2_first(n, d1, d2, l);
  }
  if (l == 0) return 0.0;
  const int d1 = st.D(a), d2 = st.D(b);
  return ni / double(n - d1 - d2) * T.q_m2_root(n, d1, d2, l);
}

// Sum over l of the pair weight (the pair's vote for type i).
double pair_u(const State& st, int a, int b, int i, const CompressedTables& T) {
  const int n = st.n, ni = st.g.mult(i);
  if (st.anc[a][b] || st.anc[b][a]) {
    const int o = st.anc[a][b] ? a : b, u = o == a ? b : a;
    const int d1 = st.D(o), d2 = st.D(u);
    if (st.carries(i, u)) return ni / double(d2) * T.mass_n_inner(n, d1, d2);
    if (st.carries(i, o)) return ni / double(d1 - d2) * T.mass_n_middle(n, d1, d2);
    return ni / double(n - d1) * T.mass_n_root(n, d1, d2);
  }
  if (st.carries(i, a) || st.carries(i, b)) {
    const int sp = st.carries(i, a) ? a : b, spp = sp == a ? b : a;
    return ni / double(st.D(sp)) * T.mass_m2_first(n, st.D(sp), st.D(spp));
  }
  return ni / double(n - st.D(a) - st.D(b)) * T.mass_m2_root(n, st.D(a), st.D(b));
}

const CompressedTables& need_tables(const ProposalContext& ctx, int n) {
  if (!ctx.tables) throw ConfigurationError("proposal needs compressed tables");
  if (ctx.tables->n_max() < n)
    throw ConfigurationError("compressed tables cover n <= " + std::to_string(ctx.tables->n_max()) +
                             "; need n_max >= " + std::to_string(n));
  return *ctx.tables;
}

// Normalized weights over l = 1..n_i-1 for the HUW1 merge-size rule.
void huw1_sizes(const State& st, int i, const CompressedTables& T, std::vector<double>& out) {
  out.assign(st.g.mult(i), 0.0);
  const int v = st.node(i);
  for (int l = 1; l < st.g.mult(i); ++l)
    out[l] = v == 0 ? T.q_m0_merge(st.n, l) : T.q_m1_mut(st.n, st.D(v), l);
}

void alpha_sizes(const State& st, int i, const CompressedTables& T, AlphaRootRule rule, std::vector<double>& out) {
  const int ni = st.g.mult(i), n = st.n;
  out.assign(ni, 0.0);
  const int v = st.node(i);
  for (int l = 1; l < ni; ++l) {
    if (v != 0) {
      const int dd = st.D(v);
      out[l] = T.q_n_middle(n, dd, dd - ni, l);
    } else if (rule == AlphaRootRule::Literal) {
      out[l] = T.q_m1_mut(n, n - ni, l);
    } else {
      out[l] = T.q_m1_root(n, n - ni, l);
    }
  }
}

// Writes type-probability times normalized size weights into w.
void two_step(const State& st, const std::vector<double>& type_w, int i, const std::vector<double>& sizes,
              std::vector<double>& w) {
  if (st.g.mult(i) == 1) {
    if (st.remove_at[i] >= 0) w[st.remove_at[i]] += type_w[i];
    return;
  }
  double tot = 0;
  for (int l = 1; l < st.g.mult(i); ++l) tot += sizes[l];
  if (!(tot > 0)) return;
  for (int l = 1; l < st.g.mult(i); ++l) w[st.event_index(i, l)] += type_w[i] * sizes[l] / tot;
}

std::vector<double> huw1_type_weights(const State& st, const CompressedTables& T) {
  std::vector<double> tw(st.d, 0.0);
  if (st.s == 0) {
    tw[0] = 1.0;
    return tw;
  }
  for (int site = 1; site <= st.s; ++site) {
    const int dd = st.D(site);
    const double p = T.mass_m1_mut(st.n, dd);
    for (int i = 0; i < st.d; ++i) {
      if (!st.eligible[i]) continue;
      tw[i] += st.carries(i, site) ? p * st.g.mult(i) / dd : (1 - p) * st.g.mult(i) / double(st.n - dd);
    }
  }
  return tw;
}

std::vector<double> q1_type_weights(const State& st, const CompressedTables& T) {
  std::vector<double> tw(st.d, 0.0);
  for (int a = 1; a <= st.s; ++a)
    for (int b = a + 1; b <= st.s; ++b)
      for (int i = 0; i < st.d; ++i)
        if (st.eligible[i]) tw[i] += pair_u(st, a, b, i, T);
  return tw;
}

void normalize_types(std::vector<double>& tw) {
  double t = 0;
  for (double x : tw) t += x;
  if (t > 0)
    for (double& x : tw) x /= t;
}

}  // namespace

double pair_weight(const Genetree& g, int a, int b, int i, int l, const CompressedTables& tables) {
  if (a < 1 || b < 1 || a > g.s() || b > g.s() || a == b) throw ArgumentError("invalid site pair");
  if (i < 0 || i >= g.d() || l < 0) throw ArgumentError("invalid type or reduction");
  State st(g);
  return pair_w(st, a, b, i, l, tables);
}

double gt_normalizer(const Genetree& g, const ProposalContext& ctx) {
  double f = 0;
  for (const auto& t : recursion_terms(g, *ctx.rates, ctx.r)) f += t.coeff;
  return f;
}

StepDistribution step_distribution(SchemeKind kind, const Genetree& g, const ProposalContext& ctx) {
  if (g.is_root()) throw ArgumentError("root state has no reverse events");
  if (!ctx.rates || ctx.rates->n_max() < g.n()) throw ConfigurationError("rate table does not cover sample size");
  StepDistribution out;
  out.events = enumerate_reverse_events(g);
  const std::size_t m = out.events.size();
  out.coeff.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.coeff[k] = recursion_coefficient(g, out.events[k], *ctx.rates, ctx.r);
  std::vector<double> w(m, 0.0);

  auto from_optimal = [&](const std::vector<OptimalStep>& steps) {
    for (std::size_t k = 0; k < m; ++k) w[k] = steps[k].probability;
  };

  const bool two_site_kind = kind == SchemeKind::HUW2Alpha || kind == SchemeKind::HUW2Beta ||
                             kind == SchemeKind::HUW2A || kind == SchemeKind::HUW2B || kind == SchemeKind::HUW15;

  if (kind == SchemeKind::GT) {
    w = out.coeff;
  } else if (kind == SchemeKind::Optimal) {
    if (!ctx.solver) throw ConfigurationError("optimal proposal needs an exact solver");
    from_optimal(ctx.solver->optimal_reverse_distribution(g));
  } else if (kind == SchemeKind::SD) {
    State st(g);
    st.index(out.events);
    const RateTable& R = *ctx.rates;
    int z = 0;
    for (int i = 0; i < st.d; ++i)
      if (st.eligible[i]) z += g.mult(i);
    for (int i = 0; i < st.d; ++i) {
      if (!st.eligible[i]) continue;
      if (g.mult(i) == 1) {
        w[st.remove_at[i]] = 1.0 / z;
        continue;
      }
      double denom = 0;
      for (int k = 2; k <= g.mult(i); ++k) denom += R.q(st.n, st.n - k + 1);
      if (!(denom > 0)) continue;
      for (int k = 2; k <= g.mult(i); ++k)
        w[st.event_index(i, k - 1)] = R.q(st.n, st.n - k + 1) / denom * g.mult(i) / z;
    }
  } else if (two_site_kind && g.s() <= 2) {
    from_optimal(need_tables(ctx, g.n()).optimal_small(g));
  } else {
    const CompressedTables& T = need_tables(ctx, g.n());
    State st(g);
    st.index(out.events);
    std::vector<double> sizes;
    switch (kind) {
      case SchemeKind::HUW1: {
        auto tw = huw1_type_weights(st, T);
        normalize_types(tw);
        for (int i = 0; i < st.d; ++i) {
          if (!st.eligible[i]) continue;
          huw1_sizes(st, i, T, sizes);
          two_step(st, tw, i, sizes, w);
        }
        break;
      }
      case SchemeKind::HUW15:
      case SchemeKind::HUW2Alpha: {
        auto tw = kind == SchemeKind::HUW15 ? huw1_type_weights(st, T) : q1_type_weights(st, T);
        normalize_types(tw);
        for (int i = 0; i < st.d; ++i) {
          if (!st.eligible[i]) continue;
          alpha_sizes(st, i, T, ctx.alpha_root, sizes);
          two_step(st, tw, i, sizes, w);
        }
        break;
      }
      case SchemeKind::HUW2Beta: {
        auto tw = q1_type_weights(st, T);
        normalize_types(tw);
        for (int i = 0; i < st.d; ++i) {
          if (!st.eligible[i]) continue;
          sizes.assign(g.mult(i), 0.0);
          for (int a = 1; a <= st.s; ++a)
            for (int b = a + 1; b <= st.s; ++b)
              for (int l = 1; l < g.mult(i); ++l) sizes[l] += pair_w(st, a, b, i, l, T);
          two_step(st, tw, i, sizes, w);
        }
        break;
      }
      case SchemeKind::HUW2B: {
        for (int i = 0; i < st.d; ++i) {
          if (!st.eligible[i]) continue;
          const int l0 = g.mult(i) == 1 ? 0 : 1;
          for (int l = l0; l < std::max(g.mult(i), 1); ++l) {
            double acc = 0;
            for (int a = 1; a <= st.s; ++a)
              for (int b = a + 1; b <= st.s; ++b) acc += pair_w(st, a, b, i, l, T);
            if (l == 0 && st.remove_at[i] < 0) continue;
            w[st.event_index(i, l)] = acc;
          }
        }
        break;
      }
      case SchemeKind::HUW2A: {
        for (int i = 0; i < st.d; ++i) {
          if (!st.eligible[i]) continue;
          const int v = st.node(i);
          if (v == 0) {
            for (int l = 1; l < g.mult(i); ++l) {
              double acc = 0;
              for (int site = 1; site <= st.s; ++site)
                acc += g.mult(i) / double(st.n - st.D(site)) * T.q_m1_root(st.n, st.D(site), l);
              w[st.event_index(i, l)] = acc;
            }
            continue;
          }
          const int l0 = g.mult(i) == 1 ? 0 : 1;
          for (int l = l0; l < std::max(g.mult(i), 1); ++l) {
            double acc = 0;
            for (int site = 1; site <= st.s; ++site)
              if (site != v) acc += pair_w(st, v, site, i, l, T);
            w[st.event_index(i, l)] = acc;
          }
        }
        break;
      }
      default:
        break;
    }
  }

  double total = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(out.coeff[k] > 0)) w[k] = 0.0;  // keep the support inside admissible events
    total += w[k];
  }
  if (!(total > 0) || !std::isfinite(total)) {
    out.fallback = kind != SchemeKind::GT;
    w = out.coeff;
    total = 0;
    for (double x : w) total += x;
    if (!(total > 0)) throw NumericError("state has no admissible reverse event");
  }
  out.prob.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.prob[k] = w[k] / total;
  return out;
}

ProposedStep sample_step(const StepDistribution& dist, Philox& rng) {
  const double u = rng.uniform();
  double acc = 0;
  int last = -1;
  for (std::size_t k = 0; k < dist.prob.size(); ++k) {
    if (dist.prob[k] <= 0) continue;
    last = static_cast<int>(k);
    acc += dist.prob[k];
    if (u < acc) return {last, std::log(dist.prob[k])};
  }
  if (last < 0) throw NumericError("empty proposal distribution");
  return {last, std::log(dist.prob[last])};
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ArgumentError("distributions differ in support size");
  return 0.5 * kernels::l1_distance(a, b);
}

double tv_distance(SchemeKind kind, const Genetree& g, const ProposalContext& ctx) {
  auto q = step_distribution(kind, g, ctx);
  auto opt = step_distribution(SchemeKind::Optimal, g, ctx);
  return tv_distance(q.prob, opt.prob);
}

}  // namespace lamcoal
