#include "lamcoal/simulate.hpp"

#include <cmath>

#include "lamcoal/errors.hpp"

namespace lamcoal {

namespace {

int pick_by_frequency(const Genetree& g, Philox& rng) {
  std::uint64_t u = rng.below(static_cast<std::uint64_t>(g.n()));
  for (int i = 0; i < g.d(); ++i) {
    if (u < static_cast<std::uint64_t>(g.mult(i))) return i;
    u -= g.mult(i);
  }
  return g.d() - 1;
}

Genetree spawn(const Genetree& g, int i, int pos) {
  Genetree h = g;
  h.add_mult(i, -1);
  const int w = h.add_node(g.type_node(i));
  h.insert_type(pos, w, 1);
  return h;
}

Genetree mutate(const Genetree& g, int i) {
  Genetree h = g;
  h.move_type(i, h.add_node(g.type_node(i)));
  return h;
}

Genetree grow(const Genetree& g, int i, int l) {
  Genetree h = g;
  h.add_mult(i, l);
  return h;
}

}  // namespace

double TimedHistory::total_time() const {
  double t = 0;
  for (std::size_t k = 1; k < holding.size(); ++k) t += holding[k];
  return t;
}

History simulate_sample(const GreenTable& green, double r, Philox& rng) {
  const int n = green.n();
  const RateTable& rates = green.rates();
  History h;
  h.target_n = n;
  h.states.emplace_back();
  int K = n;
  {
    double u = rng.uniform(), acc = 0;
    for (int k = 2; k <= n; ++k) {
      acc += green.start_prob(k);
      if (u < acc) {
        K = k;
        break;
      }
    }
  }
  Genetree cur;
  cur.set_mult(0, K);
  h.states.push_back(cur);
  h.events.push_back({ForwardEvent::Kind::Start, 0, K, -1});
  while (true) {
    const int k = cur.n();
    const double lam = rates.total(k);
    if (rng.uniform() * (k * r + lam) < k * r) {
      const int i = pick_by_frequency(cur, rng);
      if (cur.mult(i) == 1) {
        cur = mutate(cur, i);
        h.events.push_back({ForwardEvent::Kind::Mutate, i, 0, -1});
      } else {
        const int pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(cur.d() + 1)));
        cur = spawn(cur, i, pos);
        h.events.push_back({ForwardEvent::Kind::NewType, i, 0, pos});
      }
      h.states.push_back(cur);
      continue;
    }
    if (k == n) break;
    double total = 0;
    for (int j = k + 1; j <= n; ++j) total += green.reversed_rate(k, j);
    double u = rng.uniform() * total, acc = 0;
    int J = n;
    for (int j = k + 1; j <= n; ++j) {
      acc += green.reversed_rate(k, j);
      if (u < acc) {
        J = j;
        break;
      }
    }
    const int i = pick_by_frequency(cur, rng);
    cur = grow(cur, i, J - k);
    h.events.push_back({ForwardEvent::Kind::Grow, i, J - k, -1});
    h.states.push_back(cur);
  }
  h.complete = true;
  return h;
}

History simulate_sample(int target_n, const LambdaModel& model, double r, std::uint64_t seed) {
  if (target_n < 1) throw ArgumentError("target sample size must be >= 1");
  if (target_n == 1) {
    History h;
    h.states.emplace_back();
    h.complete = true;
    return h;
  }
  GreenTable green = green_table(model, target_n);
  Philox rng(seed, 0);
  return simulate_sample(green, r, rng);
}

int insertion_multiplicity(const Genetree& g, int i, int pos) {
  const std::string want = canonical_key(spawn(g, i, pos), true);
  int count = 0;
  for (int j = 0; j <= g.d(); ++j)
    if (j == pos || canonical_key(spawn(g, i, j), true) == want) ++count;
  return count;
}

double forward_log_prob(const History& h, const GreenTable& green, double r) {
  const int n = green.n();
  const RateTable& rates = green.rates();
  if (h.states.empty() || !h.states.front().is_root()) throw ArgumentError("history must start at the root");
  if (h.events.size() + 1 != h.states.size()) throw ArgumentError("history events and states disagree");
  if (h.target_n != n) throw ArgumentError("history target size differs from green table");
  double lp = 0;
  for (std::size_t k = 0; k < h.events.size(); ++k) {
    const Genetree& a = h.states[k];
    const Genetree& b = h.states[k + 1];
    const ForwardEvent& e = h.events[k];
    const int m = a.n();
    const double rm = m * r + rates.total(m);
    Genetree expect;
    double p = 0;
    switch (e.kind) {
      case ForwardEvent::Kind::Start:
        if (k != 0 || e.amount < 2 || e.amount > n) throw ArgumentError("invalid start event");
        expect.set_mult(0, e.amount);
        p = green.start_prob(e.amount);
        break;
      case ForwardEvent::Kind::Grow:
        if (e.amount < 1 || m + e.amount > n) throw ArgumentError("invalid growth event");
        expect = grow(a, e.type, e.amount);
        p = a.mult(e.type) / static_cast<double>(m) * green.reversed_rate(m, m + e.amount) / rm;
        break;
      case ForwardEvent::Kind::Mutate:
        if (a.mult(e.type) != 1) throw ArgumentError("mutation event on non-singleton type");
        expect = mutate(a, e.type);
        p = r / rm;
        break;
      case ForwardEvent::Kind::NewType:
        if (a.mult(e.type) < 2) throw ArgumentError("new-type event needs multiplicity >= 2");
        expect = spawn(a, e.type, e.position);
        p = r / rm * a.mult(e.type) * insertion_multiplicity(a, e.type, e.position) / (a.d() + 1.0);
        break;
    }
    if (k == 0 ? !(expect == b) && canonical_key(expect, true) != canonical_key(b, true)
               : canonical_key(expect, true) != canonical_key(b, true))
      throw ArgumentError("history step " + std::to_string(k) + " inconsistent with its event");
    lp += std::log(p);
  }
  if (h.complete && h.states.size() > 1) {
    const int m = h.final_state().n();
    if (m != n) throw ArgumentError("complete history must end at the target size");
    lp += std::log(rates.total(m) / (m * r + rates.total(m)));
  }
  return lp;
}

double forward_log_prob(const History& h, const LambdaModel& model, double r) {
  if (h.target_n < 2) return 0.0;
  return forward_log_prob(h, green_table(model, h.target_n), r);
}

TimedHistory embed_times(const History& h, const RateTable& rates, double r, Philox& rng) {
  TimedHistory t{h, std::vector<double>(h.states.size(), 0.0)};
  for (std::size_t k = 1; k < h.states.size(); ++k) {
    const int m = h.states[k].n();
    t.holding[k] = rng.exponential(m * r + rates.total(m));
  }
  return t;
}

TimedHistory embed_times(const History& h, const LambdaModel& model, double r, std::uint64_t seed) {
  int nmax = 2;
  for (auto& s : h.states) nmax = std::max(nmax, s.n());
  RateTable rates(model, nmax);
  Philox rng(seed, 1);
  return embed_times(h, rates, r, rng);
}

}  // namespace lamcoal
