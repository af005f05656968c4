#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "lamcoal/errors.hpp"
#include "lamcoal/genetree.hpp"

using namespace lamcoal;

namespace {

Genetree fig7() { return Genetree::from_paths({{2, 1, 0}, {3, 1, 0}, {4, 0}}, {2, 2, 3}); }

// Classes of complexity K by exhaustive search over labelled mutation trees,
// type placements and multiplicities; identity decided by trying all site relabelings.
std::size_t brute_force_class_count(int K) {
  std::set<std::vector<std::pair<std::vector<int>, int>>> classes;
  for (int s = 0; s <= K - 1; ++s) {
    const int n = K + 1 - s;
    std::vector<int> parent(s + 1, 0);
    std::function<void(int)> trees = [&](int v) {
      if (v > s) {
        for (int u = 1; u <= s; ++u) {  // acyclic
          int w = u, steps = 0;
          while (w != 0 && steps <= s) w = parent[w], ++steps;
          if (w != 0) return;
        }
        std::vector<int> children(s + 1, 0);
        for (int u = 1; u <= s; ++u) ++children[parent[u]];
        for (int mask = 1; mask < (1 << (s + 1)); ++mask) {
          bool ok = true;
          for (int u = 1; u <= s; ++u)
            if (children[u] == 0 && !(mask >> u & 1)) ok = false;
          std::vector<int> nodes;
          for (int u = 0; u <= s; ++u)
            if (mask >> u & 1) nodes.push_back(u);
          const int d = static_cast<int>(nodes.size());
          if (!ok || d > n) continue;
          std::vector<int> mult(d, 1);
          std::function<void(int, int)> comp = [&](int i, int left) {
            if (i == d - 1) {
              mult[i] = left;
              std::vector<int> carriers(s + 1, 0);
              for (int t = 0; t < d; ++t)
                for (int w = nodes[t]; w != 0; w = parent[w]) carriers[w] += mult[t];
              for (int u = 1; u <= s; ++u)
                if (carriers[u] >= n) return;
              std::vector<int> perm(s);
              std::iota(perm.begin(), perm.end(), 1);
              std::vector<std::pair<std::vector<int>, int>> best;
              do {
                std::vector<std::pair<std::vector<int>, int>> rows;
                for (int t = 0; t < d; ++t) {
                  std::vector<int> path;
                  for (int w = nodes[t]; w != 0; w = parent[w]) path.push_back(perm[w - 1]);
                  rows.push_back({path, mult[t]});
                }
                std::sort(rows.begin(), rows.end());
                if (best.empty() || rows < best) best = rows;
              } while (std::next_permutation(perm.begin(), perm.end()));
              classes.insert(best);
              return;
            }
            for (int m = 1; m <= left - (d - 1 - i); ++m) {
              mult[i] = m;
              comp(i + 1, left - m);
            }
          };
          comp(0, n);
        }
        return;
      }
      for (int p = 0; p <= s; ++p) {
        if (p == v) continue;
        parent[v] = p;
        trees(v + 1);
      }
    };
    if (n >= 2 || s == 0) trees(1);
  }
  return classes.size();
}

}  // namespace

TEST_SUITE("genetree") {
  TEST_CASE("parse, serialize and derived sizes") {
    const auto g = parse_genetree("# comment\n2: 2 1 0\n2: 3 1 0\n3: 4 0\n");
    CHECK(g.n() == 7);
    CHECK(g.d() == 3);
    CHECK(g.s() == 4);
    CHECK(g.complexity() == 10);
    CHECK(parse_genetree(serialize_genetree(g)) == g);
    const auto root = parse_genetree("1: 0\n");
    CHECK(root.is_root());
    CHECK(root.complexity() == 0);
  }

  TEST_CASE("parse errors carry line numbers") {
    auto line_of = [](const std::string& text) {
      try {
        parse_genetree(text);
      } catch (const ParseError& e) {
        return e.line;
      }
      return -1;
    };
    CHECK(line_of("2: 1 0\nfoo\n") == 2);
    CHECK(line_of("2: 1 0\n0: 0\n") == 2);
    CHECK(line_of("2: 1\n") == 1);
    CHECK(line_of("1: 1 0\n1: 0 1 0\n") == 2);
    CHECK(line_of("1: 1 1 0\n") == 1);
    CHECK(line_of("1: 1 0\n2: 0\n1: 1 0\n") == 3);
    CHECK(line_of("1: x 0\n") == 1);
    CHECK_THROWS_AS(parse_genetree(""), ParseError);
    CHECK_THROWS_AS(parse_genetree("2: 1 0\n"), ParseError);  // site carried by everyone
    CHECK_THROWS_AS(parse_genetree("1: 2 1 0\n1: 1 0\n"), ParseError);
  }

  TEST_CASE("symmetry count: worked example and brute force up to complexity 9") {
    CHECK(symmetry_count(fig7()) == 2.0);
    CHECK(brute_force_symmetry_count(fig7()) == 2u);
    std::size_t checked = 0;
    for (int K = 1; K <= 9; ++K)
      for (const auto& g : enumerate_all_genetrees(K)) {
        CHECK(static_cast<double>(brute_force_symmetry_count(g)) == symmetry_count(g));
        CHECK(std::exp(log_symmetry_count(g)) == doctest::Approx(symmetry_count(g)));
        ++checked;
      }
    CHECK(checked == 1 + 2 + 5 + 11 + 28 + 67 + 171 + 433 + 1123);
  }

  TEST_CASE("symmetry count equals d!/#distinct orderings") {
    Philox rng(5, 0);
    for (const auto& g : enumerate_all_genetrees(7)) {
      std::vector<int> order(g.d());
      std::iota(order.begin(), order.end(), 0);
      std::set<std::string> keys;
      do {
        std::vector<int> tn, mu;
        for (int i : order) tn.push_back(g.type_node(i)), mu.push_back(g.mult(i));
        keys.insert(canonical_key(Genetree::from_parts(g.parents(), tn, mu), true));
      } while (std::next_permutation(order.begin(), order.end()));
      const double fact = std::tgamma(g.d() + 1.0);
      CHECK(static_cast<double>(keys.size()) == doctest::Approx(fact / symmetry_count(g)));
    }
  }

  TEST_CASE("class counts match exhaustive search") {
    const std::vector<std::size_t> expected{1, 2, 5, 11, 28, 67, 171, 433, 1123, 2924};
    for (int K = 1; K <= 10; ++K) CHECK(enumerate_all_genetrees(K).size() == expected[K - 1]);
    for (int K = 1; K <= 5; ++K) CHECK(brute_force_class_count(K) == expected[K - 1]);
    CHECK_THROWS_AS(enumerate_all_genetrees(25), ResourceError);
  }

  TEST_CASE("canonical keys ignore labels; unordered keys ignore type order") {
    Philox rng(11, 0);
    for (const auto& g : testutil::random_trees(40, 14, 3)) {
      // relabel sites through a random permutation
      std::vector<int> perm(g.s() + 1);
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = g.s(); i > 1; --i) std::swap(perm[i], perm[1 + rng.below(i)]);
      auto paths = g.paths();
      for (auto& p : paths)
        for (auto& v : p) v = perm[v];
      const auto h = Genetree::from_paths(paths, g.mults());
      CHECK(canonical_key(h, true) == canonical_key(g, true));
      const auto p = testutil::permute_types(g, rng);
      CHECK(canonical_key(p, false) == canonical_key(g, false));
      CHECK(canonical_key(canonicalize(p, false), false) == canonical_key(g, false));
      CHECK(canonicalize(canonicalize(g, true), true) == canonicalize(g, true));
    }
  }

  TEST_CASE("reverse events lower complexity and keep samples valid") {
    for (int K = 2; K <= 8; ++K)
      for (const auto& g : enumerate_all_genetrees(K)) {
        int z = 0;
        const auto el = eligible_types(g, &z);
        CHECK(!el.empty());
        const auto evs = enumerate_reverse_events(g);
        CHECK(!evs.empty());
        for (const auto& e : evs) {
          const auto h = apply_event(g, e);
          CHECK_NOTHROW(validate(h));
          const int drop = e.kind == ReverseEvent::Kind::Merge ? e.l : 1;
          CHECK(h.complexity() == g.complexity() - drop);
          CHECK(std::find(el.begin(), el.end(), e.type) != el.end());
        }
      }
  }

  TEST_CASE("site label tracking follows removals") {
    const auto g = fig7();
    std::vector<int> labels{0, 1, 2, 3, 4};
    // remove the singleton mutation 4 carried by... none; remove via merges then type 0's site 2
    auto h = apply_event(g, {ReverseEvent::Kind::Merge, 0, 1, -1}, labels);
    CHECK(labels.size() == 5u);
    h = apply_event(h, {ReverseEvent::Kind::RemoveKeep, 0, 0, -1}, labels);
    CHECK(labels.size() == 4u);
    CHECK(std::find(labels.begin(), labels.end(), 2) == labels.end());
    for (int v = 1; v <= h.s(); ++v) CHECK(labels[v] != 0);
  }

  TEST_CASE("nio counts the type and its singleton leaf children") {
    const auto g = Genetree::from_paths({{0}, {1, 0}, {2, 0}, {4, 3, 0}}, {2, 1, 1, 1});
    CHECK(nio(g, 0) == 3);
    CHECK(nio(g, 1) == 1);
  }

  TEST_CASE("compression realizes small samples exactly") {
    for (int K = 2; K <= 9; ++K)
      for (const auto& g : enumerate_all_genetrees(K)) {
        if (g.s() == 1) {
          CHECK(canonical_key(realize(compress_single(g, 1)), false) == canonical_key(g, false));
        }
        if (g.s() == 2) {
          for (int i = 0; i < g.d(); ++i) {
            const auto pc = compress_pair(g, 1, 2, i);
            CHECK(canonical_key(realize(pc.config), false) == canonical_key(g, false));
          }
        }
      }
    CHECK(normalize({CompressedConfig::Shape::N, 5, 2, 0}) == CompressedConfig{CompressedConfig::Shape::M1, 5, 2, 0});
    CHECK(normalize({CompressedConfig::Shape::M2, 5, 0, 0}).shape == CompressedConfig::Shape::M0);
  }
}
