#include <unordered_set>

#include "lamcoal/errors.hpp"
#include "lamcoal/genetree.hpp"

namespace lamcoal {

namespace {

// All states reachable by one forward step that adds one to the complexity.
template <class F>
void forward_moves(const Genetree& g, F&& emit) {
  for (int i = 0; i < g.d(); ++i) {
    Genetree h = g;
    h.add_mult(i, 1);
    emit(h);
  }
  if (g.n() < 2) return;
  for (int i = 0; i < g.d(); ++i) {
    Genetree h = g;
    const int w = h.add_node(g.type_node(i));
    if (g.mult(i) == 1) {
      h.move_type(i, w);
    } else {
      h.add_mult(i, -1);
      h.insert_type(h.d(), w, 1);
    }
    emit(h);
  }
}

}  // namespace

void enumerate_genetrees(int K, const std::function<void(const Genetree&)>& visit) {
  if (K < 1) throw ArgumentError("complexity must be >= 1");
  if (K > 24) throw ResourceError("enumeration beyond complexity 24 exceeds the memory guard");
  std::vector<Genetree> level{Genetree()};
  for (int k = 1; k <= K; ++k) {
    std::unordered_set<std::string> seen;
    std::vector<Genetree> next;
    for (const auto& g : level) {
      forward_moves(g, [&](const Genetree& h) {
        if (seen.insert(canonical_key(h, false)).second) {
          Genetree c = canonicalize(h, false);
          if (k == K)
            visit(c);
          else
            next.push_back(std::move(c));
        }
      });
    }
    level = std::move(next);
  }
}

std::vector<Genetree> enumerate_all_genetrees(int K) {
  std::vector<Genetree> out;
  enumerate_genetrees(K, [&](const Genetree& g) { out.push_back(g); });
  return out;
}

}  // namespace lamcoal
