#include "lamcoal/genetree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "lamcoal/errors.hpp"

namespace lamcoal {

Genetree::Genetree() = default;

Genetree Genetree::from_parts(std::vector<int> parent, std::vector<int> type_node, std::vector<int> mult) {
  Genetree g;
  g.parent_ = std::move(parent);
  g.type_node_ = std::move(type_node);
  g.mult_ = std::move(mult);
  g.n_ = 0;
  for (int m : g.mult_) g.n_ += m;
  validate(g);
  return g;
}

Genetree Genetree::from_paths(const std::vector<std::vector<int>>& paths, const std::vector<int>& mult) {
  if (paths.empty()) throw ParseError("sample has no types");
  if (paths.size() != mult.size()) throw ParseError("paths and multiplicities differ in length");
  std::map<int, int> label_parent;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    if (p.empty() || p.back() != 0) throw ParseError("type " + std::to_string(i + 1) + " path must end at 0");
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (p[j] <= 0) throw ParseError("site labels must be positive");
      auto [it, fresh] = label_parent.emplace(p[j], p[j + 1]);
      if (!fresh && it->second != p[j + 1])
        throw ParseError("site " + std::to_string(p[j]) + " has inconsistent ancestry");
    }
  }
  std::map<int, int> relabel{{0, 0}};
  int next = 1;
  for (auto& [lab, par] : label_parent) relabel[lab] = next++;
  std::vector<int> parent(next, -1);
  for (auto& [lab, par] : label_parent) parent[relabel[lab]] = relabel.at(par);
  std::vector<int> type_node;
  for (auto& p : paths) type_node.push_back(relabel[p.front()]);
  return from_parts(std::move(parent), std::move(type_node), mult);
}

std::vector<int> Genetree::path(int i) const {
  std::vector<int> out;
  for (int v = type_node_[i]; v != -1; v = parent_[v]) out.push_back(v);
  return out;
}

std::vector<std::vector<int>> Genetree::paths() const {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < d(); ++i) out.push_back(path(i));
  return out;
}

void Genetree::set_mult(int i, int m) {
  n_ += m - mult_[i];
  mult_[i] = m;
}

void Genetree::add_mult(int i, int delta) {
  mult_[i] += delta;
  n_ += delta;
}

int Genetree::add_node(int parent) {
  parent_.push_back(parent);
  return static_cast<int>(parent_.size()) - 1;
}

void Genetree::move_type(int i, int node) { type_node_[i] = node; }

void Genetree::insert_type(int pos, int node, int m) {
  type_node_.insert(type_node_.begin() + pos, node);
  mult_.insert(mult_.begin() + pos, m);
  n_ += m;
}

void Genetree::erase_type(int i) {
  n_ -= mult_[i];
  type_node_.erase(type_node_.begin() + i);
  mult_.erase(mult_.begin() + i);
}

int Genetree::remove_leaf_node(int v) {
  const int last = s();
  int moved = -1;
  if (v != last) {
    parent_[v] = parent_[last];
    for (auto& p : parent_)
      if (p == last) p = v;
    for (auto& t : type_node_)
      if (t == last) t = v;
    moved = last;
  }
  parent_.pop_back();
  return moved;
}

TreeInfo::TreeInfo(const Genetree& g) {
  const int s = g.s();
  children.assign(s + 1, {});
  node_type.assign(s + 1, -1);
  carriers.assign(s + 1, 0);
  depth.assign(s + 1, -1);
  for (int v = 1; v <= s; ++v) children[g.parent(v)].push_back(v);
  for (int i = 0; i < g.d(); ++i) {
    node_type[g.type_node(i)] = i;
    for (int v = g.type_node(i); v != -1; v = g.parent(v)) carriers[v] += g.mult(i);
  }
  depth[0] = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int c : children[v]) {
      depth[c] = depth[v] + 1;
      stack.push_back(c);
    }
  }
  parent_ = g.parents();
}

bool TreeInfo::is_ancestor(int a, int v) const {
  while (v != -1 && depth[v] > depth[a]) v = parent_[v];
  return v == a;
}

void validate(const Genetree& g) {
  const int s = g.s();
  if (g.d() < 1) throw ParseError("sample has no types");
  if (g.parents().empty() || g.parent(0) != -1) throw ParseError("node 0 must be the root");
  for (int v = 1; v <= s; ++v)
    if (g.parent(v) < 0 || g.parent(v) > s || g.parent(v) == v) throw ParseError("bad parent link");
  for (int i = 0; i < g.d(); ++i) {
    if (g.mult(i) < 1) throw ParseError("multiplicities must be positive");
    if (g.type_node(i) < 0 || g.type_node(i) > s) throw ParseError("type node out of range");
  }
  std::vector<int> seen(s + 1, -1);
  for (int i = 0; i < g.d(); ++i) {
    if (seen[g.type_node(i)] >= 0) throw ParseError("duplicate type rows");
    seen[g.type_node(i)] = i;
  }
  // acyclic and rooted
  for (int v = 1; v <= s; ++v) {
    int u = v, steps = 0;
    while (u != 0) {
      u = g.parent(u);
      if (++steps > s) throw ParseError("mutation ancestry contains a cycle");
    }
  }
  TreeInfo info(g);
  for (int v = 1; v <= s; ++v) {
    if (info.carriers[v] == 0) throw ParseError("site " + std::to_string(v) + " carried by no type");
    if (info.carriers[v] == g.n()) throw ParseError("site " + std::to_string(v) + " is not segregating");
  }
}

// ---------------------------------------------------------------- text I/O

Genetree parse_genetree(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::vector<int>> paths;
  std::vector<int> mult;
  std::vector<int> line_of;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("expected '<multiplicity>: <sites> 0'", lineno);
    std::istringstream head(line.substr(0, colon));
    long m;
    std::string extra;
    if (!(head >> m) || (head >> extra) || m < 1) throw ParseError("bad multiplicity", lineno);
    std::istringstream body(line.substr(colon + 1));
    std::vector<int> path;
    std::string tok;
    while (body >> tok) {
      try {
        std::size_t pos;
        long v = std::stol(tok, &pos);
        if (pos != tok.size() || v < 0) throw 0;
        path.push_back(static_cast<int>(v));
      } catch (...) {
        throw ParseError("bad site label '" + tok + "'", lineno);
      }
    }
    if (path.empty() || path.back() != 0) throw ParseError("path must end at root 0", lineno);
    for (std::size_t j = 0; j + 1 < path.size(); ++j)
      if (path[j] == 0) throw ParseError("root label 0 only allowed at path end", lineno);
    std::vector<int> sorted(path);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ParseError("repeated site within a path", lineno);
    for (std::size_t k = 0; k < paths.size(); ++k)
      if (paths[k] == path) throw ParseError("duplicate type row (also line " + std::to_string(line_of[k]) + ")", lineno);
    paths.push_back(std::move(path));
    mult.push_back(static_cast<int>(m));
    line_of.push_back(lineno);
  }
  if (paths.empty()) throw ParseError("no data lines");
  return Genetree::from_paths(paths, mult);
}

std::string serialize_genetree(const Genetree& g) {
  std::ostringstream out;
  for (int i = 0; i < g.d(); ++i) {
    out << g.mult(i) << ":";
    for (int v : g.path(i)) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- canonical forms

namespace {

void put16(std::string& s, int v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

struct Encoder {
  const Genetree& g;
  const TreeInfo& info;
  bool ordered;

  int label(int v) const {
    const int t = info.node_type[v];
    if (t < 0) return 0;
    return ordered ? t + 1 : g.mult(t);
  }

  std::string encode(int v, std::vector<int>* order = nullptr) const {
    std::vector<std::pair<std::string, int>> kids;
    kids.reserve(info.children[v].size());
    for (int c : info.children[v]) kids.emplace_back(encode(c), c);
    std::sort(kids.begin(), kids.end());
    std::string s;
    put16(s, label(v));
    put16(s, static_cast<int>(kids.size()));
    for (auto& k : kids) s += k.first;
    if (order) {
      order->push_back(v);
      for (auto& k : kids) encode_order(k.second, *order);
    }
    return s;
  }

  void encode_order(int v, std::vector<int>& order) const { encode(v, &order); }
};

}  // namespace

std::string canonical_key(const Genetree& g, bool ordered) {
  TreeInfo info(g);
  Encoder enc{g, info, ordered};
  std::string key = enc.encode(0);
  if (ordered) {
    key.push_back('|');
    for (int m : g.mults()) put16(key, m);
  }
  return key;
}

Genetree canonicalize(const Genetree& g, bool ordered) {
  TreeInfo info(g);
  Encoder enc{g, info, ordered};
  std::vector<int> order;
  enc.encode(0, &order);
  std::vector<int> newlab(g.s() + 1);
  for (std::size_t k = 0; k < order.size(); ++k) newlab[order[k]] = static_cast<int>(k);
  std::vector<int> parent(g.s() + 1, -1);
  for (int v = 1; v <= g.s(); ++v) parent[newlab[v]] = newlab[g.parent(v)];
  std::vector<int> tn, mu;
  if (ordered) {
    for (int i = 0; i < g.d(); ++i) {
      tn.push_back(newlab[g.type_node(i)]);
      mu.push_back(g.mult(i));
    }
  } else {
    for (int v : order)
      if (info.node_type[v] >= 0) {
        tn.push_back(newlab[v]);
        mu.push_back(g.mult(info.node_type[v]));
      }
  }
  Genetree out = Genetree::from_parts(std::move(parent), std::move(tn), std::move(mu));
  return out;
}

// ---------------------------------------------------------------- symmetry

namespace {

double sym_rec(const Encoder& enc, int v, std::string* code) {
  std::vector<std::pair<std::string, double>> kids;
  for (int c : enc.info.children[v]) {
    std::string sub;
    double cc = sym_rec(enc, c, &sub);
    kids.emplace_back(std::move(sub), cc);
  }
  std::sort(kids.begin(), kids.end(), [](auto& a, auto& b) { return a.first < b.first; });
  double c = 1;
  for (std::size_t i = 0; i < kids.size();) {
    std::size_t j = i;
    while (j < kids.size() && kids[j].first == kids[i].first) ++j;
    for (std::size_t k = i; k < j; ++k) c *= kids[k].second * static_cast<double>(k - i + 1);
    i = j;
  }
  if (code) {
    code->clear();
    put16(*code, enc.label(v));
    put16(*code, static_cast<int>(kids.size()));
    for (auto& k : kids) *code += k.first;
  }
  return c;
}

}  // namespace

double symmetry_count(const Genetree& g) {
  TreeInfo info(g);
  Encoder enc{g, info, false};
  return sym_rec(enc, 0, nullptr);
}

double log_symmetry_count(const Genetree& g) { return std::log(symmetry_count(g)); }

std::uint64_t brute_force_symmetry_count(const Genetree& g) {
  const int d = g.d();
  if (d > 8) throw ResourceError("brute-force symmetry count limited to d <= 8");
  auto x = g.paths();
  std::vector<int> sigma(d);
  for (int i = 0; i < d; ++i) sigma[i] = i;
  std::uint64_t count = 0;
  do {
    bool ok = true;
    for (int i = 0; i < d && ok; ++i)
      if (g.mult(sigma[i]) != g.mult(i) || x[sigma[i]].size() != x[i].size()) ok = false;
    std::map<int, int> zeta, inv;
    for (int i = 0; i < d && ok; ++i) {
      for (std::size_t j = 0; j < x[i].size() && ok; ++j) {
        const int from = x[sigma[i]][j], to = x[i][j];
        auto [a, fa] = zeta.emplace(from, to);
        auto [b, fb] = inv.emplace(to, from);
        if (a->second != to || b->second != from) ok = false;
      }
    }
    if (ok) ++count;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return count;
}

// ---------------------------------------------------------------- events

std::vector<int> eligible_types(const Genetree& g, int* z) {
  TreeInfo info(g);
  std::vector<int> out;
  int total = 0;
  for (int i = 0; i < g.d(); ++i) {
    const int v = g.type_node(i);
    if (g.mult(i) >= 2 || (g.mult(i) == 1 && v != 0 && info.children[v].empty())) {
      out.push_back(i);
      total += g.mult(i);
    }
  }
  if (z) *z = total;
  return out;
}

std::vector<ReverseEvent> enumerate_reverse_events(const Genetree& g) {
  std::vector<ReverseEvent> out;
  if (g.is_root()) return out;
  TreeInfo info(g);
  for (int i = 0; i < g.d(); ++i)
    for (int l = 1; l < g.mult(i); ++l) out.push_back({ReverseEvent::Kind::Merge, i, l, -1});
  for (int i = 0; i < g.d(); ++i) {
    const int v = g.type_node(i);
    if (g.mult(i) != 1 || v == 0 || !info.children[v].empty()) continue;
    const int j = info.node_type[g.parent(v)];
    if (j >= 0)
      out.push_back({ReverseEvent::Kind::RemoveAbsorb, i, 0, j});
    else
      out.push_back({ReverseEvent::Kind::RemoveKeep, i, 0, -1});
  }
  return out;
}

namespace {

Genetree apply_impl(const Genetree& g, const ReverseEvent& e, std::vector<int>* labels) {
  Genetree h = g;
  int removed = -1;
  switch (e.kind) {
    case ReverseEvent::Kind::Merge:
      h.add_mult(e.type, -e.l);
      return h;
    case ReverseEvent::Kind::RemoveKeep:
      removed = h.type_node(e.type);
      h.move_type(e.type, h.parent(removed));
      break;
    case ReverseEvent::Kind::RemoveAbsorb:
      removed = h.type_node(e.type);
      h.add_mult(e.target, 1);
      h.erase_type(e.type);
      break;
  }
  const int moved = h.remove_leaf_node(removed);
  if (labels) {
    if (moved >= 0) (*labels)[removed] = (*labels)[moved];
    labels->pop_back();
  }
  return h;
}

}  // namespace

Genetree apply_event(const Genetree& g, const ReverseEvent& e) { return apply_impl(g, e, nullptr); }

Genetree apply_event(const Genetree& g, const ReverseEvent& e, std::vector<int>& site_labels) {
  return apply_impl(g, e, &site_labels);
}

int nio(const Genetree& g, int i) {
  TreeInfo info(g);
  int count = 1;
  for (int c : info.children[g.type_node(i)]) {
    const int k = info.node_type[c];
    if (k >= 0 && g.mult(k) == 1 && info.children[c].empty()) ++count;
  }
  return count;
}

// ---------------------------------------------------------------- compression

CompressedConfig normalize(CompressedConfig c) {
  using S = CompressedConfig::Shape;
  if (c.shape == S::N && c.d2 == 0) c = {S::M1, c.n, c.d1, 0};
  if (c.shape == S::M2) {
    if (c.d1 == 0) std::swap(c.d1, c.d2);
    if (c.d2 == 0) c = {S::M1, c.n, c.d1, 0};
  }
  if (c.shape == S::M1 && c.d1 == 0) c = {S::M0, c.n, 0, 0};
  return c;
}

Genetree realize(const CompressedConfig& raw) {
  using S = CompressedConfig::Shape;
  const CompressedConfig c = normalize(raw);
  std::vector<int> parent{-1}, tn, mu;
  auto add = [&](int node, int m) {
    if (m > 0) {
      tn.push_back(node);
      mu.push_back(m);
    }
  };
  switch (c.shape) {
    case S::M0:
      add(0, c.n);
      break;
    case S::M1:
      parent.push_back(0);
      add(0, c.n - c.d1);
      add(1, c.d1);
      break;
    case S::M2:
      parent.push_back(0);
      parent.push_back(0);
      add(0, c.n - c.d1 - c.d2);
      add(1, c.d1);
      add(2, c.d2);
      break;
    case S::N:
      parent.push_back(0);
      parent.push_back(1);
      add(0, c.n - c.d1);
      add(1, c.d1 - c.d2);
      add(2, c.d2);
      break;
  }
  Genetree g;
  g = Genetree::from_parts(std::move(parent), std::move(tn), std::move(mu));
  return g;
}

CompressedConfig compress_single(const Genetree& g, int site) {
  if (site < 1 || site > g.s()) throw ArgumentError("site out of range");
  TreeInfo info(g);
  return normalize({CompressedConfig::Shape::M1, g.n(), info.carriers[site], 0});
}

PairCompression compress_pair(const Genetree& g, int a, int b, int type) {
  if (a < 1 || a > g.s() || b < 1 || b > g.s() || a == b) throw ArgumentError("invalid site pair");
  if (type < 0 || type >= g.d()) throw ArgumentError("invalid type");
  TreeInfo info(g);
  const int v = g.type_node(type);
  const int n = g.n();
  if (info.is_ancestor(a, b) || info.is_ancestor(b, a)) {
    const int outer = info.is_ancestor(a, b) ? a : b;
    const int inner = outer == a ? b : a;
    PairCase pc = info.is_ancestor(inner, v) ? PairCase::I : info.is_ancestor(outer, v) ? PairCase::II : PairCase::IV;
    return {{CompressedConfig::Shape::N, n, info.carriers[outer], info.carriers[inner]}, pc, outer, inner};
  }
  int outer = std::min(a, b), inner = std::max(a, b);
  PairCase pc = PairCase::V;
  if (info.is_ancestor(a, v)) {
    outer = a, inner = b, pc = PairCase::III;
  } else if (info.is_ancestor(b, v)) {
    outer = b, inner = a, pc = PairCase::III;
  }
  return {{CompressedConfig::Shape::M2, n, info.carriers[outer], info.carriers[inner]}, pc, outer, inner};
}

}  // namespace lamcoal
