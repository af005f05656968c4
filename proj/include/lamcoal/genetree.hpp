#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lamcoal {

// Ordered type configuration (t, n). Internally a rooted tree of mutations:
// node 0 is the root, node v >= 1 is the mutation with site label v, and
// type i sits at node type_node(i) with multiplicity mult(i).
class Genetree {
 public:
  Genetree();  // root sample ((0),(1))

  // Paths newest-to-root, each ending in 0.
  static Genetree from_paths(const std::vector<std::vector<int>>& paths, const std::vector<int>& mult);
  static Genetree from_parts(std::vector<int> parent, std::vector<int> type_node, std::vector<int> mult);

  int d() const { return static_cast<int>(mult_.size()); }
  int s() const { return static_cast<int>(parent_.size()) - 1; }
  int n() const { return n_; }
  int complexity() const { return n_ + s() - 1; }
  bool is_root() const { return n_ == 1 && s() == 0; }

  int mult(int i) const { return mult_[i]; }
  int type_node(int i) const { return type_node_[i]; }
  int parent(int v) const { return parent_[v]; }
  const std::vector<int>& mults() const { return mult_; }
  const std::vector<int>& type_nodes() const { return type_node_; }
  const std::vector<int>& parents() const { return parent_; }

  std::vector<int> path(int i) const;
  std::vector<std::vector<int>> paths() const;

  bool operator==(const Genetree& o) const {
    return parent_ == o.parent_ && type_node_ == o.type_node_ && mult_ == o.mult_;
  }

  // Mutating helpers used by event application and simulation.
  void set_mult(int i, int m);
  void add_mult(int i, int delta);
  int add_node(int parent);                      // returns new node label
  void move_type(int i, int node);
  void insert_type(int pos, int node, int m);
  void erase_type(int i);
  // Removes leaf node v (no children, no type); the last node is relabeled to v.
  // Returns the old label of the node that now carries label v (or -1).
  int remove_leaf_node(int v);

 private:
  std::vector<int> parent_{-1};
  std::vector<int> type_node_{0};
  std::vector<int> mult_{1};
  int n_ = 1;
};

// Derived per-state quantities shared by events, compression, and proposals.
struct TreeInfo {
  explicit TreeInfo(const Genetree& g);
  std::vector<std::vector<int>> children;  // mutation children per node
  std::vector<int> node_type;              // type at node or -1
  std::vector<int> carriers;               // d(v): samples below v (inclusive)
  std::vector<int> depth;
  bool is_ancestor(int a, int v) const;    // a on the path from v to the root (inclusive)

 private:
  std::vector<int> parent_;
};

Genetree parse_genetree(const std::string& text);
std::string serialize_genetree(const Genetree& g);
// Throws ParseError if invalid.
void validate(const Genetree& g);

std::string canonical_key(const Genetree& g, bool ordered);
// Relabel sites in canonical DFS order; with ordered=false types are also sorted.
Genetree canonicalize(const Genetree& g, bool ordered);

double symmetry_count(const Genetree& g);
double log_symmetry_count(const Genetree& g);
std::uint64_t brute_force_symmetry_count(const Genetree& g);

std::vector<int> eligible_types(const Genetree& g, int* z = nullptr);

struct ReverseEvent {
  enum class Kind { Merge, RemoveKeep, RemoveAbsorb };
  Kind kind;
  int type;
  int l;       // lineages lost by a merge; 0 for mutation removal
  int target;  // absorbing type index (original indexing) or -1
  bool operator==(const ReverseEvent&) const = default;
};

std::vector<ReverseEvent> enumerate_reverse_events(const Genetree& g);
Genetree apply_event(const Genetree& g, const ReverseEvent& e);
// Same, also tracking original site labels (site_labels[v] for current node v).
Genetree apply_event(const Genetree& g, const ReverseEvent& e, std::vector<int>& site_labels);

// Number of immediate offspring: 1 + singleton child types at leaf mutations of type i's node.
int nio(const Genetree& g, int i);

struct CompressedConfig {
  enum class Shape { M0, M1, M2, N };
  Shape shape;
  int n;
  int d1 = 0;
  int d2 = 0;
  bool operator==(const CompressedConfig&) const = default;
};
// Collapses degenerate forms (M^n_{d,0} = M^n_d, N^n_{d,0} = M^n_d, ...).
CompressedConfig normalize(CompressedConfig c);
Genetree realize(const CompressedConfig& c);

enum class PairCase { I = 1, II, III, IV, V };
struct PairCompression {
  CompressedConfig config;
  PairCase pair_case;
  int outer;  // s' after orientation
  int inner;  // s''
};

CompressedConfig compress_single(const Genetree& g, int site);
PairCompression compress_pair(const Genetree& g, int site_a, int site_b, int type);

// One representative (canonical, unordered) per class with n+s-1 = K.
void enumerate_genetrees(int K, const std::function<void(const Genetree&)>& visit);
std::vector<Genetree> enumerate_all_genetrees(int K);

}  // namespace lamcoal
