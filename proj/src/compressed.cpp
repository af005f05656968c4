#include "lamcoal/compressed.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "lamcoal/errors.hpp"

namespace lamcoal {

namespace {
constexpr std::uint32_t kMagic = 0x3154434c;  // "LCT1"
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::size_t CompressedTables::required_bytes(int n_max) {
  const std::size_t w = static_cast<std::size_t>(n_max) + 1;
  return (7 * w * w * w + 3 * w * w) * sizeof(double);
}

CompressedTables::CompressedTables(const LambdaModel& model, double r, int n_max) : r_(r), n_max_(n_max) {
  if (n_max < 2) throw ArgumentError("tables need n_max >= 2");
  if (required_bytes(n_max) > (std::size_t(8) << 30))
    throw ResourceError("compressed tables for n_max=" + std::to_string(n_max) + " need " +
                        std::to_string(required_bytes(n_max)) + " bytes");
  rates_ = std::make_shared<const RateTable>(model, n_max);
  build();
  build_masses();
}

double CompressedTables::pM2(int n, int d1, int d2) const {
  if (d1 == 0) return pM1(n, d2);
  if (d2 == 0) return pM1(n, d1);
  return m2_[idx(n, d1, d2)];
}

double CompressedTables::pN(int n, int d1, int d2) const {
  if (d2 == 0) return pM1(n, d1);
  return nn_[idx(n, d1, d2)];
}

double CompressedTables::probability(const CompressedConfig& raw) const {
  const CompressedConfig c = normalize(raw);
  if (c.n > n_max_) throw ConfigurationError("tables built for n_max=" + std::to_string(n_max_));
  switch (c.shape) {
    case CompressedConfig::Shape::M0: return pM0(c.n);
    case CompressedConfig::Shape::M1: return pM1(c.n, c.d1);
    case CompressedConfig::Shape::M2: return pM2(c.n, c.d1, c.d2);
    case CompressedConfig::Shape::N: return pN(c.n, c.d1, c.d2);
  }
  return 0;
}

double CompressedTables::probability(const Genetree& g) const {
  if (g.s() > 2) throw ArgumentError("table lookup needs at most two sites");
  if (g.s() == 0) return pM0(g.n());
  TreeInfo info(g);
  if (g.s() == 1) return pM1(g.n(), info.carriers[1]);
  if (g.parent(2) == 1) return pN(g.n(), info.carriers[1], info.carriers[2]);
  if (g.parent(1) == 2) return pN(g.n(), info.carriers[2], info.carriers[1]);
  return pM2(g.n(), info.carriers[1], info.carriers[2]);
}

double CompressedTables::merge_coeff(int n, int g, int l) const {
  if (l < 1 || l >= g) return 0.0;
  const int k = l + 1;
  return rates_->binom(n, k) * rates_->lambda(n, k) * (g - l) / (n - l) / rn(n);
}

void CompressedTables::build() {
  const int N = n_max_;
  w_ = N + 1;
  m0_.assign(w_, 0.0);
  m1_.assign(std::size_t(w_) * w_, 0.0);
  m2_.assign(std::size_t(w_) * w_ * w_, 0.0);
  nn_.assign(std::size_t(w_) * w_ * w_, 0.0);
  m0_[1] = 1.0;
  for (int n = 2; n <= N; ++n) {
    const double rate_n = rn(n);
    double p = 0;
    for (int l = 1; l < n; ++l) p += merge_coeff(n, n, l) * m0_[n - l];
    m0_[n] = p;

    for (int d = 1; d < n; ++d) {
      const int a = n - d;
      double q = 0;
      for (int l = 1; l < a; ++l) q += merge_coeff(n, a, l) * pM1(n - l, d);
      for (int l = 1; l < d; ++l) q += merge_coeff(n, d, l) * pM1(n - l, d - l);
      if (d == 1) q += r_ / rate_n * (a + 1) / 2.0 * m0_[n];
      m1_[n * w_ + d] = q;
    }

    for (int d1 = 1; d1 < n; ++d1) {
      for (int d2 = 1; d1 + d2 <= n; ++d2) {
        const int a = n - d1 - d2;
        const double dx = (a > 0) + 2;
        double q = 0;
        for (int l = 1; l < a; ++l) q += merge_coeff(n, a, l) * pM2(n - l, d1, d2);
        for (int l = 1; l < d1; ++l) q += merge_coeff(n, d1, l) * pM2(n - l, d1 - l, d2);
        for (int l = 1; l < d2; ++l) q += merge_coeff(n, d2, l) * pM2(n - l, d1, d2 - l);
        const double rm = a > 0 ? r_ / rate_n * (a + 1) / dx : r_ / rate_n;
        if (d1 == 1) q += rm * pM1(n, d2);
        if (d2 == 1) q += rm * pM1(n, d1);
        m2_[idx(n, d1, d2)] = q;
      }
    }

    for (int d1 = 1; d1 < n; ++d1) {
      for (int d2 = 1; d2 <= d1; ++d2) {
        const int a = n - d1, b = d1 - d2;
        double q = 0;
        for (int l = 1; l < a; ++l) q += merge_coeff(n, a, l) * pN(n - l, d1, d2);
        for (int l = 1; l < b; ++l) q += merge_coeff(n, b, l) * pN(n - l, d1 - l, d2);
        for (int l = 1; l < d2; ++l) q += merge_coeff(n, d2, l) * pN(n - l, d1 - l, d2 - l);
        if (d2 == 1) q += (b > 0 ? r_ / rate_n * (b + 1) / 3.0 : r_ / rate_n) * pM1(n, d1);
        nn_[idx(n, d1, d2)] = q;
      }
    }
  }
}

double CompressedTables::q_m0_merge(int n, int l) const {
  if (n < 2 || n > n_max_ || l < 1 || l >= n) return 0.0;
  return merge_coeff(n, n, l) * pM0(n - l) / pM0(n);
}

double CompressedTables::q_m1_root(int n, int d, int l) const {
  if (d == 0) return q_m0_merge(n, l);
  const int a = n - d;
  if (l < 1 || l >= a) return 0.0;
  return merge_coeff(n, a, l) * pM1(n - l, d) / pM1(n, d);
}

double CompressedTables::q_m1_mut(int n, int d, int l) const {
  if (l < 1 || l >= d || d >= n) return 0.0;
  return merge_coeff(n, d, l) * pM1(n - l, d - l) / pM1(n, d);
}

double CompressedTables::q_m1_remove(int n) const {
  if (n < 2) return 0.0;
  return r_ / rn(n) * n / 2.0 * pM0(n) / pM1(n, 1);
}

double CompressedTables::q_m2_first(int n, int d1, int d2, int l) const {
  if (d2 == 0) return q_m1_mut(n, d1, l);
  if (d1 == 0) return 0.0;
  if (l < 1 || l >= d1) return 0.0;
  return merge_coeff(n, d1, l) * pM2(n - l, d1 - l, d2) / pM2(n, d1, d2);
}

double CompressedTables::q_m2_root(int n, int d1, int d2, int l) const {
  if (d1 == 0) return q_m1_root(n, d2, l);
  if (d2 == 0) return q_m1_root(n, d1, l);
  const int a = n - d1 - d2;
  if (l < 1 || l >= a) return 0.0;
  return merge_coeff(n, a, l) * pM2(n - l, d1, d2) / pM2(n, d1, d2);
}

double CompressedTables::q_m2_remove_first(int n, int d2) const {
  if (d2 == 0) return q_m1_remove(n);
  const int a = n - 1 - d2;
  if (a < 0) return 0.0;
  const double c = a > 0 ? r_ / rn(n) * (a + 1) / 3.0 : r_ / rn(n);
  return c * pM1(n, d2) / pM2(n, 1, d2);
}

double CompressedTables::q_n_inner(int n, int d1, int d2, int l) const {
  if (l < 1 || l >= d2) return 0.0;
  return merge_coeff(n, d2, l) * pN(n - l, d1 - l, d2 - l) / pN(n, d1, d2);
}

double CompressedTables::q_n_middle(int n, int d1, int d2, int l) const {
  const int b = d1 - d2;
  if (l < 1 || l >= b) return 0.0;
  return merge_coeff(n, b, l) * pN(n - l, d1 - l, d2) / pN(n, d1, d2);
}

double CompressedTables::q_n_root(int n, int d1, int d2, int l) const {
  const int a = n - d1;
  if (l < 1 || l >= a) return 0.0;
  return merge_coeff(n, a, l) * pN(n - l, d1, d2) / pN(n, d1, d2);
}

double CompressedTables::q_n_remove(int n, int d1) const {
  if (d1 < 1 || d1 >= n) return 0.0;
  const int b = d1 - 1;
  const double c = b > 0 ? r_ / rn(n) * (b + 1) / 3.0 : r_ / rn(n);
  return c * pM1(n, d1) / pN(n, d1, 1);
}

void CompressedTables::build_masses() {
  const int N = n_max_;
  const std::size_t cube = std::size_t(w_) * w_ * w_;
  m1_mut_.assign(std::size_t(w_) * w_, 0.0);
  m1_root_.assign(std::size_t(w_) * w_, 0.0);
  m2_first_.assign(cube, 0.0);
  m2_root_.assign(cube, 0.0);
  n_inner_.assign(cube, 0.0);
  n_middle_.assign(cube, 0.0);
  n_root_.assign(cube, 0.0);
  for (int n = 2; n <= N; ++n) {
    for (int d = 1; d < n; ++d) {
      double mut = d == 1 ? q_m1_remove(n) : 0.0, root = 0;
      for (int l = 1; l < d; ++l) mut += q_m1_mut(n, d, l);
      for (int l = 1; l < n - d; ++l) root += q_m1_root(n, d, l);
      m1_mut_[n * w_ + d] = mut;
      m1_root_[n * w_ + d] = root;
    }
    for (int d1 = 1; d1 < n; ++d1)
      for (int d2 = 1; d1 + d2 <= n; ++d2) {
        double first = d1 == 1 ? q_m2_remove_first(n, d2) : 0.0, root = 0;
        for (int l = 1; l < d1; ++l) first += q_m2_first(n, d1, d2, l);
        for (int l = 1; l < n - d1 - d2; ++l) root += q_m2_root(n, d1, d2, l);
        m2_first_[idx(n, d1, d2)] = first;
        m2_root_[idx(n, d1, d2)] = root;
      }
    for (int d1 = 1; d1 < n; ++d1)
      for (int d2 = 1; d2 <= d1; ++d2) {
        double inner = d2 == 1 ? q_n_remove(n, d1) : 0.0, middle = 0, root = 0;
        for (int l = 1; l < d2; ++l) inner += q_n_inner(n, d1, d2, l);
        for (int l = 1; l < d1 - d2; ++l) middle += q_n_middle(n, d1, d2, l);
        for (int l = 1; l < n - d1; ++l) root += q_n_root(n, d1, d2, l);
        n_inner_[idx(n, d1, d2)] = inner;
        n_middle_[idx(n, d1, d2)] = middle;
        n_root_[idx(n, d1, d2)] = root;
      }
  }
}

double CompressedTables::mass_m2_first(int n, int d1, int d2) const {
  if (d1 == 0) return 0.0;
  if (d2 == 0) return mass_m1_mut(n, d1);
  return m2_first_[idx(n, d1, d2)];
}

double CompressedTables::mass_m2_root(int n, int d1, int d2) const {
  if (d1 == 0) return mass_m1_root(n, d2);
  if (d2 == 0) return mass_m1_root(n, d1);
  return m2_root_[idx(n, d1, d2)];
}

double CompressedTables::mass_n_inner(int n, int d1, int d2) const {
  return d2 == 0 ? 0.0 : n_inner_[idx(n, d1, d2)];
}

double CompressedTables::mass_n_middle(int n, int d1, int d2) const {
  return d2 == 0 ? mass_m1_mut(n, d1) : n_middle_[idx(n, d1, d2)];
}

double CompressedTables::mass_n_root(int n, int d1, int d2) const {
  return d2 == 0 ? mass_m1_root(n, d1) : n_root_[idx(n, d1, d2)];
}

std::vector<OptimalStep> CompressedTables::optimal_small(const Genetree& g) const {
  const double p = probability(g);
  if (!(p > 0)) throw NumericError("state has zero probability");
  std::vector<OptimalStep> out;
  for (const auto& e : enumerate_reverse_events(g)) {
    const double c = recursion_coefficient(g, e, *rates_, r_);
    out.push_back({e, c > 0 ? c * probability(apply_event(g, e)) / p : 0.0});
  }
  return out;
}

// ---------------------------------------------------------------- cache file

namespace {

std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void CompressedTables::save(const std::string& path) const {
  std::string payload;
  auto put = [&](const void* p, std::size_t len) { payload.append(static_cast<const char*>(p), len); };
  const std::string model = rates_->model().to_string();
  const std::uint32_t mlen = static_cast<std::uint32_t>(model.size());
  put(&kMagic, 4);
  put(&kVersion, 4);
  put(&mlen, 4);
  put(model.data(), model.size());
  put(&r_, sizeof r_);
  put(&n_max_, sizeof n_max_);
  for (const auto* v : {&m0_, &m1_, &m2_, &nn_, &m1_mut_, &m1_root_, &m2_first_, &m2_root_, &n_inner_, &n_middle_, &n_root_}) {
    const std::uint64_t len = v->size();
    put(&len, 8);
    put(v->data(), len * sizeof(double));
  }
  const std::uint64_t h = fnv1a(payload.data(), payload.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write tables cache " + path);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&h), 8);
  if (!out) throw ConfigurationError("failed writing tables cache " + path);
}

std::unique_ptr<CompressedTables> CompressedTables::load(const std::string& path, const LambdaModel& model,
                                                         double r, int n_max) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return nullptr;
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 8) return nullptr;
  std::uint64_t h;
  std::memcpy(&h, data.data() + data.size() - 8, 8);
  if (fnv1a(data.data(), data.size() - 8) != h) return nullptr;
  std::size_t pos = 0;
  auto get = [&](void* p, std::size_t len) {
    if (pos + len > data.size() - 8) return false;
    std::memcpy(p, data.data() + pos, len);
    pos += len;
    return true;
  };
  std::uint32_t magic, version, mlen;
  if (!get(&magic, 4) || !get(&version, 4) || magic != kMagic || version != kVersion || !get(&mlen, 4))
    return nullptr;
  std::string mstr(mlen, '\0');
  double rr;
  int nm;
  if (!get(mstr.data(), mlen) || !get(&rr, sizeof rr) || !get(&nm, sizeof nm)) return nullptr;
  if (mstr != model.to_string() || rr != r || nm != n_max) return nullptr;
  std::unique_ptr<CompressedTables> t(new CompressedTables());
  t->r_ = r;
  t->n_max_ = n_max;
  t->w_ = n_max + 1;
  t->rates_ = std::make_shared<const RateTable>(model, n_max);
  for (auto* v : {&t->m0_, &t->m1_, &t->m2_, &t->nn_, &t->m1_mut_, &t->m1_root_, &t->m2_first_, &t->m2_root_,
                  &t->n_inner_, &t->n_middle_, &t->n_root_}) {
    std::uint64_t len;
    if (!get(&len, 8) || len > data.size()) return nullptr;
    v->resize(len);
    if (!get(v->data(), len * sizeof(double))) return nullptr;
  }
  return t;
}

}  // namespace lamcoal
