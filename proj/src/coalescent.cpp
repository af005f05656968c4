#include "lamcoal/coalescent.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "lamcoal/errors.hpp"
#include "lamcoal/kernels.hpp"

namespace lamcoal {

LambdaModel LambdaModel::kingman() { return LambdaModel{}; }

LambdaModel LambdaModel::beta(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ArgumentError("beta alpha must lie in (0,2]");
  LambdaModel m;
  if (alpha == 2.0) return m;
  m.kind_ = Kind::Beta;
  m.param_ = alpha;
  return m;
}

LambdaModel LambdaModel::point_mass(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("point mass location must lie in [0,1]");
  LambdaModel m;
  if (x == 0.0) return m;
  m.kind_ = Kind::PointMass;
  m.param_ = x;
  return m;
}

LambdaModel LambdaModel::mixture(std::vector<std::pair<double, LambdaModel>> parts) {
  if (parts.empty()) throw ArgumentError("empty mixture");
  double total = 0;
  for (auto& [w, c] : parts) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("mixture weights must be positive");
    if (c.kind() == Kind::Mixture) throw ArgumentError("nested mixtures are not supported");
    total += w;
  }
  if (parts.size() == 1) return parts[0].second;
  LambdaModel m;
  m.kind_ = Kind::Mixture;
  for (auto& [w, c] : parts) m.parts_.emplace_back(w / total, c);
  return m;
}

namespace {

double parse_number(const std::string& s, const std::string& whole) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ArgumentError("");
    return v;
  } catch (...) {
    throw ArgumentError("bad number '" + s + "' in model '" + whole + "'");
  }
}

LambdaModel parse_simple(const std::string& s, const std::string& whole) {
  if (s == "kingman") return LambdaModel::kingman();
  if (s.rfind("beta:", 0) == 0) return LambdaModel::beta(parse_number(s.substr(5), whole));
  if (s.rfind("point:", 0) == 0) return LambdaModel::point_mass(parse_number(s.substr(6), whole));
  throw ArgumentError("unknown model '" + whole + "'");
}

}  // namespace

LambdaModel LambdaModel::parse(const std::string& text) {
  if (text.rfind("mix:", 0) != 0) return parse_simple(text, text);
  std::vector<std::pair<double, LambdaModel>> parts;
  std::stringstream ss(text.substr(4));
  std::string item;
  while (std::getline(ss, item, '+')) {
    auto star = item.find('*');
    if (star == std::string::npos) throw ArgumentError("mixture component needs <w>*<model>: " + text);
    parts.emplace_back(parse_number(item.substr(0, star), text), parse_simple(item.substr(star + 1), text));
  }
  return mixture(std::move(parts));
}

std::string LambdaModel::to_string() const {
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  switch (kind_) {
    case Kind::Kingman: return "kingman";
    case Kind::Beta: return "beta:" + num(param_);
    case Kind::PointMass: return "point:" + num(param_);
    case Kind::Mixture: {
      std::string s = "mix:";
      for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (i) s += "+";
        s += num(parts_[i].first) + "*" + parts_[i].second.to_string();
      }
      return s;
    }
  }
  return "";
}

double LambdaModel::rate(int b, int k) const {
  if (b < 2 || k < 2 || k > b) throw ArgumentError("lambda_rate requires 2 <= k <= b");
  switch (kind_) {
    case Kind::Kingman: return k == 2 ? 1.0 : 0.0;
    case Kind::PointMass: return std::pow(param_, k - 2) * std::pow(1.0 - param_, b - k);
    case Kind::Beta: {
      const double a = param_;
      const double lb = std::lgamma(k - a) + std::lgamma(b - k + a) - std::lgamma(b);
      const double norm = std::lgamma(2 - a) + std::lgamma(a);
      return std::exp(lb - norm);
    }
    case Kind::Mixture: {
      double s = 0;
      for (auto& [w, c] : parts_) s += w * c.rate(b, k);
      return s;
    }
  }
  return 0;
}

double lambda_rate(const LambdaModel& model, int b, int k) { return model.rate(b, k); }

RateTable::RateTable(const LambdaModel& model, int n_max) : model_(model), n_max_(n_max) {
  if (n_max < 2) throw ArgumentError("rate table needs n_max >= 2");
  binom_.assign(n_max + 2, std::vector<double>(n_max + 2, 0.0));
  for (int n = 0; n <= n_max + 1; ++n) {
    binom_[n][0] = 1;
    for (int k = 1; k <= n; ++k) binom_[n][k] = binom_[n - 1][k - 1] + (k < n ? binom_[n - 1][k] : 0.0);
  }
  lambda_.assign(n_max + 1, std::vector<double>(n_max + 1, 0.0));
  for (int b = 2; b <= n_max; ++b)
    for (int k = 2; k <= b; ++k) lambda_[b][k] = model.rate(b, k);
  q_.assign(n_max + 1, std::vector<double>(n_max + 1, 0.0));
  total_.assign(n_max + 1, 0.0);
  for (int i = 2; i <= n_max; ++i) {
    for (int j = 1; j < i; ++j) {
      const int k = i - j + 1;
      q_[i][j] = binom_[i][k] * lambda_[i][k];
      total_[i] += q_[i][j];
    }
  }
}

RateTable build_rate_table(const LambdaModel& model, int n_max) { return RateTable(model, n_max); }

GreenTable::GreenTable(std::shared_ptr<const RateTable> rates, int n) : rates_(std::move(rates)), n_(n) {
  if (n < 2) throw ArgumentError("green table needs n >= 2");
  if (n > rates_->n_max()) throw ArgumentError("green table size exceeds rate table");
  // col[m][a] = g(a,m), contiguous in a for the dot kernel
  std::vector<std::vector<double>> col(n + 1, std::vector<double>(n + 1, 0.0));
  std::vector<double> prow(n + 1, 0.0);
  for (int a = 2; a <= n; ++a) {
    const double tot = rates_->total(a);
    for (int k = 1; k < a; ++k) prow[k] = rates_->q(a, k) / tot;
    col[a][a] = 1.0 / tot;
    for (int m = 2; m < a; ++m)
      col[m][a] = kernels::dot(std::span<const double>(prow.data() + m, a - m),
                               std::span<const double>(col[m].data() + m, a - m));
  }
  g_.assign(n + 1, std::vector<double>(n + 1, 0.0));
  for (int a = 2; a <= n; ++a)
    for (int m = 2; m <= a; ++m) g_[a][m] = col[m][a];
}

double GreenTable::reversed_rate(int j, int i) const {
  if (j < 2 || i <= j || i > n_) throw ArgumentError("reversed_rate requires 2 <= j < i <= n");
  const double gj = g_[n_][j];
  if (gj == 0.0) return 0.0;
  return g_[n_][i] / gj * rates_->q(i, j);
}

GreenTable green_table(const LambdaModel& model, int n) {
  return GreenTable(std::make_shared<const RateTable>(model, std::max(n, 2)), n);
}

double reversed_path_ratio(const GreenTable& green, int n1, int n2, int l) {
  if (!(2 <= l && l <= n1 && n1 <= n2 && n2 <= green.n()))
    throw ArgumentError("reversed_path_ratio requires 2 <= l <= n1 <= n2 <= n");
  const double denom = green.g(n2, l);
  if (denom == 0.0)
    throw NumericError("level " + std::to_string(l) + " unreachable from " + std::to_string(n2));
  return green.g(n1, l) / denom;
}

}  // namespace lamcoal
