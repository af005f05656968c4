#pragma once
#include <memory>
#include <string>
#include <vector>

namespace lamcoal {

// Finite measure on [0,1] with unit mass driving the coalescent.
class LambdaModel {
 public:
  enum class Kind { Kingman, Beta, PointMass, Mixture };

  static LambdaModel kingman();
  static LambdaModel beta(double alpha);   // Beta(2-alpha, alpha); alpha = 2 is Kingman
  static LambdaModel point_mass(double x); // x = 0 is Kingman
  static LambdaModel mixture(std::vector<std::pair<double, LambdaModel>> parts);
  // kingman | beta:<a> | point:<x> | mix:<w>*<m>+<w>*<m>...
  static LambdaModel parse(const std::string& text);

  Kind kind() const { return kind_; }
  double param() const { return param_; }
  const std::vector<std::pair<double, LambdaModel>>& parts() const { return parts_; }
  std::string to_string() const;

  // lambda_{b,k} = int x^{k-2} (1-x)^{b-k} Lambda(dx)
  double rate(int b, int k) const;

 private:
  Kind kind_ = Kind::Kingman;
  double param_ = 0;
  std::vector<std::pair<double, LambdaModel>> parts_;
};

double lambda_rate(const LambdaModel& model, int b, int k);

// Merger rates and block-counting jump rates for sizes up to n_max.
class RateTable {
 public:
  RateTable(const LambdaModel& model, int n_max);

  const LambdaModel& model() const { return model_; }
  int n_max() const { return n_max_; }
  double lambda(int b, int k) const { return lambda_[b][k]; }
  // q_{ij}, 1 <= j < i: rate of jumping from i blocks to j blocks
  double q(int i, int j) const { return q_[i][j]; }
  // -q_{ii}
  double total(int i) const { return total_[i]; }
  double p_jump(int i, int j) const { return q_[i][j] / total_[i]; }
  double binom(int n, int k) const { return binom_[n][k]; }

 private:
  LambdaModel model_;
  int n_max_;
  std::vector<std::vector<double>> lambda_, q_, binom_;
  std::vector<double> total_;
};

RateTable build_rate_table(const LambdaModel& model, int n_max);

// Green function of the block-counting process and the time-reversed chain started at n.
class GreenTable {
 public:
  GreenTable(std::shared_ptr<const RateTable> rates, int n);

  int n() const { return n_; }
  // g(a,m): expected time at level m when started from a, for 2 <= m <= a <= n
  double g(int a, int m) const { return g_[a][m]; }
  // reversed jump rate from j up to i, j < i <= n (j = 1 gives the start)
  double reversed_rate(int j, int i) const;
  double reversed_total(int j) const { return rates_->total(j); }
  // Pr(start at k) = g(n,k) q_{k1}
  double start_prob(int k) const { return g_[n_][k] * rates_->q(k, 1); }
  const RateTable& rates() const { return *rates_; }

 private:
  std::shared_ptr<const RateTable> rates_;
  int n_;
  std::vector<std::vector<double>> g_;
};

GreenTable green_table(const LambdaModel& model, int n);

// g(n1,l)/g(n2,l); throws NumericError when level l is unreachable from n2.
double reversed_path_ratio(const GreenTable& green, int n1, int n2, int l);

}  // namespace lamcoal
