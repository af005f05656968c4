#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "lamcoal/errors.hpp"
#include "lamcoal/estimator.hpp"

using namespace lamcoal;

namespace {
RunConfig fixed(std::uint64_t m, std::uint64_t seed = 1, unsigned workers = 1) {
  RunConfig c;
  c.seed = seed;
  c.workers = workers;
  c.stop = StopRule::fixed(m);
  return c;
}
}  // namespace

TEST_SUITE("estimator") {
  TEST_CASE("log-weight summary") {
    std::vector<double> w{std::log(1.0), std::log(2.0), std::log(3.0), std::log(6.0)};
    const auto s = summarize_log_weights(w);
    CHECK(std::exp(s.log_mean) == doctest::Approx(3.0));
    const double sd = std::sqrt((4 + 1 + 0 + 9) / 3.0);
    CHECK(s.rel_std_err == doctest::Approx(sd / 2 / 3.0));
    std::vector<double> tiny{-700.0 - std::log(2.0), -700.0};
    CHECK(summarize_log_weights(tiny).log_mean == doctest::Approx(-700 + std::log(0.75)));
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(summarize_log_weights({ninf, ninf}).log_mean == ninf);
    CHECK(summarize_log_weights({ninf, 0.0}).log_mean == doctest::Approx(std::log(0.5)));
  }

  TEST_CASE("optimal proposal has zero variance") {
    const auto model = LambdaModel::beta(1.5);
    for (const auto& g : testutil::random_trees(4, 10, 12, model, 2.0)) {
      Problem p(model, 2.0, g.n(), SchemeKind::Optimal);
      std::vector<double> lw;
      const auto e = estimate(g, p, fixed(200), &lw);
      const double exact = p.solver().p_ordered(g);
      for (double x : lw) CHECK(std::fabs(std::exp(x) / exact - 1) <= 1e-10);
      CHECK(e.rel_std_err <= 1e-10);
    }
  }

  TEST_CASE("every scheme is unbiased on small trees") {
    const auto model = LambdaModel::beta(1.2);
    const auto trees = testutil::random_trees(3, 9, 21, model, 1.0, 6);
    int inside = 0, total = 0;
    for (const auto& g : trees)
      for (auto kind : non_optimal_schemes()) {
        Problem p(model, 1.0, g.n(), kind);
        const auto e = estimate(g, p, fixed(20000, 5));
        const double exact = p.solver().p_ordered(g);
        const double est = std::exp(e.log_mean);
        inside += std::fabs(est - exact) <= 3 * e.rel_std_err * est + 1e-12 * exact;
        ++total;
      }
    CHECK(inside >= total - 1);
  }

  TEST_CASE("results do not depend on the worker count") {
    const auto g = testutil::random_trees(1, 12, 33)[0];
    Problem p(LambdaModel::kingman(), 1.0, g.n(), SchemeKind::HUW2A);
    const auto a = estimate(g, p, fixed(3000, 9, 1));
    for (unsigned w : {2u, 4u, 16u}) {
      const auto b = estimate(g, p, fixed(3000, 9, w));
      CHECK(a.log_mean == b.log_mean);
      CHECK(a.rel_std_err == b.rel_std_err);
    }
    const auto c = estimate(g, p, fixed(3000, 10, 1));
    CHECK(c.log_mean != a.log_mean);
  }

  TEST_CASE("relative-error stop grows batches by four") {
    const auto g = parse_genetree("2: 0\n1: 1 0\n1: 3 2 0\n");
    Problem p(LambdaModel::kingman(), 1.0, g.n(), SchemeKind::GT);
    RunConfig c;
    c.stop = StopRule::relative(0.005, 500);
    const auto e = estimate(g, p, c);
    CHECK(e.rel_std_err <= 0.005);
    std::uint64_t m = 500;
    while (m < e.runs) m *= 4;
    CHECK(m == e.runs);
  }

  TEST_CASE("multi-target estimates") {
    const auto model = LambdaModel::kingman();
    const auto g = testutil::random_trees(1, 10, 44)[0];
    Problem p(model, 1.0, g.n(), SchemeKind::SD);
    const auto self = estimate_multi(g, p, {{model, 1.0}}, fixed(5000, 3));
    const auto plain = estimate(g, p, fixed(5000, 3));
    CHECK(self[0].log_mean == doctest::Approx(plain.log_mean).epsilon(1e-13));
    CHECK(self[0].rel_std_err == doctest::Approx(plain.rel_std_err).epsilon(1e-10));
    const auto est = estimate_multi(g, p, {{model, 0.8}, {model, 1.0}, {model, 1.2}}, fixed(100000, 4));
    for (std::size_t k = 0; k < est.size(); ++k) {
      ExactSolver s(model, 0.8 + 0.2 * k);
      const double exact = s.p_ordered(g);
      const double e = std::exp(est[k].log_mean);
      CHECK(std::fabs(e - exact) <= 3 * est[k].rel_std_err * e);
    }
    // Kingman targets cannot follow multiple-merger steps proposed under a beta driver.
    Problem beta(LambdaModel::beta(1.0), 1.0, g.n(), SchemeKind::GT);
    const auto k = estimate_multi(g, beta, {{model, 1.0}}, fixed(2000, 4));
    CHECK(k[0].support_warning == (k[0].zero_weight_runs > 0));
    CHECK_THROWS_AS(estimate_multi(g, p, {}, fixed(10)), ArgumentError);
    RunConfig rel;
    CHECK_THROWS_AS(estimate_multi(g, p, {{model, 1.0}}, rel), ArgumentError);
  }

  TEST_CASE("boundary estimator") {
    const auto model = LambdaModel::beta(1.5);
    const double r = 0.7;
    Genetree g;
    for (const auto& t : testutil::random_trees(30, 14, 55, model, r))
      if (t.complexity() == 14) {
        g = t;
        break;
      }
    REQUIRE(g.complexity() == 14);
    Problem p(model, r, g.n(), SchemeKind::HUW1);
    const auto b = BoundarySet::complexity_at_most(8, p.solver_ptr());
    std::vector<double> lw_b, lw_p;
    const auto eb = estimate_with_boundary(g, p, b, fixed(20000, 6), &lw_b);
    const auto ep = estimate(g, p, fixed(20000, 6), &lw_p);
    const double exact = p.solver().p_ordered(g);
    const double e = std::exp(eb.log_mean);
    CHECK(std::fabs(e - exact) <= 3 * eb.rel_std_err * e);
    CHECK(eb.rel_std_err <= ep.rel_std_err);
  }

  TEST_CASE("conditional functionals") {
    for (double r : {0.5, 1.0, 2.0}) {
      const auto g = parse_genetree("2: 0\n");
      Problem p(LambdaModel::kingman(), r, 2, SchemeKind::GT);
      const auto e = estimate_functional(g, p, tmrca_mean(), fixed(100000, 2));
      CHECK(std::fabs(e.ratio - 1 / (1 + 2 * r)) <= 3 * e.ratio_std_err);
    }
    const auto g1 = parse_genetree("1: 1 0\n1: 0\n");
    Problem p(LambdaModel::beta(1.4), 1.0, 2, SchemeKind::HUW1);
    const auto t = estimate_functional(g1, p, tmrca_mean(), fixed(100000, 3));
    CHECK(std::fabs(t.ratio - 2.0 / 3) <= 3 * t.ratio_std_err);
    const auto a = estimate_functional(g1, p, mutation_age(1), fixed(100000, 3));
    CHECK(std::fabs(a.ratio - 1.0 / 3) <= 3 * a.ratio_std_err);
    const auto one = estimate_functional(g1, p, [](const TimedPath&) { return 1.0; }, fixed(1000, 3));
    CHECK(one.ratio == doctest::Approx(1.0).epsilon(1e-14));
    const auto cdf = estimate_functional(g1, p, tmrca_cdf(std::numeric_limits<double>::infinity()), fixed(1000, 3));
    CHECK(cdf.ratio == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("argument and configuration errors") {
    CHECK_THROWS_AS(Problem(LambdaModel::kingman(), 0.0, 5, SchemeKind::GT), ArgumentError);
    CHECK_THROWS_AS(Problem(LambdaModel::kingman(), -1.0, 5, SchemeKind::GT), ArgumentError);
    auto tables = std::make_shared<const CompressedTables>(LambdaModel::kingman(), 1.0, 5);
    CHECK_THROWS_AS(Problem(LambdaModel::kingman(), 2.0, 5, SchemeKind::HUW1, tables), ConfigurationError);
    CHECK_THROWS_AS(Problem(LambdaModel::kingman(), 1.0, 8, SchemeKind::HUW1, tables), ConfigurationError);
    Problem p(LambdaModel::kingman(), 1.0, 3, SchemeKind::GT);
    CHECK_THROWS_AS(estimate(parse_genetree("5: 0\n"), p, fixed(10)), ArgumentError);
  }

  TEST_CASE("tv study") {
    const auto cells = tv_study(6, {0.5, 2.0}, {1.5, 2.0}, {SchemeKind::Optimal, SchemeKind::GT});
    REQUIRE(cells.size() == 8u);
    for (const auto& c : cells) {
      CHECK(c.classes == 67u);
      if (c.scheme == SchemeKind::Optimal) {
        CHECK(c.mean_tv <= 1e-14);
        CHECK(c.mean_tv_ordered <= 1e-14);
      } else {
        // direct recomputation
        const auto model = LambdaModel::beta(c.alpha);
        CompressedTables t(model, c.r, 7);
        ExactSolver s(model, c.r);
        ProposalContext ctx{t.rates_ptr(), c.r, &t, &s};
        double sum = 0;
        for (const auto& g : enumerate_all_genetrees(6)) sum += tv_distance(SchemeKind::GT, g, ctx);
        CHECK(c.mean_tv == doctest::Approx(sum / 67));
      }
    }
  }
}
