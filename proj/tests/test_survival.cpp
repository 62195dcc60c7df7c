#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cdrift/claim_graph.hpp"
#include "cdrift/stats.hpp"
#include "cdrift/survival.hpp"
#include "support/oracles.hpp"

using namespace cdrift;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

constexpr std::int64_t kDay = 86400;

ClaimCluster span_cluster(std::size_t id, std::int64_t first, std::int64_t last) {
  ClaimCluster c;
  c.claim_id = id;
  c.first_ts = first;
  c.last_ts = last;
  return c;
}

SurvivalRecord rec(double duration, bool event) {
  SurvivalRecord r;
  r.duration = duration;
  r.event = event;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lifespan construction
// ---------------------------------------------------------------------------

TEST_CASE("lifespans encode duration, censoring, and the minimum filter") {
  std::vector<ClaimCluster> clusters{
      span_cluster(0, 0, 0),            // single observation: below the minimum
      span_cluster(1, 0, 10 * kDay),    // silent for 40 days: an event
      span_cluster(2, 0, 45 * kDay),    // silent for only 5 days: censored
      span_cluster(3, 0, 20 * kDay),    // exactly 30 days of silence: an event
  };
  auto records = build_lifespans(clusters, 50 * kDay, 30, 1.0);
  REQUIRE(records.size() == 3);
  CHECK(records[0].claim_id == 1);
  CHECK(records[0].duration == 10.0);
  CHECK(records[0].event);
  CHECK_FALSE(records[1].event);
  CHECK(records[2].event);  // >= comparison at the gap boundary
}

TEST_CASE("lifespans reject a corpus end before the data ends") {
  std::vector<ClaimCluster> clusters{span_cluster(7, 0, 60 * kDay)};
  CHECK_THROWS_WITH(build_lifespans(clusters, 50 * kDay),
                    ContainsSubstring("corpus_end precedes"));
}

// ---------------------------------------------------------------------------
// Kaplan-Meier
// ---------------------------------------------------------------------------

TEST_CASE("km product-limit on the four-record fixture") {
  std::vector<SurvivalRecord> records{rec(5, true), rec(8, true), rec(12, false),
                                      rec(20, true)};
  KmCurve km = km_estimate(records);
  CHECK(km.n_records == 4);
  CHECK(km.n_events == 3);
  REQUIRE(km.points.size() == 3);  // one point per event time; censoring silent

  CHECK(km.points[0].time == 5.0);
  CHECK(km.points[0].n_risk == 4);
  CHECK_THAT(km.points[0].survival, WithinAbs(0.75, 1e-12));
  CHECK_THAT(km.points[0].variance, WithinAbs(0.046875, 1e-12));

  CHECK(km.points[1].time == 8.0);
  CHECK_THAT(km.points[1].survival, WithinAbs(0.5, 1e-12));
  CHECK_THAT(km.points[1].variance, WithinAbs(0.0625, 1e-12));

  CHECK(km.points[2].time == 20.0);
  CHECK(km.points[2].n_risk == 1);
  CHECK_THAT(km.points[2].survival, WithinAbs(0.0, 1e-12));

  CHECK(km.survival_at(4.9) == 1.0);
  CHECK_THAT(km.survival_at(5.0), WithinAbs(0.75, 1e-12));
  CHECK_THAT(km.survival_at(12.0), WithinAbs(0.5, 1e-12));

  REQUIRE(km.time_to_survival(0.8).has_value());
  CHECK(*km.time_to_survival(0.8) == 5.0);
  CHECK_FALSE(km_estimate({rec(5, false)}).time_to_survival(0.8).has_value());

  // Log-log band brackets the estimate strictly inside (0,1) at t=5.
  CHECK(km.points[0].ci_low > 0.0);
  CHECK(km.points[0].ci_low < 0.75);
  CHECK(km.points[0].ci_high > 0.75);
  CHECK(km.points[0].ci_high < 1.0);
  // Saturated tail pins the band to the estimate.
  CHECK(km.points[2].ci_low == 0.0);
  CHECK(km.points[2].ci_high == 0.0);
}

TEST_CASE("km equals the empirical survivor function when nothing censors") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SurvivalRecord> records;
    std::vector<double> times;
    std::size_t n = 10 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      double t = -std::log(oracle::uniform01(rng) + 1e-300) * 10.0 + 0.01;
      records.push_back(rec(t, true));
      times.push_back(t);
    }
    KmCurve km = km_estimate(records);
    for (int probe = 0; probe < 5; ++probe) {
      double t = 25.0 * oracle::uniform01(rng);
      CHECK_THAT(km.survival_at(t),
                 WithinAbs(oracle::empirical_survival(times, t), 1e-12));
    }
  }
}

TEST_CASE("an all-censored sample keeps survival at one") {
  std::vector<SurvivalRecord> records{rec(3, false), rec(9, false), rec(11, false)};
  KmCurve km = km_estimate(records);
  CHECK(km.points.empty());
  CHECK(km.n_events == 0);
  CHECK(km.survival_at(100.0) == 1.0);
}

TEST_CASE("km is invariant under record duplication") {
  std::vector<SurvivalRecord> records{rec(2, true),  rec(4, false), rec(6, true),
                                      rec(6, false), rec(9, true)};
  auto doubled = records;
  doubled.insert(doubled.end(), records.begin(), records.end());
  KmCurve a = km_estimate(records);
  KmCurve b = km_estimate(doubled);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].time == b.points[i].time);
    CHECK_THAT(a.points[i].survival, WithinAbs(b.points[i].survival, 1e-12));
    CHECK(b.points[i].n_risk == 2 * a.points[i].n_risk);
  }
}

TEST_CASE("km rejects an empty sample") {
  CHECK_THROWS_WITH(km_estimate({}), ContainsSubstring("at least one record"));
}

// ---------------------------------------------------------------------------
// Log-rank
// ---------------------------------------------------------------------------

TEST_CASE("log-rank on the six-record fixture") {
  std::vector<SurvivalRecord> a{rec(3, true), rec(5, true), rec(7, false)};
  std::vector<SurvivalRecord> b{rec(4, true), rec(6, true), rec(8, true)};
  LogRankResult r = log_rank(a, b);
  // O_A = 2, E_A = 26/15, V = 433/450 -> chi^2 = (4/15)^2 / (433/450) = 32/433.
  CHECK_THAT(r.chi_square, WithinAbs(32.0 / 433.0, 1e-12));
  CHECK_THAT(r.p_value, WithinAbs(chi_square_sf(32.0 / 433.0, 1), 1e-12));
  CHECK_FALSE(r.zero_event_group);

  // The naive oracle computes the same statistic.
  std::vector<oracle::SurvObs> oa{{3, true}, {5, true}, {7, false}};
  std::vector<oracle::SurvObs> ob{{4, true}, {6, true}, {8, true}};
  CHECK_THAT(r.chi_square, WithinAbs(oracle::logrank_chi2(oa, ob), 1e-12));
}

TEST_CASE("identical groups do not separate") {
  std::vector<SurvivalRecord> g{rec(1, true), rec(2, false), rec(3, true),
                                rec(5, true)};
  LogRankResult r = log_rank(g, g);
  CHECK_THAT(r.chi_square, WithinAbs(0.0, 1e-12));
  CHECK(r.p_value > 0.9);
}

TEST_CASE("a doubled time scale separates clearly") {
  std::mt19937_64 rng(23);
  std::vector<SurvivalRecord> slow, fast;
  for (int i = 0; i < 60; ++i) {
    double t = -std::log(oracle::uniform01(rng) + 1e-300) * 5.0 + 0.01;
    fast.push_back(rec(t, true));
    slow.push_back(rec(2.0 * t, true));
  }
  LogRankResult r = log_rank(slow, fast);
  CHECK(r.chi_square > 3.841);
  CHECK(r.p_value < 0.05);
}

TEST_CASE("log-rank flags empty and event-free groups") {
  std::vector<SurvivalRecord> a{rec(1, true)};
  CHECK_THROWS_WITH(log_rank(a, {}), ContainsSubstring("non-empty"));
  std::vector<SurvivalRecord> quiet{rec(2, false), rec(3, false)};
  CHECK(log_rank(a, quiet).zero_event_group);
}

// ---------------------------------------------------------------------------
// Weibull AFT
// ---------------------------------------------------------------------------

TEST_CASE("aft recovers an intercept-only weibull") {
  auto gen = [](std::mt19937_64&) { return std::vector<double>{}; };
  auto records =
      simulate_aft({std::log(100.0)}, 0.7, gen, {}, 4000, 0.0, 99);
  AftFit fit = fit_weibull_aft(records, {});
  REQUIRE(fit.scale_terms.size() == 1);
  const AftTerm& b0 = fit.scale_terms[0];
  CHECK(b0.ci_low < std::log(100.0));
  CHECK(b0.ci_high > std::log(100.0));
  CHECK_THAT(fit.rho, WithinAbs(0.7, 0.05));
  CHECK(fit.rho_ci_low < fit.rho);
  CHECK(fit.rho_ci_high > fit.rho);
  CHECK(fit.n == 4000);
  CHECK(fit.n_events == 4000);
}

TEST_CASE("aft estimates a binary time ratio with matching transforms") {
  auto gen = [](std::mt19937_64& rng) {
    return std::vector<double>{oracle::uniform01(rng) < 0.5 ? 0.0 : 1.0};
  };
  auto records = simulate_aft({5.98, 0.24}, 0.7, gen, {"treated"}, 3000, 0.2, 4242);
  AftFit fit = fit_weibull_aft(records, {"treated"});
  REQUIRE(fit.scale_terms.size() == 2);
  const AftTerm& t = fit.scale_terms[1];
  CHECK(t.name == "treated");
  CHECK_THAT(t.time_ratio, WithinAbs(std::exp(t.coef), 1e-12));
  CHECK_THAT(t.tr_ci_low, WithinAbs(std::exp(t.ci_low), 1e-12));
  CHECK_THAT(t.tr_ci_high, WithinAbs(std::exp(t.ci_high), 1e-12));
  // The planted multiplicative effect sits inside the interval.
  CHECK(t.tr_ci_low < std::exp(0.24));
  CHECK(t.tr_ci_high > std::exp(0.24));
  CHECK(t.time_ratio > 1.0);
  // Bookkeeping: AIC from the parameter count, LR test against the null.
  double params = double(fit.scale_terms.size() + fit.shape_terms.size());
  CHECK_THAT(fit.aic, WithinAbs(2.0 * params - 2.0 * fit.log_likelihood, 1e-9));
  CHECK(fit.lr_df == 1);
  CHECK(fit.lr_statistic > 0.0);
}

TEST_CASE("aft separates survivors with a strong continuous covariate") {
  auto gen = [](std::mt19937_64& rng) {
    return std::vector<double>{oracle::normal01(rng)};
  };
  auto records = simulate_aft({3.0, 1.0}, 1.2, gen, {"x"}, 2000, 0.2, 7);
  AftFit fit = fit_weibull_aft(records, {"x"});
  CHECK(fit.concordance_defined);
  CHECK(fit.concordance > 0.6);
  CHECK(fit.lr_p < 1e-6);
  CHECK_THAT(fit.scale_terms[1].coef, WithinAbs(1.0, 0.1));
}

TEST_CASE("aft names collinear columns instead of fitting them") {
  auto gen = [](std::mt19937_64& rng) {
    double x = oracle::uniform01(rng);
    return std::vector<double>{x, x};
  };
  auto records = simulate_aft({4.0, 0.5, 0.0}, 1.0, gen, {"x", "x_copy"}, 200, 0.0, 3);
  CHECK_THROWS_WITH(fit_weibull_aft(records, {"x", "x_copy"}),
                    ContainsSubstring("rank-deficient design"));
  CHECK_THROWS_WITH(fit_weibull_aft(records, {"x", "x_copy"}),
                    ContainsSubstring("x"));
}

TEST_CASE("aft rejects empty and non-positive inputs") {
  CHECK_THROWS_WITH(fit_weibull_aft({}, {}), ContainsSubstring("needs records"));
  std::vector<SurvivalRecord> bad{rec(0.0, true)};
  CHECK_THROWS_WITH(fit_weibull_aft(bad, {}),
                    ContainsSubstring("positive durations"));
}

TEST_CASE("concordance index spans its scale") {
  std::vector<SurvivalRecord> records{rec(1, true), rec(2, true), rec(3, true),
                                      rec(4, true)};
  auto c = concordance_index({1.0, 2.0, 3.0, 4.0}, records);
  REQUIRE(c.has_value());
  CHECK(*c == 1.0);  // longer prediction, longer life: fully concordant
  CHECK(*concordance_index({4.0, 3.0, 2.0, 1.0}, records) == 0.0);
  CHECK(*concordance_index({5.0, 5.0, 5.0, 5.0}, records) == 0.5);

  std::vector<SurvivalRecord> censored{rec(1, false), rec(2, false)};
  CHECK_FALSE(concordance_index({1.0, 2.0}, censored).has_value());

  std::mt19937_64 rng(31);
  std::vector<SurvivalRecord> many;
  std::vector<double> noise;
  for (int i = 0; i < 400; ++i) {
    many.push_back(rec(oracle::uniform01(rng) + 0.01, true));
    noise.push_back(oracle::uniform01(rng));
  }
  CHECK_THAT(*concordance_index(noise, many), WithinAbs(0.5, 0.06));
}

TEST_CASE("analytic gradient matches central differences") {
  auto gen = [](std::mt19937_64& rng) {
    return std::vector<double>{oracle::normal01(rng), oracle::uniform01(rng)};
  };
  auto records = simulate_aft({3.5, 0.4, -0.3}, 0.9, gen, {"a", "b"}, 40, 0.3, 11);
  std::vector<std::string> names{"a", "b"};

  std::mt19937_64 rng(5);
  for (int point = 0; point < 5; ++point) {
    std::vector<double> beta{3.5 + oracle::normal01(rng) * 0.5,
                             oracle::normal01(rng) * 0.5,
                             oracle::normal01(rng) * 0.5};
    double log_rho = oracle::normal01(rng) * 0.3;
    auto grad = aft_gradient(records, names, beta, log_rho);
    REQUIRE(grad.size() == 4);

    auto eval = [&](std::vector<double> b, double lr) {
      return aft_log_likelihood(records, names, b, lr);
    };
    for (std::size_t j = 0; j < 4; ++j) {
      double h = 1e-5;
      double up, down;
      if (j < 3) {
        auto bu = beta, bd = beta;
        bu[j] += h;
        bd[j] -= h;
        up = eval(bu, log_rho);
        down = eval(bd, log_rho);
      } else {
        up = eval(beta, log_rho + h);
        down = eval(beta, log_rho - h);
      }
      double numeric = (up - down) / (2.0 * h);
      double scale = std::max(1.0, std::abs(numeric));
      CHECK_THAT(grad[j], WithinAbs(numeric, 1e-5 * scale));
    }
  }
}

// ---------------------------------------------------------------------------
// VIF
// ---------------------------------------------------------------------------

TEST_CASE("orthogonal columns carry unit vif") {
  Eigen::MatrixXd design(4, 2);
  design << 1, 1, 1, -1, -1, 1, -1, -1;  // centered and mutually orthogonal
  auto entries = vif(design, {"u", "v"});
  REQUIRE(entries.size() == 2);
  for (const auto& e : entries) {
    CHECK_FALSE(e.infinite);
    CHECK_THAT(e.vif, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("a duplicated column is flagged infinite") {
  std::mt19937_64 rng(13);
  Eigen::MatrixXd design(20, 2);
  for (int i = 0; i < 20; ++i) {
    design(i, 0) = oracle::normal01(rng);
    design(i, 1) = design(i, 0);
  }
  auto entries = vif(design, {"x", "x_copy"});
  CHECK(entries[0].infinite);
  CHECK(entries[1].infinite);
}

TEST_CASE("vif agrees with the direct r-squared oracle") {
  std::mt19937_64 rng(41);
  Eigen::MatrixXd design(60, 3);
  for (int i = 0; i < 60; ++i) {
    double base = oracle::normal01(rng);
    design(i, 0) = base;
    design(i, 1) = 0.8 * base + 0.6 * oracle::normal01(rng);
    design(i, 2) = oracle::normal01(rng);
  }
  auto entries = vif(design, {"a", "b", "c"});
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd others(60, 2);
    int col = 0;
    for (int k = 0; k < 3; ++k)
      if (k != j) others.col(col++) = design.col(k);
    double r2 = oracle::r_squared(others, design.col(j));
    CHECK_FALSE(entries[j].infinite);
    CHECK_THAT(entries[j].vif, WithinAbs(1.0 / (1.0 - r2), 1e-9));
  }
}

TEST_CASE("record-based vif requires every covariate") {
  SurvivalRecord r = rec(2.0, true);
  r.covariates["x"] = 1.0;
  CHECK_THROWS_WITH(vif(std::vector<SurvivalRecord>{r}, {"x", "missing"}),
                    ContainsSubstring("missing covariate missing"));
}

// ---------------------------------------------------------------------------
// Simulation oracle
// ---------------------------------------------------------------------------

TEST_CASE("simulated exponential lifetimes hit their mean") {
  auto gen = [](std::mt19937_64&) { return std::vector<double>{}; };
  auto records = simulate_aft({std::log(100.0)}, 1.0, gen, {}, 50000, 0.0, 8);
  double sum = 0.0;
  for (const auto& r : records) {
    CHECK(r.event);  // censor_rate 0 leaves everything observed
    sum += r.duration;
  }
  double mean = sum / double(records.size());
  CHECK(std::abs(mean - 100.0) / 100.0 < 0.05);
}

TEST_CASE("rho below one yields a decreasing hazard") {
  auto gen = [](std::mt19937_64&) { return std::vector<double>{}; };
  auto records = simulate_aft({std::log(50.0)}, 0.7, gen, {}, 50000, 0.0, 9);
  std::vector<double> times;
  for (const auto& r : records) times.push_back(r.duration);
  std::sort(times.begin(), times.end());
  double median = times[times.size() / 2];
  // Conditional survival past another median-length stretch beats 0.5:
  // survivors age into ever-lower hazard.
  double s1 = oracle::empirical_survival(times, median);
  double s2 = oracle::empirical_survival(times, 2.0 * median);
  CHECK(s2 / s1 > 0.55);
}

TEST_CASE("the censoring scale hits the requested rate exactly in expectation") {
  auto gen = [](std::mt19937_64&) { return std::vector<double>{}; };
  auto records = simulate_aft({std::log(30.0)}, 0.7, gen, {}, 50000, 0.2, 10);
  std::size_t events = 0;
  for (const auto& r : records) events += r.event ? 1 : 0;
  double event_rate = double(events) / double(records.size());
  CHECK(std::abs(event_rate - 0.8) < 0.01);
}

TEST_CASE("simulate_aft validates its parameters") {
  auto gen = [](std::mt19937_64&) { return std::vector<double>{}; };
  CHECK_THROWS_WITH(simulate_aft({1.0}, 0.0, gen, {}, 10, 0.0, 1),
                    ContainsSubstring("rho > 0"));
  CHECK_THROWS_WITH(simulate_aft({1.0}, 1.0, gen, {}, 10, 1.0, 1),
                    ContainsSubstring("censor_rate"));
  auto bad_gen = [](std::mt19937_64&) { return std::vector<double>{1.0, 2.0}; };
  CHECK_THROWS_WITH(simulate_aft({1.0}, 1.0, bad_gen, {"a", "b"}, 10, 0.0, 1),
                    ContainsSubstring("arity"));
}
