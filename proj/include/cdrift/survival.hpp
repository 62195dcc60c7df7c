// Survival machinery: lifespan construction with right censoring,
// Kaplan-Meier product-limit estimation (Greenwood variance, log-log bands),
// the two-group log-rank test, a Weibull accelerated-failure-time fitter
// (Newton ascent on the censored log-likelihood with analytic gradient and
// Hessian), concordance, VIF diagnostics, and a simulation oracle.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <cdrift/claim_graph.hpp>
#include <cdrift/common.hpp>
#include <cdrift/stats.hpp>

namespace cdrift {

inline constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

struct SurvivalRecord {
  std::size_t claim_id = 0;
  double duration = 0.0;  // days
  bool event = false;     // true = died; false = right-censored
  std::map<std::string, double> covariates;
};

// duration = (last - first) in days. A claim counts as dead only when the
// corpus demonstrably outlives it by gap_days; otherwise it is
// right-censored (its silence may simply not have lasted long enough yet).
// Claims shorter than min_lifespan_days are dropped.
inline std::vector<SurvivalRecord> build_lifespans(
    const std::vector<ClaimCluster>& clusters, std::int64_t corpus_end,
    std::int64_t gap_days = 30, double min_lifespan_days = 1.0) {
  std::vector<SurvivalRecord> records;
  records.reserve(clusters.size());
  for (const auto& c : clusters) {
    if (c.last_ts > corpus_end)
      throw Error("corpus_end precedes the last post of claim " +
                  std::to_string(c.claim_id));
    double duration = static_cast<double>(c.last_ts - c.first_ts) / 86400.0;
    if (duration < min_lifespan_days) continue;
    SurvivalRecord r;
    r.claim_id = c.claim_id;
    r.duration = duration;
    r.event = (corpus_end - c.last_ts) >= gap_days * 86400;
    records.push_back(std::move(r));
  }
  return records;
}

struct KmPoint {
  double time = 0.0;
  std::size_t n_risk = 0;
  std::size_t n_event = 0;
  double survival = 1.0;
  double variance = 0.0;  // Greenwood
  double ci_low = 1.0;    // log-log 95% band
  double ci_high = 1.0;
};

struct KmCurve {
  std::vector<KmPoint> points;  // one per distinct event time
  std::size_t n_records = 0;
  std::size_t n_events = 0;

  double survival_at(double t) const {
    double s = 1.0;
    for (const auto& p : points) {
      if (p.time > t) break;
      s = p.survival;
    }
    return s;
  }

  // Smallest event time with S(t) <= level (e.g. level 0.8 marks the
  // 20%-mortality point); empty when the curve never reaches it.
  std::optional<double> time_to_survival(double level) const {
    for (const auto& p : points)
      if (p.survival <= level) return p.time;
    return std::nullopt;
  }
};

// Product-limit estimator. Ties follow the standard convention: events at a
// time are processed against the risk set that still includes everything
// censored at that same time.
inline KmCurve km_estimate(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw Error("km_estimate needs at least one record");
  struct Obs {
    double time;
    bool event;
  };
  std::vector<Obs> obs;
  obs.reserve(records.size());
  for (const auto& r : records) obs.push_back({r.duration, r.event});
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event > b.event;  // events first at ties
  });

  KmCurve curve;
  curve.n_records = obs.size();
  double s = 1.0;
  double greenwood_sum = 0.0;
  bool saturated = false;  // S hit zero; variance terms stop accumulating
  std::size_t i = 0;
  std::size_t at_risk = obs.size();
  while (i < obs.size()) {
    double t = obs[i].time;
    std::size_t events = 0;
    std::size_t leaving = 0;
    while (i < obs.size() && obs[i].time == t) {
      if (obs[i].event) ++events;
      ++leaving;
      ++i;
    }
    if (events > 0) {
      KmPoint p;
      p.time = t;
      p.n_risk = at_risk;
      p.n_event = events;
      s *= static_cast<double>(at_risk - events) / static_cast<double>(at_risk);
      if (at_risk > events)
        greenwood_sum += static_cast<double>(events) /
                         (static_cast<double>(at_risk) *
                          static_cast<double>(at_risk - events));
      else
        saturated = true;
      p.survival = s;
      p.variance = saturated ? 0.0 : s * s * greenwood_sum;
      if (s > 0.0 && s < 1.0 && p.variance > 0.0) {
        double se_loglog = std::sqrt(p.variance) / (s * std::abs(std::log(s)));
        p.ci_high = std::pow(s, std::exp(-kZ95 * se_loglog));
        p.ci_low = std::pow(s, std::exp(kZ95 * se_loglog));
      } else {
        p.ci_low = s;
        p.ci_high = s;
      }
      curve.points.push_back(p);
      curve.n_events += events;
    }
    at_risk -= leaving;
  }
  return curve;
}

struct LogRankResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  bool zero_event_group = false;  // a group contributed no events
};

// Two-group log-rank test, chi-square with 1 df.
inline LogRankResult log_rank(const std::vector<SurvivalRecord>& group_a,
                              const std::vector<SurvivalRecord>& group_b) {
  if (group_a.empty() || group_b.empty())
    throw Error("log_rank requires two non-empty groups");
  struct Obs {
    double time;
    bool event;
    int group;
  };
  std::vector<Obs> obs;
  obs.reserve(group_a.size() + group_b.size());
  std::size_t events_a = 0, events_b = 0;
  for (const auto& r : group_a) {
    obs.push_back({r.duration, r.event, 0});
    events_a += r.event ? 1 : 0;
  }
  for (const auto& r : group_b) {
    obs.push_back({r.duration, r.event, 1});
    events_b += r.event ? 1 : 0;
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) {
    if (x.time != y.time) return x.time < y.time;
    return x.event > y.event;
  });

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t i = 0;
  std::size_t risk_a = group_a.size(), risk_b = group_b.size();
  while (i < obs.size()) {
    double t = obs[i].time;
    std::size_t d_a = 0, d_b = 0, leave_a = 0, leave_b = 0;
    while (i < obs.size() && obs[i].time == t) {
      if (obs[i].group == 0) {
        ++leave_a;
        if (obs[i].event) ++d_a;
      } else {
        ++leave_b;
        if (obs[i].event) ++d_b;
      }
      ++i;
    }
    double n1 = static_cast<double>(risk_a), n2 = static_cast<double>(risk_b);
    double n = n1 + n2;
    double d = static_cast<double>(d_a + d_b);
    if (d > 0.0 && n > 1.0) {
      observed_minus_expected += static_cast<double>(d_a) - d * n1 / n;
      variance += d * (n1 / n) * (n2 / n) * (n - d) / (n - 1.0);
    }
    risk_a -= leave_a;
    risk_b -= leave_b;
  }

  LogRankResult res;
  res.zero_event_group = events_a == 0 || events_b == 0;
  if (variance > 0.0) {
    res.chi_square = observed_minus_expected * observed_minus_expected / variance;
    res.p_value = chi_square_sf(res.chi_square, 1);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Weibull AFT
// ---------------------------------------------------------------------------

struct AftTerm {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double time_ratio = 1.0;  // exp(coef); scale terms only
  double tr_ci_low = 1.0;
  double tr_ci_high = 1.0;
};

struct AftFit {
  std::vector<AftTerm> scale_terms;  // log-lambda side, intercept first
  std::vector<AftTerm> shape_terms;  // log-rho side, intercept first
  double rho = 1.0;                  // exp(shape intercept)
  double rho_ci_low = 1.0;
  double rho_ci_high = 1.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double lr_statistic = 0.0;  // vs intercept-only model
  double lr_p = 1.0;
  std::size_t lr_df = 0;
  double concordance = 0.5;
  bool concordance_defined = false;
  std::size_t n = 0;
  std::size_t n_events = 0;
  std::size_t iterations = 0;

  // Linear predictor log-lambda for one record (prediction score).
  double linear_predictor(const SurvivalRecord& r) const {
    double mu = scale_terms.front().coef;
    for (std::size_t j = 1; j < scale_terms.size(); ++j) {
      auto it = r.covariates.find(scale_terms[j].name);
      if (it == r.covariates.end())
        throw Error("record missing covariate: " + scale_terms[j].name);
      mu += scale_terms[j].coef * it->second;
    }
    return mu;
  }
};

namespace detail {

struct AftData {
  Eigen::MatrixXd x;      // n x (1 + p) with intercept column
  Eigen::MatrixXd z;      // n x (1 + q) shape design
  Eigen::VectorXd log_t;  // log durations
  Eigen::VectorXd delta;  // event indicators
};

// Censored Weibull AFT log-likelihood at theta = (beta, alpha):
// s_i = rho_i * (log t_i - mu_i), l = sum delta*(log rho + s - log t) - e^s.
inline double aft_loglik(const AftData& d, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& alpha) {
  Eigen::VectorXd mu = d.x * beta;
  Eigen::VectorXd g = d.z * alpha;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < d.log_t.size(); ++i) {
    double rho = std::exp(g[i]);
    double s = rho * (d.log_t[i] - mu[i]);
    if (s > 700.0) return -std::numeric_limits<double>::infinity();
    ll += d.delta[i] * (g[i] + s - d.log_t[i]) - std::exp(s);
  }
  return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

inline void aft_grad_hess(const AftData& d, const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& alpha, Eigen::VectorXd& grad,
                          Eigen::MatrixXd& hess) {
  Eigen::Index p = d.x.cols(), q = d.z.cols();
  grad = Eigen::VectorXd::Zero(p + q);
  hess = Eigen::MatrixXd::Zero(p + q, p + q);
  Eigen::VectorXd mu = d.x * beta;
  Eigen::VectorXd g = d.z * alpha;
  for (Eigen::Index i = 0; i < d.log_t.size(); ++i) {
    double rho = std::exp(g[i]);
    double w = d.log_t[i] - mu[i];
    double s = rho * w;
    double e = std::exp(s);
    double delta = d.delta[i];

    // d l / d beta_j = rho * x_ij * (e^s - delta)
    double gb = rho * (e - delta);
    for (Eigen::Index j = 0; j < p; ++j) grad[j] += gb * d.x(i, j);
    // d l / d alpha_m = z_im * (delta*(1+s) - s*e^s)
    double ga = delta * (1.0 + s) - s * e;
    for (Eigen::Index m = 0; m < q; ++m) grad[p + m] += ga * d.z(i, m);

    // Hessian blocks.
    double hbb = -rho * rho * e;  // x_ij x_ik factor
    double hba = rho * ((e - delta) + s * e);  // x_ij z_im factor
    double haa = s * (delta - e * (1.0 + s));  // z_im z_il factor
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = j; k < p; ++k) {
        double v = hbb * d.x(i, j) * d.x(i, k);
        hess(j, k) += v;
        if (k != j) hess(k, j) += v;
      }
      for (Eigen::Index m = 0; m < q; ++m) {
        double v = hba * d.x(i, j) * d.z(i, m);
        hess(j, p + m) += v;
        hess(p + m, j) += v;
      }
    }
    for (Eigen::Index m = 0; m < q; ++m)
      for (Eigen::Index l = m; l < q; ++l) {
        double v = haa * d.z(i, m) * d.z(i, l);
        hess(p + m, p + l) += v;
        if (l != m) hess(p + l, p + m) += v;
      }
  }
}

// Columns beyond the numerical rank, by pivot order, for error messages.
inline std::vector<std::string> collinear_columns(const Eigen::MatrixXd& m,
                                                  const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  std::vector<std::string> out;
  if (qr.rank() >= m.cols()) return out;
  auto perm = qr.colsPermutation().indices();
  for (Eigen::Index i = qr.rank(); i < m.cols(); ++i)
    out.push_back(names[static_cast<std::size_t>(perm[i])]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Harrell's c-index: over pairs where the shorter observed duration is an
// event, the fraction whose predicted ordering agrees; prediction ties score
// 0.5. Returns nullopt when no pair is comparable.
inline std::optional<double> concordance_index(const std::vector<double>& predictions,
                                               const std::vector<SurvivalRecord>& records) {
  if (predictions.size() != records.size())
    throw Error("concordance: prediction/record count mismatch");
  double num = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      const auto* early = &records[i];
      const auto* late = &records[j];
      double pe = predictions[i], pl = predictions[j];
      if (early->duration == late->duration) continue;
      if (early->duration > late->duration) {
        std::swap(early, late);
        std::swap(pe, pl);
      }
      if (!early->event) continue;  // censoring hides the true ordering
      ++comparable;
      if (pe < pl)
        num += 1.0;
      else if (pe == pl)
        num += 0.5;
    }
  }
  if (comparable == 0) return std::nullopt;
  return num / static_cast<double>(comparable);
}

struct AftOptions {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 500;
  bool run_lr_test = true;  // off while fitting the intercept-only reference
};

// Maximizes the right-censored Weibull AFT log-likelihood, log lambda(x) =
// beta0 + beta.x, with an optional covariate design on log rho (scalar shape
// by default). Newton ascent with step halving and a ridge fallback;
// standard errors from the inverse observed information.
inline AftFit fit_weibull_aft(const std::vector<SurvivalRecord>& records,
                              const std::vector<std::string>& covariate_names,
                              const std::vector<std::string>& shape_covariate_names = {},
                              const AftOptions& options = {}) {
  if (records.empty()) throw Error("fit_weibull_aft needs records");
  const std::size_t n = records.size();
  const std::size_t p = covariate_names.size() + 1;
  const std::size_t q = shape_covariate_names.size() + 1;

  detail::AftData data;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  data.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  data.log_t.resize(static_cast<Eigen::Index>(n));
  data.delta.resize(static_cast<Eigen::Index>(n));
  std::size_t n_events = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (!(r.duration > 0.0))
      throw Error("fit_weibull_aft requires positive durations; claim " +
                  std::to_string(r.claim_id) + " has " + fmt_double(r.duration));
    data.log_t[static_cast<Eigen::Index>(i)] = std::log(r.duration);
    data.delta[static_cast<Eigen::Index>(i)] = r.event ? 1.0 : 0.0;
    n_events += r.event ? 1 : 0;
    data.x(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < covariate_names.size(); ++j) {
      auto it = r.covariates.find(covariate_names[j]);
      if (it == r.covariates.end())
        throw Error("claim " + std::to_string(r.claim_id) + " missing covariate " +
                    covariate_names[j]);
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = it->second;
    }
    data.z(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t m = 0; m < shape_covariate_names.size(); ++m) {
      auto it = r.covariates.find(shape_covariate_names[m]);
      if (it == r.covariates.end())
        throw Error("claim " + std::to_string(r.claim_id) + " missing covariate " +
                    shape_covariate_names[m]);
      data.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m + 1)) = it->second;
    }
  }
  if (n_events == 0) throw Error("fit_weibull_aft requires at least one event");

  {
    std::vector<std::string> x_names = {"(intercept)"};
    x_names.insert(x_names.end(), covariate_names.begin(), covariate_names.end());
    auto bad = detail::collinear_columns(data.x, x_names);
    if (!bad.empty()) {
      std::string msg = "rank-deficient design; collinear column(s):";
      for (const auto& b : bad) msg += " " + b;
      throw Error(msg);
    }
  }

  // Start at the event-time scale, unit shape.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  {
    double mean_log_t = 0.0;
    for (Eigen::Index i = 0; i < data.log_t.size(); ++i) mean_log_t += data.log_t[i];
    beta[0] = mean_log_t / static_cast<double>(n);
  }

  double ll = detail::aft_loglik(data, beta, alpha);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  std::string trace;
  std::size_t iter = 0;
  bool converged = false;
  for (; iter < options.max_iterations; ++iter) {
    detail::aft_grad_hess(data, beta, alpha, grad, hess);
    double gnorm = grad.lpNorm<Eigen::Infinity>();
    trace += "iter " + std::to_string(iter) + ": loglik=" + fmt_double(ll) +
             " grad_inf=" + fmt_double(gnorm) + "\n";
    if (gnorm < options.gradient_tolerance) {
      converged = true;
      break;
    }

    Eigen::Index dim = grad.size();
    bool stepped = false;
    double ridge = 0.0;
    for (int regularize = 0; regularize < 10 && !stepped; ++regularize) {
      Eigen::MatrixXd h = hess;
      if (regularize > 0) {
        ridge = ridge == 0.0 ? 1e-4 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff())
                             : ridge * 10.0;
        h -= ridge * Eigen::MatrixXd::Identity(dim, dim);
      }
      Eigen::VectorXd step = h.ldlt().solve(-grad);
      if (!step.allFinite()) continue;
      double scale = 1.0;
      for (int halve = 0; halve < 40; ++halve, scale *= 0.5) {
        Eigen::VectorXd nb = beta + scale * step.head(static_cast<Eigen::Index>(p));
        Eigen::VectorXd na = alpha + scale * step.tail(static_cast<Eigen::Index>(q));
        double nll = detail::aft_loglik(data, nb, na);
        if (nll > ll) {
          beta = nb;
          alpha = na;
          ll = nll;
          stepped = true;
          break;
        }
      }
    }
    if (!stepped) {
      // No ascent direction improved the likelihood. That is genuine
      // convergence whenever the quadratic model predicts a gain below the
      // floating-point resolution of the objective (the line search cannot
      // see improvements smaller than an ulp of |ll|); otherwise report.
      Eigen::VectorXd d = hess.ldlt().solve(-grad);
      double predicted_gain = d.allFinite()
                                  ? 0.5 * grad.dot(d)
                                  : std::numeric_limits<double>::infinity();
      double resolution = 64.0 * std::numeric_limits<double>::epsilon() *
                          (1.0 + std::abs(ll));
      if (gnorm < 1e-5 ||
          (predicted_gain >= 0.0 && predicted_gain < resolution)) {
        converged = true;
        break;
      }
      throw Error("fit_weibull_aft failed to improve the likelihood; trace:\n" + trace);
    }
  }
  if (!converged)
    throw Error("fit_weibull_aft did not converge in " +
                std::to_string(options.max_iterations) + " iterations; trace:\n" + trace);

  detail::aft_grad_hess(data, beta, alpha, grad, hess);
  Eigen::MatrixXd info = -hess;  // observed information
  Eigen::MatrixXd cov = info.ldlt().solve(
      Eigen::MatrixXd::Identity(info.rows(), info.cols()));

  AftFit fit;
  fit.n = n;
  fit.n_events = n_events;
  fit.iterations = iter;
  fit.log_likelihood = ll;
  std::size_t n_params = p + q;
  fit.aic = 2.0 * static_cast<double>(n_params) - 2.0 * ll;

  auto make_term = [&](const std::string& name, double coef, double var,
                       bool time_ratio) {
    AftTerm t;
    t.name = name;
    t.coef = coef;
    t.se = var > 0.0 ? std::sqrt(var) : 0.0;
    t.z = t.se > 0.0 ? coef / t.se : 0.0;
    t.p = t.se > 0.0 ? normal_two_sided_p(t.z) : 1.0;
    t.ci_low = coef - kZ95 * t.se;
    t.ci_high = coef + kZ95 * t.se;
    if (time_ratio) {
      t.time_ratio = std::exp(coef);
      t.tr_ci_low = std::exp(t.ci_low);
      t.tr_ci_high = std::exp(t.ci_high);
    }
    return t;
  };

  fit.scale_terms.push_back(
      make_term("(intercept)", beta[0], cov(0, 0), true));
  for (std::size_t j = 0; j < covariate_names.size(); ++j) {
    auto idx = static_cast<Eigen::Index>(j + 1);
    fit.scale_terms.push_back(
        make_term(covariate_names[j], beta[idx], cov(idx, idx), true));
  }
  for (std::size_t m = 0; m < q; ++m) {
    auto idx = static_cast<Eigen::Index>(p + m);
    std::string name = m == 0 ? "(shape intercept)" : shape_covariate_names[m - 1];
    fit.shape_terms.push_back(make_term(name, alpha[static_cast<Eigen::Index>(m)],
                                        cov(idx, idx), false));
  }
  fit.rho = std::exp(fit.shape_terms[0].coef);
  fit.rho_ci_low = std::exp(fit.shape_terms[0].ci_low);
  fit.rho_ci_high = std::exp(fit.shape_terms[0].ci_high);

  // Concordance on the fitted linear predictor.
  {
    std::vector<double> preds(n);
    Eigen::VectorXd mu = data.x * beta;
    for (std::size_t i = 0; i < n; ++i) preds[i] = mu[static_cast<Eigen::Index>(i)];
    auto c = concordance_index(preds, records);
    if (c) {
      fit.concordance = *c;
      fit.concordance_defined = true;
    }
  }

  // Likelihood-ratio test against the intercept-only model.
  if (options.run_lr_test && (covariate_names.size() + shape_covariate_names.size()) > 0) {
    AftOptions null_opts = options;
    null_opts.run_lr_test = false;
    AftFit null_fit = fit_weibull_aft(records, {}, {}, null_opts);
    fit.lr_statistic = 2.0 * (fit.log_likelihood - null_fit.log_likelihood);
    if (fit.lr_statistic < 0.0) fit.lr_statistic = 0.0;
    fit.lr_df = covariate_names.size() + shape_covariate_names.size();
    fit.lr_p = chi_square_sf(fit.lr_statistic, fit.lr_df);
  }
  return fit;
}

// Exposed for the finite-difference gradient check.
inline double aft_log_likelihood(const std::vector<SurvivalRecord>& records,
                                 const std::vector<std::string>& covariate_names,
                                 const std::vector<double>& beta_with_intercept,
                                 double log_rho) {
  detail::AftData data;
  std::size_t n = records.size();
  std::size_t p = covariate_names.size() + 1;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  data.z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  data.log_t.resize(static_cast<Eigen::Index>(n));
  data.delta.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    data.log_t[static_cast<Eigen::Index>(i)] = std::log(records[i].duration);
    data.delta[static_cast<Eigen::Index>(i)] = records[i].event ? 1.0 : 0.0;
    data.x(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
          records[i].covariates.at(covariate_names[j]);
  }
  Eigen::VectorXd beta(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j)
    beta[static_cast<Eigen::Index>(j)] = beta_with_intercept[j];
  Eigen::VectorXd alpha(1);
  alpha[0] = log_rho;
  return detail::aft_loglik(data, beta, alpha);
}

inline std::vector<double> aft_gradient(const std::vector<SurvivalRecord>& records,
                                        const std::vector<std::string>& covariate_names,
                                        const std::vector<double>& beta_with_intercept,
                                        double log_rho) {
  detail::AftData data;
  std::size_t n = records.size();
  std::size_t p = covariate_names.size() + 1;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  data.z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  data.log_t.resize(static_cast<Eigen::Index>(n));
  data.delta.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    data.log_t[static_cast<Eigen::Index>(i)] = std::log(records[i].duration);
    data.delta[static_cast<Eigen::Index>(i)] = records[i].event ? 1.0 : 0.0;
    data.x(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
          records[i].covariates.at(covariate_names[j]);
  }
  Eigen::VectorXd beta(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j)
    beta[static_cast<Eigen::Index>(j)] = beta_with_intercept[j];
  Eigen::VectorXd alpha(1);
  alpha[0] = log_rho;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  detail::aft_grad_hess(data, beta, alpha, grad, hess);
  return {grad.data(), grad.data() + grad.size()};
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct VifEntry {
  std::string name;
  double vif = 1.0;
  bool infinite = false;  // perfect collinearity
};

// VIF_j = 1 / (1 - R^2_j), R^2 from regressing column j on the remaining
// columns plus an intercept.
inline std::vector<VifEntry> vif(const Eigen::MatrixXd& design,
                                 const std::vector<std::string>& names) {
  if (design.cols() < 2) throw Error("vif needs at least two covariates");
  if (design.rows() <= design.cols())
    throw Error("vif needs more rows than covariates");
  if (static_cast<std::size_t>(design.cols()) != names.size())
    throw Error("vif: name/column count mismatch");

  std::vector<VifEntry> out;
  Eigen::Index n = design.rows(), pcols = design.cols();
  for (Eigen::Index j = 0; j < pcols; ++j) {
    Eigen::MatrixXd x(n, pcols);  // intercept + other columns
    x.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index k = 0; k < pcols; ++k) {
      if (k == j) continue;
      x.col(c++) = design.col(k);
    }
    Eigen::VectorXd y = design.col(j);
    Eigen::VectorXd coef = x.colPivHouseholderQr().solve(y);
    double ss_res = (y - x * coef).squaredNorm();
    double mean = y.mean();
    double ss_tot = (y.array() - mean).square().sum();

    VifEntry e;
    e.name = names[static_cast<std::size_t>(j)];
    if (ss_tot <= 0.0) {
      e.infinite = true;  // constant column: collinear with the intercept
      e.vif = std::numeric_limits<double>::infinity();
    } else {
      double r2 = 1.0 - ss_res / ss_tot;
      if (r2 > 1.0 - 1e-12) {
        e.infinite = true;
        e.vif = std::numeric_limits<double>::infinity();
      } else {
        e.vif = 1.0 / (1.0 - r2);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<VifEntry> vif(const std::vector<SurvivalRecord>& records,
                                 const std::vector<std::string>& names) {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(records.size()),
                         static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j) {
      auto it = records[i].covariates.find(names[j]);
      if (it == records[i].covariates.end())
        throw Error("claim " + std::to_string(records[i].claim_id) +
                    " missing covariate " + names[j]);
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
    }
  return vif(design, names);
}

// ---------------------------------------------------------------------------
// Simulation oracle
// ---------------------------------------------------------------------------

using CovariateGenerator =
    std::function<std::vector<double>(std::mt19937_64&)>;

// Draws durations T = lambda(x) * (-ln U)^(1/rho). Censoring times are
// Weibull with the same shape and scale kappa*lambda(x), where kappa =
// ((1-censor_rate)/censor_rate)^(1/rho); two Weibulls with the same shape
// and proportional scales censor with exactly probability censor_rate,
// independent of x.
inline std::vector<SurvivalRecord> simulate_aft(
    const std::vector<double>& beta_with_intercept, double rho,
    const CovariateGenerator& covariate_generator,
    const std::vector<std::string>& covariate_names, std::size_t n,
    double censor_rate, std::uint64_t seed) {
  if (!(rho > 0.0)) throw Error("simulate_aft requires rho > 0");
  if (censor_rate < 0.0 || censor_rate >= 1.0)
    throw Error("simulate_aft requires censor_rate in [0,1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);

  double kappa = censor_rate > 0.0
                     ? std::pow((1.0 - censor_rate) / censor_rate, 1.0 / rho)
                     : 0.0;
  std::vector<SurvivalRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = covariate_generator(rng);
    if (x.size() + 1 != beta_with_intercept.size())
      throw Error("simulate_aft: covariate_generator arity mismatch");
    double mu = beta_with_intercept[0];
    for (std::size_t j = 0; j < x.size(); ++j) mu += beta_with_intercept[j + 1] * x[j];
    double lambda = std::exp(mu);
    double t = lambda * std::pow(-std::log(unif(rng)), 1.0 / rho);
    SurvivalRecord r;
    r.claim_id = i;
    if (censor_rate > 0.0) {
      double c = kappa * lambda * std::pow(-std::log(unif(rng)), 1.0 / rho);
      r.event = t <= c;
      r.duration = std::min(t, c);
    } else {
      r.event = true;
      r.duration = t;
    }
    for (std::size_t j = 0; j < x.size(); ++j) r.covariates[covariate_names[j]] = x[j];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace cdrift
