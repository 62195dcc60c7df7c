// Semantic mutation measurements within claims: similarity-vs-time-gap
// curves over indirectly connected member pairs, per-cluster similarity
// statistics (mean/SD/histogram entropy), early-window cumulative drift from
// the seed post, and the none/low/high drift grouping around the median.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <cdrift/claim_graph.hpp>
#include <cdrift/common.hpp>
#include <cdrift/corpus.hpp>
#include <cdrift/stats.hpp>

namespace cdrift {

struct DriftCurveBin {
  std::size_t day_gap = 0;
  double mean_similarity = 0.0;
  double std_error = 0.0;  // population SD / sqrt(pair_count)
  std::size_t pair_count = 0;
};

using DriftCurve = std::vector<DriftCurveBin>;

// Pairs of cluster members NOT directly joined by a graph edge, binned by
// whole-day time gap. Direct edges are excluded because their similarity is
// lower-bounded by the clustering threshold by construction.
inline DriftCurve pairwise_drift_curve(const std::vector<ClaimCluster>& clusters,
                                       const PostCollection& posts,
                                       const EmbeddingStore& store,
                                       const SimilarityGraph& graph,
                                       std::size_t max_days) {
  std::map<std::size_t, std::vector<double>> by_gap;
  for (const auto& c : clusters) {
    if (c.size() < 2) continue;
    std::vector<std::uint32_t> rows(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      rows[i] = static_cast<std::uint32_t>(store.row_of(posts[c.members[i]].post_id));
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        if (graph.has_edge(rows[i], rows[j])) continue;
        std::int64_t gap_s = posts[c.members[j]].created_at - posts[c.members[i]].created_at;
        if (gap_s < 0) gap_s = -gap_s;
        auto gap_days = static_cast<std::size_t>(gap_s / 86400);
        if (gap_days > max_days) continue;
        by_gap[gap_days].push_back(store.dot(rows[i], rows[j]));
      }
    }
  }

  DriftCurve curve;
  curve.reserve(by_gap.size());
  for (const auto& [gap, sims] : by_gap) {
    DriftCurveBin bin;
    bin.day_gap = gap;
    bin.pair_count = sims.size();
    bin.mean_similarity = mean_of(sims);
    bin.std_error = population_sd(sims) / std::sqrt(static_cast<double>(sims.size()));
    curve.push_back(bin);
  }
  return curve;
}

struct ClusterSimilarityStats {
  std::size_t claim_id = 0;
  double mean_sim = 0.0;
  double sd_sim = 0.0;
  double entropy = 0.0;  // Shannon entropy (nats) of the 0.01-bin histogram
  std::size_t pair_basis = 0;
  bool defined = false;  // false for singleton clusters
};

// Mean/SD over (sampled) pairwise member similarities plus the entropy of
// their histogram, bin width 0.01 over [threshold, 1]. Similarities of
// indirect pairs can fall below the threshold; they clamp into the first
// bin. The entropy definition is artifact-defined and flagged in reports.
inline ClusterSimilarityStats cluster_similarity_stats(const ClaimCluster& cluster,
                                                       const PostCollection& posts,
                                                       const EmbeddingStore& store,
                                                       double threshold,
                                                       std::size_t pair_cap = 200000,
                                                       std::uint64_t seed = 1) {
  ClusterSimilarityStats st;
  st.claim_id = cluster.claim_id;
  if (cluster.size() < 2) return st;

  std::vector<std::size_t> rows(cluster.size());
  for (std::size_t i = 0; i < cluster.size(); ++i)
    rows[i] = store.row_of(posts[cluster.members[i]].post_id);

  std::vector<double> sims;
  std::size_t pairs = cluster.size() * (cluster.size() - 1) / 2;
  if (pairs <= pair_cap) {
    sims.reserve(pairs);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j)
        sims.push_back(store.dot(rows[i], rows[j]));
  } else {
    std::mt19937_64 rng(derive_seed(seed, "cluster-sim-stats"));
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    sims.reserve(pair_cap);
    while (sims.size() < pair_cap) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i != j) sims.push_back(store.dot(rows[i], rows[j]));
    }
  }

  st.pair_basis = sims.size();
  st.mean_sim = mean_of(sims);
  st.sd_sim = population_sd(sims);

  constexpr double kBinWidth = 0.01;
  auto bin_count = static_cast<std::size_t>(std::ceil((1.0 - threshold) / kBinWidth));
  bin_count = std::max<std::size_t>(bin_count, 1);
  std::vector<std::size_t> hist(bin_count, 0);
  for (double s : sims) {
    double off = (s - threshold) / kBinWidth;
    auto b = off <= 0.0 ? std::size_t{0}
                        : std::min(static_cast<std::size_t>(off), bin_count - 1);
    ++hist[b];
  }
  double h = 0.0;
  for (auto n : hist) {
    if (n == 0) continue;
    double p = static_cast<double>(n) / static_cast<double>(sims.size());
    h -= p * std::log(p);
  }
  st.entropy = h;
  st.defined = true;
  return st;
}

enum class DriftGroup { none, low, high };

inline const char* drift_group_name(DriftGroup g) {
  switch (g) {
    case DriftGroup::none: return "none";
    case DriftGroup::low: return "low";
    case DriftGroup::high: return "high";
  }
  return "none";
}

struct EarlyDrift {
  std::size_t claim_id = 0;
  std::size_t window_hours = 24;
  double drift_value = 0.0;  // mean cosine distance to the seed post
  DriftGroup group = DriftGroup::none;
};

// Cumulative early drift: mean cosine distance from the seed (earliest) post
// over all other posts inside the window. A window holding only the seed
// yields drift 0. Grouping happens later in drift_groups.
inline EarlyDrift early_drift(const ClaimCluster& cluster, const PostCollection& posts,
                              const EmbeddingStore& store,
                              std::size_t window_hours = 24) {
  EarlyDrift d;
  d.claim_id = cluster.claim_id;
  d.window_hours = window_hours;
  if (cluster.members.empty()) return d;

  std::size_t seed_row = store.row_of(posts[cluster.members.front()].post_id);
  std::int64_t window_end =
      cluster.first_ts + static_cast<std::int64_t>(window_hours) * 3600;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 1; i < cluster.members.size(); ++i) {
    const Post& p = posts[cluster.members[i]];
    if (p.created_at > window_end) break;  // members are time-ordered
    double dist = 1.0 - store.dot(seed_row, store.row_of(p.post_id));
    // Distances below float32 resolution are rounding residue of identical
    // vectors; treat them as exact zero so "no drift" stays detectable.
    if (dist < 1e-6) dist = 0.0;
    sum += dist;
    ++n;
  }
  if (n > 0) d.drift_value = sum / static_cast<double>(n);
  return d;
}

struct DriftGrouping {
  std::vector<EarlyDrift> drifts;
  double median_nonzero = 0.0;
  bool median_defined = false;  // false when every drift is zero
};

// none: drift exactly 0; low: non-zero <= median of non-zero drifts;
// high: above the median. Ties at the median fall into low (deterministic,
// conservative toward the null).
inline DriftGrouping drift_groups(std::vector<EarlyDrift> drifts) {
  DriftGrouping g;
  std::vector<double> nonzero;
  for (const auto& d : drifts)
    if (d.drift_value > 0.0) nonzero.push_back(d.drift_value);

  if (!nonzero.empty()) {
    g.median_nonzero = median_of(nonzero);
    g.median_defined = true;
  }
  for (auto& d : drifts) {
    if (d.drift_value <= 0.0)
      d.group = DriftGroup::none;
    else if (d.drift_value <= g.median_nonzero)
      d.group = DriftGroup::low;
    else
      d.group = DriftGroup::high;
  }
  g.drifts = std::move(drifts);
  return g;
}

}  // namespace cdrift
