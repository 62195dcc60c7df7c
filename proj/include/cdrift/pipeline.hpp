// File-based pipeline orchestration: a JSON config names the inputs and an
// output directory; each stage reads its predecessors' artifacts from that
// directory and writes its own. Stages are resumable - a content-hash stamp
// makes re-running an up-to-date stage a no-op - and everything written here
// is byte-deterministic for a fixed config and inputs.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cdrift/aat.hpp"
#include "cdrift/ann.hpp"
#include "cdrift/claim_graph.hpp"
#include "cdrift/common.hpp"
#include "cdrift/corpus.hpp"
#include "cdrift/drift.hpp"
#include "cdrift/psylex.hpp"
#include "cdrift/remote_http.hpp"
#include "cdrift/survival.hpp"
#include "cdrift/svgplot.hpp"

#include <json.hpp>

namespace cdrift {

// Thrown when a stage's upstream artifacts are missing; the CLI maps this to
// exit code 2 (module errors stay on exit code 1).
struct DependencyError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  // Inputs and output directory.
  std::string posts_path;
  std::string embeddings_path;
  std::string lexicon_path;
  std::string phrase_vectors_path;  // optional; empty = hash fallback only
  std::string out_dir;

  // ingest
  bool context_append = false;

  // cluster
  double threshold = 0.88;
  std::size_t tree_count = 16;
  std::size_t initial_k = 10;

  // drift
  double window_hours = 24.0;
  std::size_t max_curve_days = 60;

  // psylex
  double mutation_threshold = 0.5;

  // aat
  std::string extractor = "offline";  // or "remote"
  std::string endpoint;
  std::string model;
  std::size_t batch_size = 32;
  std::size_t actor_k = 0;   // 0 = select k by silhouette
  std::size_t action_k = 0;
  std::size_t target_k = 0;
  std::size_t k_min = 2;
  std::size_t k_max = 15;
  double mmr_lambda = 0.5;
  bool allow_hash_fallback = false;
  std::size_t hash_dim = 64;

  // survive
  std::int64_t gap_days = 30;
  double min_lifespan_days = 1.0;

  std::uint64_t seed = 42;
  std::size_t jobs = 1;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"paths",
         {{"posts", posts_path},
          {"embeddings", embeddings_path},
          {"lexicon", lexicon_path},
          {"phrase_vectors", phrase_vectors_path},
          {"out", out_dir}}},
        {"ingest", {{"context_append", context_append}}},
        {"cluster",
         {{"threshold", threshold},
          {"tree_count", tree_count},
          {"initial_k", initial_k}}},
        {"drift",
         {{"window_hours", window_hours}, {"max_curve_days", max_curve_days}}},
        {"psylex", {{"mutation_threshold", mutation_threshold}}},
        {"aat",
         {{"extractor", extractor},
          {"endpoint", endpoint},
          {"model", model},
          {"batch_size", batch_size},
          {"actor_k", actor_k},
          {"action_k", action_k},
          {"target_k", target_k},
          {"k_min", k_min},
          {"k_max", k_max},
          {"mmr_lambda", mmr_lambda},
          {"allow_hash_fallback", allow_hash_fallback},
          {"hash_dim", hash_dim}}},
        {"survive",
         {{"gap_days", gap_days}, {"min_lifespan_days", min_lifespan_days}}},
        {"seed", seed},
        {"jobs", jobs}};
  }

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

namespace detail {

inline void check_config_keys(const nlohmann::json& j,
                              std::initializer_list<const char*> allowed,
                              const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw Error("unknown config key: " + where + it.key());
  }
}

template <typename T>
inline void config_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config root must be a JSON object");
  detail::check_config_keys(
      j, {"paths", "ingest", "cluster", "drift", "psylex", "aat", "survive",
          "seed", "jobs"},
      "");
  PipelineConfig c;
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::check_config_keys(
        p, {"posts", "embeddings", "lexicon", "phrase_vectors", "out"},
        "paths.");
    detail::config_get(p, "posts", c.posts_path);
    detail::config_get(p, "embeddings", c.embeddings_path);
    detail::config_get(p, "lexicon", c.lexicon_path);
    detail::config_get(p, "phrase_vectors", c.phrase_vectors_path);
    detail::config_get(p, "out", c.out_dir);
  }
  if (j.contains("ingest")) {
    const auto& s = j.at("ingest");
    detail::check_config_keys(s, {"context_append"}, "ingest.");
    detail::config_get(s, "context_append", c.context_append);
  }
  if (j.contains("cluster")) {
    const auto& s = j.at("cluster");
    detail::check_config_keys(s, {"threshold", "tree_count", "initial_k"},
                              "cluster.");
    detail::config_get(s, "threshold", c.threshold);
    detail::config_get(s, "tree_count", c.tree_count);
    detail::config_get(s, "initial_k", c.initial_k);
  }
  if (j.contains("drift")) {
    const auto& s = j.at("drift");
    detail::check_config_keys(s, {"window_hours", "max_curve_days"}, "drift.");
    detail::config_get(s, "window_hours", c.window_hours);
    detail::config_get(s, "max_curve_days", c.max_curve_days);
  }
  if (j.contains("psylex")) {
    const auto& s = j.at("psylex");
    detail::check_config_keys(s, {"mutation_threshold"}, "psylex.");
    detail::config_get(s, "mutation_threshold", c.mutation_threshold);
  }
  if (j.contains("aat")) {
    const auto& s = j.at("aat");
    detail::check_config_keys(
        s,
        {"extractor", "endpoint", "model", "batch_size", "actor_k", "action_k",
         "target_k", "k_min", "k_max", "mmr_lambda", "allow_hash_fallback",
         "hash_dim"},
        "aat.");
    detail::config_get(s, "extractor", c.extractor);
    detail::config_get(s, "endpoint", c.endpoint);
    detail::config_get(s, "model", c.model);
    detail::config_get(s, "batch_size", c.batch_size);
    detail::config_get(s, "actor_k", c.actor_k);
    detail::config_get(s, "action_k", c.action_k);
    detail::config_get(s, "target_k", c.target_k);
    detail::config_get(s, "k_min", c.k_min);
    detail::config_get(s, "k_max", c.k_max);
    detail::config_get(s, "mmr_lambda", c.mmr_lambda);
    detail::config_get(s, "allow_hash_fallback", c.allow_hash_fallback);
    detail::config_get(s, "hash_dim", c.hash_dim);
  }
  if (j.contains("survive")) {
    const auto& s = j.at("survive");
    detail::check_config_keys(s, {"gap_days", "min_lifespan_days"}, "survive.");
    detail::config_get(s, "gap_days", c.gap_days);
    detail::config_get(s, "min_lifespan_days", c.min_lifespan_days);
  }
  detail::config_get(j, "seed", c.seed);
  detail::config_get(j, "jobs", c.jobs);

  if (c.extractor != "offline" && c.extractor != "remote")
    throw Error("aat.extractor must be \"offline\" or \"remote\", got \"" +
                c.extractor + "\"");
  if (c.posts_path.empty()) throw Error("config is missing paths.posts");
  if (c.embeddings_path.empty())
    throw Error("config is missing paths.embeddings");
  if (c.out_dir.empty()) throw Error("config is missing paths.out");
  return c;
}

inline PipelineConfig PipelineConfig::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse config " + path + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Stages and artifacts
// ---------------------------------------------------------------------------

enum class Stage { ingest, cluster, drift, psylex, aat, survive, report };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::cluster: return "cluster";
    case Stage::drift: return "drift";
    case Stage::psylex: return "psylex";
    case Stage::aat: return "aat";
    case Stage::survive: return "survive";
    case Stage::report: return "report";
  }
  return "?";
}

inline Stage stage_from_name(std::string_view name) {
  for (Stage s : {Stage::ingest, Stage::cluster, Stage::drift, Stage::psylex,
                  Stage::aat, Stage::survive, Stage::report})
    if (name == stage_name(s)) return s;
  throw Error("unknown stage: " + std::string(name));
}

namespace detail {

inline std::string artifact(const PipelineConfig& cfg, const char* name) {
  return cfg.out_dir + "/" + name;
}

// Files each stage writes (the fixed set; per-group KM files are extra).
inline std::vector<std::string> stage_outputs(const PipelineConfig& cfg,
                                              Stage s) {
  auto a = [&](const char* n) { return artifact(cfg, n); };
  switch (s) {
    case Stage::ingest:
      return {a("corpus_meta.json"), a("embeddings.norm.bin")};
    case Stage::cluster:
      return {a("clusters.csv"), a("edges.csv"), a("cluster_quality.json")};
    case Stage::drift:
      return {a("drift.csv"), a("drift_curve.csv"), a("drift_curve.svg"),
              a("drift_meta.json")};
    case Stage::psylex:
      return {a("scores.csv"), a("psylex_flags.csv")};
    case Stage::aat:
      return {a("triplets.jsonl"), a("aat_clusters.csv"), a("aat_flags.csv"),
              a("aat_meta.json")};
    case Stage::survive:
      return {a("lifespans.csv"), a("models.json"), a("survival_summary.json"),
              a("km_all.csv"), a("km_all.svg")};
    case Stage::report:
      return {a("report.md")};
  }
  return {};
}

inline bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

// A stage's upstream artifacts; absence means the earlier stage did not run.
inline void need_stage(const PipelineConfig& cfg, Stage wanted, Stage dep) {
  for (const auto& f : stage_outputs(cfg, dep))
    if (!file_exists(f))
      throw DependencyError(std::string(stage_name(wanted)) + " requires " +
                            stage_name(dep) + " outputs (missing " + f +
                            "); run `cdrift " + stage_name(dep) + "` first");
}

inline std::uint64_t hash_file(const std::string& path) {
  return fnv1a64(read_file(path));
}

// Content hash over everything the stage consumes plus the full resolved
// config. Conservative: any config edit re-runs every stage.
inline std::string stage_input_hash(const PipelineConfig& cfg, Stage s) {
  std::vector<std::string> inputs;
  auto a = [&](const char* n) { return artifact(cfg, n); };
  inputs.push_back(cfg.posts_path);
  switch (s) {
    case Stage::ingest:
      inputs.push_back(cfg.embeddings_path);
      break;
    case Stage::cluster:
      inputs.push_back(a("embeddings.norm.bin"));
      break;
    case Stage::drift:
      inputs.push_back(a("embeddings.norm.bin"));
      inputs.push_back(a("clusters.csv"));
      inputs.push_back(a("edges.csv"));
      break;
    case Stage::psylex:
      inputs.push_back(cfg.lexicon_path);
      inputs.push_back(a("clusters.csv"));
      break;
    case Stage::aat:
      inputs.push_back(a("clusters.csv"));
      if (!cfg.phrase_vectors_path.empty())
        inputs.push_back(cfg.phrase_vectors_path);
      break;
    case Stage::survive:
      inputs.push_back(a("clusters.csv"));
      inputs.push_back(a("drift.csv"));
      inputs.push_back(a("psylex_flags.csv"));
      inputs.push_back(a("aat_flags.csv"));
      break;
    case Stage::report:
      inputs.push_back(a("corpus_meta.json"));
      inputs.push_back(a("cluster_quality.json"));
      inputs.push_back(a("drift_meta.json"));
      inputs.push_back(a("psylex_flags.csv"));
      inputs.push_back(a("aat_meta.json"));
      inputs.push_back(a("survival_summary.json"));
      inputs.push_back(a("models.json"));
      break;
  }
  std::string acc = cfg.to_json().dump();
  char buf[32];
  for (const auto& f : inputs) {
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash_file(f)));
    acc += ';';
    acc += f;
    acc += '=';
    acc += buf;
  }
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(acc)));
  return std::string(buf);
}

inline std::string stamp_path(const PipelineConfig& cfg, Stage s) {
  return artifact(cfg, (std::string(stage_name(s)) + ".stamp").c_str());
}

inline bool stage_up_to_date(const PipelineConfig& cfg, Stage s,
                             const std::string& hash) {
  if (!file_exists(stamp_path(cfg, s))) return false;
  for (const auto& f : stage_outputs(cfg, s))
    if (!file_exists(f)) return false;
  return read_file(stamp_path(cfg, s)) == hash + "\n";
}

inline void write_stamp(const PipelineConfig& cfg, Stage s,
                        const std::string& hash) {
  write_file(stamp_path(cfg, s), hash + "\n");
}

// "YYYY-MM-DD" from UTC seconds (civil-from-days, no locale involved).
inline std::string format_utc_date(std::int64_t ts) {
  std::int64_t z = ts / 86400;
  if (ts % 86400 < 0) --z;
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  std::uint64_t doe = static_cast<std::uint64_t>(z - era * 146097);
  std::uint64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  std::uint64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  std::uint64_t mp = (5 * doy + 2) / 153;
  std::uint64_t d = doy - (153 * mp + 2) / 5 + 1;
  std::uint64_t m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) ++y;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02llu-%02llu",
                static_cast<long long>(y), static_cast<unsigned long long>(m),
                static_cast<unsigned long long>(d));
  return buf;
}

inline PostCollection load_pipeline_posts(const PipelineConfig& cfg) {
  return load_posts(cfg.posts_path, cfg.context_append);
}

inline EmbeddingStore load_normalized_store(const PipelineConfig& cfg) {
  return EmbeddingStore::load(artifact(cfg, "embeddings.norm.bin"), 0);
}

// clusters.csv round-trip. Rows arrive grouped by claim_id in ascending
// order; member order inside a claim is re-derived from the collection.
inline std::vector<ClaimCluster> load_clusters_csv(const PipelineConfig& cfg,
                                                   const PostCollection& posts) {
  std::string text = read_file(artifact(cfg, "clusters.csv"));
  auto lines = split_lines(text);
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = csv_split(lines[i]);
    if (cols.size() < 3)
      throw Error("clusters.csv line " + std::to_string(i + 1) +
                  ": expected claim_id,post_id,created_at");
    members[static_cast<std::size_t>(std::stoull(cols[0]))].push_back(
        posts.index_of(cols[1]));
  }
  std::vector<ClaimCluster> clusters;
  clusters.reserve(members.size());
  for (auto& [claim_id, idx] : members) {
    ClaimCluster c;
    c.claim_id = claim_id;
    std::sort(idx.begin(), idx.end());
    c.members = std::move(idx);
    c.first_ts = posts[c.members.front()].created_at;
    c.last_ts = posts[c.members.back()].created_at;
    clusters.push_back(std::move(c));
  }
  return clusters;
}

// Node indices follow store rows, matching what build_claim_graph produced
// and what the drift-curve edge lookups expect.
inline SimilarityGraph load_edges_csv(const PipelineConfig& cfg,
                                      const EmbeddingStore& store) {
  std::string text = read_file(artifact(cfg, "edges.csv"));
  auto lines = split_lines(text);
  std::vector<std::string> ids;
  ids.reserve(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) ids.push_back(store.id_of(r));
  SimilarityGraph g(std::move(ids), {}, cfg.threshold);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = csv_split(lines[i]);
    if (cols.size() < 3)
      throw Error("edges.csv line " + std::to_string(i + 1) +
                  ": expected post_a,post_b,similarity");
    g.add_edge(static_cast<std::uint32_t>(store.row_of(cols[0])),
               static_cast<std::uint32_t>(store.row_of(cols[1])),
               std::stod(cols[2]));
  }
  return g;
}

inline void write_json_artifact(const PipelineConfig& cfg, const char* name,
                                const nlohmann::json& j) {
  write_file(artifact(cfg, name), j.dump(2) + "\n");
}

// Run tasks with at most `jobs` worker threads; exceptions surface after all
// workers join. Tasks must write to disjoint state.
inline void run_tasks(std::size_t jobs, std::vector<std::function<void()>>& tasks) {
  if (jobs <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::size_t workers = std::min(jobs, tasks.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          tasks[i]();
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage: ingest
// ---------------------------------------------------------------------------

enum class StageStatus { ran, skipped };

inline StageStatus run_ingest(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  detail::write_json_artifact(cfg, "resolved_config.json", cfg.to_json());
  std::string hash = detail::stage_input_hash(cfg, Stage::ingest);
  if (detail::stage_up_to_date(cfg, Stage::ingest, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  EmbeddingStore store = EmbeddingStore::load(cfg.embeddings_path, 0);
  CorpusReport report = validate_corpus(posts, store);
  if (report.missing_embedding_count > 0) {
    std::string sample;
    std::size_t shown = 0;
    for (const auto& p : posts.posts()) {
      if (store.has(p.post_id)) continue;
      if (shown++) sample += ", ";
      if (shown > 5) {
        sample += "...";
        break;
      }
      sample += p.post_id;
    }
    throw Error(std::to_string(report.missing_embedding_count) +
                " post(s) lack embeddings: " + sample);
  }

  nlohmann::json meta{
      {"post_count", report.post_count},
      {"embedding_count", store.size()},
      {"embedding_dim", store.dimension()},
      {"time_min", report.time_min},
      {"time_max", report.time_max},
      {"time_min_date", detail::format_utc_date(report.time_min)},
      {"time_max_date", detail::format_utc_date(report.time_max)},
      {"context_append", cfg.context_append}};
  detail::write_json_artifact(cfg, "corpus_meta.json", meta);
  store.save(detail::artifact(cfg, "embeddings.norm.bin"));
  detail::write_stamp(cfg, Stage::ingest, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: cluster
// ---------------------------------------------------------------------------

inline StageStatus run_cluster(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::cluster, Stage::ingest);
  std::string hash = detail::stage_input_hash(cfg, Stage::cluster);
  if (detail::stage_up_to_date(cfg, Stage::cluster, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  EmbeddingStore store = detail::load_normalized_store(cfg);
  AnnIndex index(store, cfg.tree_count, derive_seed(cfg.seed, "ann-index"));
  SimilarityGraph graph =
      build_claim_graph(index, store, cfg.threshold, cfg.initial_k);
  std::vector<ClaimCluster> clusters = connected_components(graph, posts);

  std::string csv = "claim_id,post_id,created_at\n";
  for (const auto& c : clusters)
    for (std::size_t m : c.members)
      csv += std::to_string(c.claim_id) + "," + csv_escape(posts[m].post_id) +
             "," + std::to_string(posts[m].created_at) + "\n";
  write_file(detail::artifact(cfg, "clusters.csv"), csv);

  // 17 significant digits: exact double round-trip, so reloaded edges can
  // never dip below the graph threshold.
  std::string edges = "post_a,post_b,similarity\n";
  for (const auto& e : graph.edges())
    edges += csv_escape(store.id_of(e.a)) + "," + csv_escape(store.id_of(e.b)) +
             "," + fmt_double(e.similarity, 17) + "\n";
  write_file(detail::artifact(cfg, "edges.csv"), edges);

  QualityStats q = cluster_quality(clusters, posts, store, 200000,
                                   derive_seed(cfg.seed, "quality"));
  std::size_t multi = 0;
  for (const auto& c : clusters)
    if (c.size() > 1) ++multi;
  nlohmann::json qj{{"cluster_count", q.cluster_count},
                    {"multi_post_clusters", multi},
                    {"singleton_fraction", q.singleton_fraction},
                    {"mean_intra_distance", q.mean_intra_distance},
                    {"mean_inter_distance", q.mean_inter_distance},
                    {"intra_defined", q.intra_defined},
                    {"inter_defined", q.inter_defined},
                    {"edge_count", graph.edges().size()},
                    {"threshold", cfg.threshold}};
  detail::write_json_artifact(cfg, "cluster_quality.json", qj);
  detail::write_stamp(cfg, Stage::cluster, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: drift
// ---------------------------------------------------------------------------

inline StageStatus run_drift(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::drift, Stage::ingest);
  detail::need_stage(cfg, Stage::drift, Stage::cluster);
  std::string hash = detail::stage_input_hash(cfg, Stage::drift);
  if (detail::stage_up_to_date(cfg, Stage::drift, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  EmbeddingStore store = detail::load_normalized_store(cfg);
  std::vector<ClaimCluster> clusters = detail::load_clusters_csv(cfg, posts);
  SimilarityGraph graph = detail::load_edges_csv(cfg, store);

  std::size_t window = static_cast<std::size_t>(cfg.window_hours);
  std::vector<EarlyDrift> drifts;
  drifts.reserve(clusters.size());
  for (const auto& c : clusters)
    drifts.push_back(early_drift(c, posts, store, window));
  DriftGrouping grouping = drift_groups(std::move(drifts));

  std::string csv = "claim_id,window_hours,drift_value,group\n";
  for (const auto& d : grouping.drifts)
    csv += std::to_string(d.claim_id) + "," + std::to_string(d.window_hours) +
           "," + fmt_double(d.drift_value, 10) + "," +
           drift_group_name(d.group) + "\n";
  write_file(detail::artifact(cfg, "drift.csv"), csv);

  DriftCurve curve =
      pairwise_drift_curve(clusters, posts, store, graph, cfg.max_curve_days);
  std::string ccsv = "day_gap,mean_sim,stderr,n\n";
  for (const auto& b : curve)
    ccsv += std::to_string(b.day_gap) + "," + fmt_double(b.mean_similarity, 10) +
            "," + fmt_double(b.std_error, 10) + "," +
            std::to_string(b.pair_count) + "\n";
  write_file(detail::artifact(cfg, "drift_curve.csv"), ccsv);

  SvgSeries series;
  series.label = "mean similarity";
  for (const auto& b : curve)
    series.points.emplace_back(static_cast<double>(b.day_gap),
                               b.mean_similarity);
  SvgPlotOptions opt;
  opt.title = "Indirect-pair similarity by day gap";
  opt.x_label = "day gap";
  opt.y_label = "mean cosine similarity";
  write_file(detail::artifact(cfg, "drift_curve.svg"),
             render_svg_plot({series}, opt));

  // Per-claim similarity statistics (mean/SD/entropy) for the report.
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& c : clusters) {
    ClusterSimilarityStats s = cluster_similarity_stats(
        c, posts, store, cfg.threshold, 200000, derive_seed(cfg.seed, "drift-stats"));
    if (!s.defined) continue;
    stats.push_back({{"claim_id", s.claim_id},
                     {"mean_sim", s.mean_sim},
                     {"sd_sim", s.sd_sim},
                     {"entropy", s.entropy},
                     {"pair_basis", s.pair_basis}});
  }
  std::size_t n_none = 0, n_low = 0, n_high = 0;
  for (const auto& d : grouping.drifts) {
    if (d.group == DriftGroup::none) ++n_none;
    else if (d.group == DriftGroup::low) ++n_low;
    else ++n_high;
  }
  nlohmann::json meta{{"window_hours", window},
                      {"median_nonzero_drift", grouping.median_nonzero},
                      {"median_defined", grouping.median_defined},
                      {"group_counts",
                       {{"none", n_none}, {"low", n_low}, {"high", n_high}}},
                      {"cluster_stats", stats}};
  detail::write_json_artifact(cfg, "drift_meta.json", meta);
  detail::write_stamp(cfg, Stage::drift, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: psylex
// ---------------------------------------------------------------------------

inline StageStatus run_psylex(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::psylex, Stage::cluster);
  if (cfg.lexicon_path.empty()) throw Error("config is missing paths.lexicon");
  std::string hash = detail::stage_input_hash(cfg, Stage::psylex);
  if (detail::stage_up_to_date(cfg, Stage::psylex, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  Lexicon lexicon = load_lexicon(cfg.lexicon_path);
  std::vector<ClaimCluster> clusters = detail::load_clusters_csv(cfg, posts);

  std::vector<CategoryScores> scores;
  scores.reserve(posts.size());
  for (const auto& p : posts.posts()) {
    CategoryScores s = score_text(lexicon, p.text);
    s.post_id = p.post_id;
    scores.push_back(std::move(s));
  }

  const auto& names = lexicon.category_names();
  std::string csv = "post_id,category,percent\n";
  for (const auto& s : scores)
    for (std::size_t c = 0; c < names.size(); ++c)
      csv += csv_escape(s.post_id) + "," + csv_escape(names[c]) + "," +
             fmt_double(s.percent[c], 10) + "\n";
  write_file(detail::artifact(cfg, "scores.csv"), csv);

  std::string flags = "claim_id,category,mutated,fluctuation\n";
  for (const auto& c : clusters) {
    std::vector<CategoryScores> ordered;
    ordered.reserve(c.size());
    for (std::size_t m : c.members) ordered.push_back(scores[m]);
    MutationFlags f = detect_mutations(c.claim_id, ordered, names.size(),
                                       cfg.mutation_threshold);
    for (std::size_t cat = 0; cat < names.size(); ++cat)
      flags += std::to_string(c.claim_id) + "," + csv_escape(names[cat]) + "," +
               (f.mutated[cat] ? "1" : "0") + "," +
               fmt_double(f.fluctuation[cat], 10) + "\n";
  }
  write_file(detail::artifact(cfg, "psylex_flags.csv"), flags);
  detail::write_stamp(cfg, Stage::psylex, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: aat
// ---------------------------------------------------------------------------

namespace detail {

struct SlotResult {
  PhraseClusters clusters;
  nlohmann::json meta;
};

inline SlotResult cluster_slot(const PipelineConfig& cfg,
                               const std::string& slot,
                               const std::vector<std::string>& phrase_list,
                               std::size_t fixed_k,
                               const PhraseVectorProvider& vectors) {
  std::vector<std::string> phrases = phrase_list;
  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());

  SlotResult r;
  std::uint64_t seed = derive_seed(cfg.seed, "aat-" + slot);
  if (phrases.size() < 3) {
    // Too few distinct phrases to select k; a single cluster (or none).
    std::size_t k = phrases.empty() ? 0 : 1;
    if (k == 1) r.clusters = cluster_phrases(phrases, vectors, 1, seed, slot);
    r.clusters.slot = slot;
    r.meta = {{"slot", slot},
              {"phrase_count", phrases.size()},
              {"k", k},
              {"silhouette", 0.0},
              {"selection", nlohmann::json::array()}};
    return r;
  }

  std::size_t k = fixed_k;
  nlohmann::json selection = nlohmann::json::array();
  if (k == 0) {
    std::size_t lo = std::max<std::size_t>(cfg.k_min, 2);
    std::size_t hi = std::min(cfg.k_max, phrases.size() - 1);
    if (hi < lo) hi = lo;
    std::vector<std::size_t> range;
    for (std::size_t kk = lo; kk <= hi; ++kk) range.push_back(kk);
    KSelection sel = select_k(phrases, vectors, range, seed, slot);
    k = sel.best_k;
    for (const auto& row : sel.table)
      selection.push_back({{"k", row.k},
                           {"inertia", row.inertia},
                           {"silhouette", row.silhouette}});
  } else if (k > phrases.size()) {
    k = phrases.size();
  }
  r.clusters = cluster_phrases(phrases, vectors, k, seed, slot);

  // Representative phrases per cluster via MMR against the centroid.
  nlohmann::json exemplars = nlohmann::json::object();
  for (std::size_t cid = 0; cid < r.clusters.k; ++cid) {
    std::vector<std::vector<float>> member_vecs;
    std::vector<std::string> member_phrases;
    for (std::size_t i = 0; i < r.clusters.phrases.size(); ++i)
      if (r.clusters.assignment[i] == cid) {
        member_phrases.push_back(r.clusters.phrases[i]);
        member_vecs.push_back(vectors.vec(r.clusters.phrases[i]));
      }
    if (member_vecs.empty()) continue;
    auto order = mmr_sample(member_vecs, r.clusters.centroids[cid],
                            std::min<std::size_t>(5, member_vecs.size()),
                            cfg.mmr_lambda);
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t idx : order) list.push_back(member_phrases[idx]);
    exemplars[std::to_string(cid)] = list;
  }

  r.meta = {{"slot", slot},
            {"phrase_count", phrases.size()},
            {"k", r.clusters.k},
            {"silhouette", r.clusters.silhouette},
            {"degenerate", r.clusters.degenerate},
            {"selection", selection},
            {"exemplars", exemplars}};
  return r;
}

}  // namespace detail

inline StageStatus run_aat(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::aat, Stage::cluster);
  std::string hash = detail::stage_input_hash(cfg, Stage::aat);
  if (detail::stage_up_to_date(cfg, Stage::aat, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  std::vector<ClaimCluster> clusters = detail::load_clusters_csv(cfg, posts);

  OfflineExtractor offline;
  std::optional<RemoteExtractor> remote;
  TripletExtractor* extractor = &offline;
  if (cfg.extractor == "remote") {
    RemoteExtractorConfig rc;
    rc.endpoint = cfg.endpoint;
    rc.model = cfg.model;
    remote.emplace(rc);
    extractor = &*remote;
  }
  ExtractionOptions opts;
  opts.batch_size = cfg.batch_size;
  std::vector<Triplet> triplets =
      filter_triplets(extract_triplets(*extractor, posts, opts));

  std::string jsonl;
  for (const auto& t : triplets) {
    nlohmann::json j{{"post_id", t.post_id},
                     {"actor", t.actor},
                     {"action", t.action},
                     {"target", t.target}};
    jsonl += j.dump();
    jsonl += '\n';
  }
  write_file(detail::artifact(cfg, "triplets.jsonl"), jsonl);

  std::optional<EmbeddingStore> phrase_store;
  if (!cfg.phrase_vectors_path.empty())
    phrase_store = EmbeddingStore::load(cfg.phrase_vectors_path, 0);
  PhraseVectorProvider vectors(phrase_store ? &*phrase_store : nullptr,
                               cfg.allow_hash_fallback || !phrase_store,
                               cfg.hash_dim);

  std::vector<std::string> actor_phrases, action_phrases, target_phrases;
  for (const auto& t : triplets) {
    if (!t.actor.empty()) actor_phrases.push_back(t.actor);
    if (!t.action.empty()) action_phrases.push_back(t.action);
    if (!t.target.empty()) target_phrases.push_back(t.target);
  }

  // The three slots are independent; run them in parallel when allowed.
  detail::SlotResult slot_results[3];
  {
    std::vector<std::function<void()>> tasks;
    tasks.push_back([&] {
      slot_results[0] =
          detail::cluster_slot(cfg, "actor", actor_phrases, cfg.actor_k, vectors);
    });
    tasks.push_back([&] {
      slot_results[1] = detail::cluster_slot(cfg, "action", action_phrases,
                                             cfg.action_k, vectors);
    });
    tasks.push_back([&] {
      slot_results[2] = detail::cluster_slot(cfg, "target", target_phrases,
                                             cfg.target_k, vectors);
    });
    detail::run_tasks(cfg.jobs, tasks);
  }

  std::string ccsv = "slot,phrase,cluster_id\n";
  for (const auto& sr : slot_results)
    for (std::size_t i = 0; i < sr.clusters.phrases.size(); ++i)
      ccsv += sr.clusters.slot + "," + csv_escape(sr.clusters.phrases[i]) +
              "," + std::to_string(sr.clusters.assignment[i]) + "\n";
  write_file(detail::artifact(cfg, "aat_clusters.csv"), ccsv);

  nlohmann::json meta{{"slots", nlohmann::json::array()}};
  for (const auto& sr : slot_results) meta["slots"].push_back(sr.meta);
  detail::write_json_artifact(cfg, "aat_meta.json", meta);

  // Claim-level mutation flags.
  std::unordered_map<std::string, std::size_t> claim_of;
  for (const auto& c : clusters)
    for (std::size_t m : c.members) claim_of.emplace(posts[m].post_id, c.claim_id);
  std::map<std::size_t, std::vector<Triplet>> by_claim;
  for (const auto& c : clusters) by_claim[c.claim_id];  // keep empty claims
  for (const auto& t : triplets) {
    auto it = claim_of.find(t.post_id);
    if (it != claim_of.end()) by_claim[it->second].push_back(t);
  }
  std::string fcsv = "claim_id,actor_mutated,action_mutated,target_mutated\n";
  for (const auto& [claim_id, ts] : by_claim) {
    AatMutationFlags f =
        detect_aat_mutations(claim_id, ts, slot_results[0].clusters,
                             slot_results[1].clusters, slot_results[2].clusters);
    fcsv += std::to_string(claim_id) + "," + (f.actor_mutated ? "1" : "0") +
            "," + (f.action_mutated ? "1" : "0") + "," +
            (f.target_mutated ? "1" : "0") + "\n";
  }
  write_file(detail::artifact(cfg, "aat_flags.csv"), fcsv);

  // Cluster descriptions come from the remote model when configured; the CSV
  // stays editable by hand either way.
  if (remote) {
    std::string dcsv = "slot,cluster_id,description\n";
    for (const auto& sr : slot_results) {
      const auto& ex = sr.meta.contains("exemplars") ? sr.meta["exemplars"]
                                                     : nlohmann::json::object();
      for (auto it = ex.begin(); it != ex.end(); ++it) {
        std::vector<std::string> samples =
            it.value().get<std::vector<std::string>>();
        std::string desc = remote->describe_cluster(samples);
        dcsv += sr.clusters.slot + "," + it.key() + "," + csv_escape(desc) + "\n";
      }
    }
    write_file(detail::artifact(cfg, "aat_descriptions.csv"), dcsv);
  }

  detail::write_stamp(cfg, Stage::aat, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: survive
// ---------------------------------------------------------------------------

namespace detail {

struct PsylexClaimFlags {
  std::map<std::string, bool> mutated;        // by category
  std::map<std::string, double> fluctuation;  // by category
  bool any_mutated = false;
};

inline std::map<std::size_t, PsylexClaimFlags> load_psylex_flags(
    const PipelineConfig& cfg) {
  std::string text = read_file(artifact(cfg, "psylex_flags.csv"));
  auto lines = split_lines(text);
  std::map<std::size_t, PsylexClaimFlags> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = csv_split(lines[i]);
    if (cols.size() < 4)
      throw Error("psylex_flags.csv line " + std::to_string(i + 1) +
                  ": expected claim_id,category,mutated,fluctuation");
    auto& f = out[static_cast<std::size_t>(std::stoull(cols[0]))];
    bool mut = cols[2] == "1";
    f.mutated[cols[1]] = mut;
    f.fluctuation[cols[1]] = std::stod(cols[3]);
    f.any_mutated = f.any_mutated || mut;
  }
  return out;
}

struct AatClaimFlags {
  bool actor = false, action = false, target = false;
  bool any() const { return actor || action || target; }
};

inline std::map<std::size_t, AatClaimFlags> load_aat_flags(
    const PipelineConfig& cfg) {
  std::string text = read_file(artifact(cfg, "aat_flags.csv"));
  auto lines = split_lines(text);
  std::map<std::size_t, AatClaimFlags> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = csv_split(lines[i]);
    if (cols.size() < 4)
      throw Error("aat_flags.csv line " + std::to_string(i + 1) +
                  ": expected claim_id,actor,action,target flags");
    AatClaimFlags f;
    f.actor = cols[1] == "1";
    f.action = cols[2] == "1";
    f.target = cols[3] == "1";
    out[static_cast<std::size_t>(std::stoull(cols[0]))] = f;
  }
  return out;
}

struct DriftRow {
  double value = 0.0;
  std::string group = "none";
};

inline std::map<std::size_t, DriftRow> load_drift_rows(const PipelineConfig& cfg) {
  std::string text = read_file(artifact(cfg, "drift.csv"));
  auto lines = split_lines(text);
  std::map<std::size_t, DriftRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = csv_split(lines[i]);
    if (cols.size() < 4)
      throw Error("drift.csv line " + std::to_string(i + 1) +
                  ": expected claim_id,window_hours,drift_value,group");
    out[static_cast<std::size_t>(std::stoull(cols[0]))] = {std::stod(cols[2]),
                                                           cols[3]};
  }
  return out;
}

inline void write_km_csv(const std::string& path, const KmCurve& km) {
  std::string csv = "time,S,ci_low,ci_high,n_risk,n_event\n";
  for (const auto& p : km.points)
    csv += fmt_double(p.time, 10) + "," + fmt_double(p.survival, 10) + "," +
           fmt_double(p.ci_low, 10) + "," + fmt_double(p.ci_high, 10) + "," +
           std::to_string(p.n_risk) + "," + std::to_string(p.n_event) + "\n";
  write_file(path, csv);
}

inline SvgSeries km_series(const std::string& label, const KmCurve& km) {
  SvgSeries s;
  s.label = label;
  s.step = true;
  s.points.emplace_back(0.0, 1.0);
  for (const auto& p : km.points) s.points.emplace_back(p.time, p.survival);
  return s;
}

inline nlohmann::json aft_term_json(const AftTerm& t, bool scale_side) {
  nlohmann::json j{{"name", t.name}, {"coef", t.coef},     {"se", t.se},
                   {"z", t.z},       {"p", t.p},           {"ci_low", t.ci_low},
                   {"ci_high", t.ci_high}};
  if (scale_side) {
    j["time_ratio"] = t.time_ratio;
    j["tr_ci_low"] = t.tr_ci_low;
    j["tr_ci_high"] = t.tr_ci_high;
  }
  return j;
}

// Drop constant, duplicate, then still-collinear columns so the fit never
// sees a rank-deficient design. Returns kept names; appends dropped names
// (with reasons) to `notes`.
inline std::vector<std::string> prune_covariates(
    const std::vector<SurvivalRecord>& records,
    const std::vector<std::string>& candidates,
    std::vector<std::string>& notes) {
  std::vector<std::string> kept;
  std::vector<std::vector<double>> kept_vals;
  for (const auto& name : candidates) {
    std::vector<double> vals;
    vals.reserve(records.size());
    for (const auto& r : records) {
      auto it = r.covariates.find(name);
      if (it == r.covariates.end())
        throw Error("record for claim " + std::to_string(r.claim_id) +
                    " is missing covariate " + name);
      vals.push_back(it->second);
    }
    bool constant = true;
    for (double v : vals)
      if (v != vals.front()) {
        constant = false;
        break;
      }
    if (constant) {
      notes.push_back(name + " (constant)");
      continue;
    }
    bool duplicate = false;
    for (std::size_t k = 0; k < kept.size(); ++k)
      if (kept_vals[k] == vals) {
        notes.push_back(name + " (duplicate of " + kept[k] + ")");
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    kept.push_back(name);
    kept_vals.push_back(std::move(vals));
  }

  if (kept.size() >= 2 && records.size() > kept.size() + 1) {
    Eigen::MatrixXd design(records.size(), kept.size() + 1);
    std::vector<std::string> names_with_intercept;
    names_with_intercept.push_back("(intercept)");
    for (std::size_t i = 0; i < records.size(); ++i) design(i, 0) = 1.0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      names_with_intercept.push_back(kept[k]);
      for (std::size_t i = 0; i < records.size(); ++i)
        design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + 1)) =
            kept_vals[k][i];
    }
    std::vector<std::string> collinear =
        detail::collinear_columns(design, names_with_intercept);
    if (!collinear.empty()) {
      std::set<std::string> drop(collinear.begin(), collinear.end());
      std::vector<std::string> filtered;
      for (const auto& n : kept) {
        if (drop.count(n)) notes.push_back(n + " (collinear)");
        else filtered.push_back(n);
      }
      kept = std::move(filtered);
    }
  }
  return kept;
}

struct ModelSpec {
  std::string name;
  std::vector<std::string> covariates;
};

}  // namespace detail

inline StageStatus run_survive(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::survive, Stage::cluster);
  detail::need_stage(cfg, Stage::survive, Stage::drift);
  detail::need_stage(cfg, Stage::survive, Stage::psylex);
  detail::need_stage(cfg, Stage::survive, Stage::aat);
  std::string hash = detail::stage_input_hash(cfg, Stage::survive);
  if (detail::stage_up_to_date(cfg, Stage::survive, hash))
    return StageStatus::skipped;

  PostCollection posts = detail::load_pipeline_posts(cfg);
  std::vector<ClaimCluster> clusters = detail::load_clusters_csv(cfg, posts);
  auto drift_rows = detail::load_drift_rows(cfg);
  auto psylex_flags = detail::load_psylex_flags(cfg);
  auto aat_flags = detail::load_aat_flags(cfg);

  std::vector<SurvivalRecord> records = build_lifespans(
      clusters, posts.max_created_at(), cfg.gap_days, cfg.min_lifespan_days);

  // Engagement controls measured over the early window (same window as the
  // drift predictor): post volume, likes, retweets, unique users, mean
  // follower count.
  std::map<std::size_t, const ClaimCluster*> cluster_by_id;
  for (const auto& c : clusters) cluster_by_id[c.claim_id] = &c;
  std::vector<std::string> categories;
  if (!psylex_flags.empty())
    for (const auto& [cat, _] : psylex_flags.begin()->second.mutated)
      categories.push_back(cat);

  struct RawControls {
    double posts_n = 0, likes = 0, retweets = 0, users = 0, followers = 0;
  };
  std::map<std::size_t, RawControls> raw;
  for (const auto& r : records) {
    const ClaimCluster& c = *cluster_by_id.at(r.claim_id);
    std::int64_t window_end =
        c.first_ts + static_cast<std::int64_t>(cfg.window_hours * 3600.0);
    RawControls rc;
    std::set<std::string> users;
    double follower_sum = 0.0;
    for (std::size_t m : c.members) {
      const Post& p = posts[m];
      if (p.created_at > window_end) break;
      rc.posts_n += 1.0;
      rc.likes += static_cast<double>(p.like_count);
      rc.retweets += static_cast<double>(p.retweet_count);
      follower_sum += static_cast<double>(p.author_followers);
      users.insert(p.author_id);
    }
    rc.users = static_cast<double>(users.size());
    rc.followers = rc.posts_n > 0 ? follower_sum / rc.posts_n : 0.0;
    raw[r.claim_id] = rc;
  }

  // Covariates: binary predictors, per-category psylex flags/fluctuations,
  // AAT slot flags with interactions, and log1p+z-scored controls.
  const std::vector<std::pair<std::string, double RawControls::*>> kControls = {
      {"early_posts", &RawControls::posts_n},
      {"early_likes", &RawControls::likes},
      {"early_retweets", &RawControls::retweets},
      {"early_users", &RawControls::users},
      {"early_followers", &RawControls::followers}};

  for (auto& r : records) {
    const auto& d = drift_rows.count(r.claim_id) ? drift_rows.at(r.claim_id)
                                                 : detail::DriftRow{};
    r.covariates["high_drift"] = d.group == "high" ? 1.0 : 0.0;
    const auto pit = psylex_flags.find(r.claim_id);
    bool psylex_any = false;
    for (const auto& cat : categories) {
      bool mut = false;
      double fluct = 0.0;
      if (pit != psylex_flags.end()) {
        auto mit = pit->second.mutated.find(cat);
        if (mit != pit->second.mutated.end()) mut = mit->second;
        auto fit = pit->second.fluctuation.find(cat);
        if (fit != pit->second.fluctuation.end()) fluct = fit->second;
      }
      psylex_any = psylex_any || mut;
      r.covariates["mut_" + cat] = mut ? 1.0 : 0.0;
      r.covariates["fluct_" + cat] = fluct;
    }
    r.covariates["psylex_mutation"] = psylex_any ? 1.0 : 0.0;
    detail::AatClaimFlags af;
    auto ait = aat_flags.find(r.claim_id);
    if (ait != aat_flags.end()) af = ait->second;
    double a1 = af.actor ? 1.0 : 0.0, a2 = af.action ? 1.0 : 0.0,
           tt = af.target ? 1.0 : 0.0;
    r.covariates["actor_mutation"] = a1;
    r.covariates["action_mutation"] = a2;
    r.covariates["target_mutation"] = tt;
    r.covariates["actor_mutation:action_mutation"] = a1 * a2;
    r.covariates["actor_mutation:target_mutation"] = a1 * tt;
    r.covariates["action_mutation:target_mutation"] = a2 * tt;
    r.covariates["actor_mutation:action_mutation:target_mutation"] =
        a1 * a2 * tt;
    r.covariates["aat_mutation"] = af.any() ? 1.0 : 0.0;
  }
  for (const auto& [name, member] : kControls) {
    std::vector<double> logged;
    logged.reserve(records.size());
    for (const auto& r : records)
      logged.push_back(std::log1p(raw.at(r.claim_id).*member));
    double mu = mean_of(logged);
    double sd = population_sd(logged);
    for (std::size_t i = 0; i < records.size(); ++i)
      records[i].covariates["log_" + name] =
          sd > 0.0 ? (logged[i] - mu) / sd : 0.0;
  }

  // lifespans.csv: durations, status, groupings, raw control values.
  {
    std::string csv =
        "claim_id,duration_days,event,drift_group,psylex_mutated,aat_mutated,"
        "early_posts,early_likes,early_retweets,early_users,early_followers\n";
    for (const auto& r : records) {
      const auto& d = drift_rows.count(r.claim_id) ? drift_rows.at(r.claim_id)
                                                   : detail::DriftRow{};
      const auto& rc = raw.at(r.claim_id);
      csv += std::to_string(r.claim_id) + "," + fmt_double(r.duration, 10) +
             "," + (r.event ? "1" : "0") + "," + d.group + "," +
             (r.covariates.at("psylex_mutation") > 0.5 ? "1" : "0") + "," +
             (r.covariates.at("aat_mutation") > 0.5 ? "1" : "0") + "," +
             fmt_double(rc.posts_n, 10) + "," + fmt_double(rc.likes, 10) + "," +
             fmt_double(rc.retweets, 10) + "," + fmt_double(rc.users, 10) +
             "," + fmt_double(rc.followers, 10) + "\n";
    }
    write_file(detail::artifact(cfg, "lifespans.csv"), csv);
  }

  nlohmann::json summary;
  std::size_t n_events = 0;
  for (const auto& r : records)
    if (r.event) ++n_events;
  summary["n_claims"] = records.size();
  summary["n_events"] = n_events;
  summary["n_censored"] = records.size() - n_events;
  summary["censoring_rule"] =
      "claims whose last post falls within gap_days of corpus end are "
      "right-censored, not events";
  summary["gap_days"] = cfg.gap_days;
  summary["min_lifespan_days"] = cfg.min_lifespan_days;

  if (records.empty()) {
    summary["groupings"] = nlohmann::json::object();
    detail::write_json_artifact(cfg, "survival_summary.json", summary);
    write_file(detail::artifact(cfg, "models.json"), "[]\n");
    detail::write_km_csv(detail::artifact(cfg, "km_all.csv"), KmCurve{});
    write_file(detail::artifact(cfg, "km_all.svg"),
               render_svg_plot({}, SvgPlotOptions{}));
    detail::write_stamp(cfg, Stage::survive, hash);
    return StageStatus::ran;
  }

  // Overall KM plus one grouped comparison per mutation axis.
  KmCurve km_all = km_estimate(records);
  detail::write_km_csv(detail::artifact(cfg, "km_all.csv"), km_all);
  {
    SvgPlotOptions opt;
    opt.title = "Claim survival (all claims)";
    opt.x_label = "days";
    opt.y_label = "S(t)";
    opt.y_min_hint = 0.0;
    opt.y_max_hint = 1.0;
    opt.dashed_y = {0.8};
    if (auto t20 = km_all.time_to_survival(0.8)) opt.dashed_x = {*t20};
    write_file(detail::artifact(cfg, "km_all.svg"),
               render_svg_plot({detail::km_series("all claims", km_all)}, opt));
  }

  auto grouped_km = [&](const std::string& axis,
                        const std::function<std::string(const SurvivalRecord&)>&
                            group_of,
                        const std::vector<std::string>& group_order,
                        const std::string& contrast_a,
                        const std::string& contrast_b) {
    std::map<std::string, std::vector<SurvivalRecord>> groups;
    for (const auto& r : records) groups[group_of(r)].push_back(r);
    nlohmann::json gj;
    std::vector<SvgSeries> series;
    std::vector<double> marks;
    for (const auto& gname : group_order) {
      auto it = groups.find(gname);
      if (it == groups.end() || it->second.empty()) continue;
      KmCurve km = km_estimate(it->second);
      detail::write_km_csv(
          detail::artifact(cfg, ("km_" + axis + "_" + gname + ".csv").c_str()),
          km);
      std::size_t ev = 0;
      for (const auto& r : it->second)
        if (r.event) ++ev;
      nlohmann::json entry{{"n", it->second.size()}, {"events", ev}};
      if (auto t20 = km.time_to_survival(0.8)) {
        entry["time_to_20pct_mortality"] = *t20;
        marks.push_back(*t20);
      }
      gj["groups"][gname] = entry;
      series.push_back(detail::km_series(gname, km));
    }
    if (groups.count(contrast_a) && groups.count(contrast_b) &&
        !groups[contrast_a].empty() && !groups[contrast_b].empty()) {
      LogRankResult lr = log_rank(groups[contrast_a], groups[contrast_b]);
      gj["log_rank"] = {{"groups", {contrast_a, contrast_b}},
                        {"chi_square", lr.chi_square},
                        {"p", lr.p_value},
                        {"zero_event_group", lr.zero_event_group}};
    }
    SvgPlotOptions opt;
    opt.title = "Claim survival by " + axis;
    opt.x_label = "days";
    opt.y_label = "S(t)";
    opt.y_min_hint = 0.0;
    opt.y_max_hint = 1.0;
    opt.dashed_y = {0.8};
    opt.dashed_x = marks;
    write_file(detail::artifact(cfg, ("km_" + axis + ".svg").c_str()),
               render_svg_plot(series, opt));
    summary["groupings"][axis] = gj;
  };

  grouped_km(
      "drift",
      [&](const SurvivalRecord& r) {
        return drift_rows.count(r.claim_id) ? drift_rows.at(r.claim_id).group
                                            : std::string("none");
      },
      {"none", "low", "high"}, "high", "low");
  grouped_km(
      "psylex",
      [&](const SurvivalRecord& r) {
        return r.covariates.at("psylex_mutation") > 0.5 ? "mutated" : "stable";
      },
      {"stable", "mutated"}, "mutated", "stable");
  grouped_km(
      "aat",
      [&](const SurvivalRecord& r) {
        return r.covariates.at("aat_mutation") > 0.5 ? "mutated" : "stable";
      },
      {"stable", "mutated"}, "mutated", "stable");

  // Model suite.
  std::vector<std::string> controls;
  for (const auto& [name, _] : kControls) controls.push_back("log_" + name);

  auto with_controls = [&](std::vector<std::string> covs) {
    covs.insert(covs.end(), controls.begin(), controls.end());
    return covs;
  };
  std::vector<detail::ModelSpec> specs;
  specs.push_back({"drift", with_controls({"high_drift"})});
  {
    std::vector<std::string> muts, flucts;
    for (const auto& cat : categories) {
      muts.push_back("mut_" + cat);
      flucts.push_back("fluct_" + cat);
    }
    specs.push_back({"psylex_mutation", with_controls(muts)});
    specs.push_back({"psylex_fluctuation", with_controls(flucts)});
  }
  specs.push_back({"aat_m1_actor", with_controls({"actor_mutation"})});
  specs.push_back({"aat_m2_action", with_controls({"action_mutation"})});
  specs.push_back({"aat_m3_target", with_controls({"target_mutation"})});
  specs.push_back({"aat_m4_all", with_controls({"actor_mutation",
                                                "action_mutation",
                                                "target_mutation"})});
  specs.push_back(
      {"aat_m5_interactions",
       with_controls({"actor_mutation", "action_mutation", "target_mutation",
                      "actor_mutation:action_mutation",
                      "actor_mutation:target_mutation",
                      "action_mutation:target_mutation",
                      "actor_mutation:action_mutation:target_mutation"})});

  std::vector<nlohmann::json> model_out(specs.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t mi = 0; mi < specs.size(); ++mi)
    tasks.push_back([&, mi] {
      const auto& spec = specs[mi];
      nlohmann::json mj{{"name", spec.name}};
      std::vector<std::string> notes;
      std::vector<std::string> kept =
          detail::prune_covariates(records, spec.covariates, notes);
      mj["pruned"] = notes;
      if (kept.empty()) {
        mj["skipped"] = "no covariates with variation";
        model_out[mi] = std::move(mj);
        return;
      }
      if (records.size() < kept.size() + 3) {
        mj["skipped"] = "too few records (" + std::to_string(records.size()) +
                        ") for " + std::to_string(kept.size()) + " covariates";
        model_out[mi] = std::move(mj);
        return;
      }
      AftFit fit;
      try {
        fit = fit_weibull_aft(records, kept);
      } catch (const Error& e) {
        // One unfittable spec (tiny stratum, residual collinearity, no
        // convergence) must not sink the whole battery.
        mj["skipped"] = e.what();
        model_out[mi] = std::move(mj);
        return;
      }
      nlohmann::json terms = nlohmann::json::array();
      for (const auto& t : fit.scale_terms)
        terms.push_back(detail::aft_term_json(t, true));
      mj["terms"] = terms;
      mj["rho"] = fit.rho;
      mj["rho_ci"] = {fit.rho_ci_low, fit.rho_ci_high};
      mj["log_likelihood"] = fit.log_likelihood;
      mj["aic"] = fit.aic;
      mj["lr"] = {{"statistic", fit.lr_statistic},
                  {"p", fit.lr_p},
                  {"df", fit.lr_df}};
      if (fit.concordance_defined) mj["concordance"] = fit.concordance;
      mj["n"] = fit.n;
      mj["n_events"] = fit.n_events;
      if (kept.size() >= 2 && records.size() > kept.size()) {
        nlohmann::json vj = nlohmann::json::array();
        for (const auto& v : vif(records, kept)) {
          nlohmann::json e{{"name", v.name}, {"infinite", v.infinite}};
          if (!v.infinite) e["vif"] = v.vif;
          vj.push_back(std::move(e));
        }
        mj["vif"] = vj;
      }
      model_out[mi] = std::move(mj);
    });
  detail::run_tasks(cfg.jobs, tasks);

  nlohmann::json models = nlohmann::json::array();
  for (auto& mj : model_out) models.push_back(std::move(mj));
  nlohmann::json models_doc{
      {"models", models},
      {"config",
       {{"gap_days", cfg.gap_days},
        {"min_lifespan_days", cfg.min_lifespan_days},
        {"window_hours", cfg.window_hours},
        {"control_transform", "log1p then z-score"},
        {"seed", cfg.seed}}}};
  detail::write_json_artifact(cfg, "models.json", models_doc);
  detail::write_json_artifact(cfg, "survival_summary.json", summary);
  detail::write_stamp(cfg, Stage::survive, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Stage: report
// ---------------------------------------------------------------------------

inline StageStatus run_report(const PipelineConfig& cfg) {
  detail::need_stage(cfg, Stage::report, Stage::ingest);
  detail::need_stage(cfg, Stage::report, Stage::cluster);
  detail::need_stage(cfg, Stage::report, Stage::drift);
  detail::need_stage(cfg, Stage::report, Stage::psylex);
  detail::need_stage(cfg, Stage::report, Stage::aat);
  detail::need_stage(cfg, Stage::report, Stage::survive);
  std::string hash = detail::stage_input_hash(cfg, Stage::report);
  if (detail::stage_up_to_date(cfg, Stage::report, hash))
    return StageStatus::skipped;

  auto read_json = [&](const char* name) {
    return nlohmann::json::parse(read_file(detail::artifact(cfg, name)));
  };
  nlohmann::json corpus = read_json("corpus_meta.json");
  nlohmann::json quality = read_json("cluster_quality.json");
  nlohmann::json drift_meta = read_json("drift_meta.json");
  nlohmann::json aat_meta = read_json("aat_meta.json");
  nlohmann::json summary = read_json("survival_summary.json");
  nlohmann::json models_doc = read_json("models.json");

  auto psylex_flags = detail::load_psylex_flags(cfg);
  std::map<std::string, std::size_t> mutated_by_cat;
  for (const auto& [_, f] : psylex_flags)
    for (const auto& [cat, mut] : f.mutated)
      if (mut) ++mutated_by_cat[cat];
  std::set<std::string> categories;
  for (const auto& [_, f] : psylex_flags)
    for (const auto& [cat, __] : f.mutated) categories.insert(cat);

  auto aat_flags = detail::load_aat_flags(cfg);
  std::size_t aat_actor = 0, aat_action = 0, aat_target = 0;
  for (const auto& [_, f] : aat_flags) {
    if (f.actor) ++aat_actor;
    if (f.action) ++aat_action;
    if (f.target) ++aat_target;
  }

  auto num = [](const nlohmann::json& j, int digits = 4) {
    return fmt_double(j.get<double>(), digits);
  };

  std::string md;
  md += "# Claim drift pipeline report\n\n";

  md += "## Corpus\n\n";
  md += "- posts: " + std::to_string(corpus["post_count"].get<std::size_t>()) +
        "\n";
  md += "- embedding dimension: " +
        std::to_string(corpus["embedding_dim"].get<std::size_t>()) + "\n";
  md += "- time range: " + corpus["time_min_date"].get<std::string>() + " to " +
        corpus["time_max_date"].get<std::string>() + "\n\n";

  md += "## Claims\n\n";
  md += "- clusters: " +
        std::to_string(quality["cluster_count"].get<std::size_t>()) + " (" +
        std::to_string(quality["multi_post_clusters"].get<std::size_t>()) +
        " with more than one post)\n";
  md += "- singleton fraction: " + num(quality["singleton_fraction"]) + "\n";
  if (quality["intra_defined"].get<bool>())
    md += "- mean intra-cluster distance: " +
          num(quality["mean_intra_distance"]) + "\n";
  if (quality["inter_defined"].get<bool>())
    md += "- mean inter-cluster centroid distance: " +
          num(quality["mean_inter_distance"]) + "\n";
  md += "- similarity threshold: " + num(quality["threshold"]) + "\n\n";

  md += "## Semantic drift\n\n";
  md += "- early window: " +
        std::to_string(drift_meta["window_hours"].get<std::size_t>()) +
        " hours\n";
  if (drift_meta["median_defined"].get<bool>())
    md += "- median non-zero drift: " + num(drift_meta["median_nonzero_drift"], 6) +
          "\n";
  md += "- groups: none " +
        std::to_string(drift_meta["group_counts"]["none"].get<std::size_t>()) +
        ", low " +
        std::to_string(drift_meta["group_counts"]["low"].get<std::size_t>()) +
        ", high " +
        std::to_string(drift_meta["group_counts"]["high"].get<std::size_t>()) +
        "\n";
  md += "- note: per-claim similarity entropy uses fixed 0.01-wide bins over "
        "[threshold, 1]; indirect-pair similarities below the threshold are "
        "clamped into the first bin.\n\n";

  md += "## Psycholinguistic mutations\n\n";
  if (psylex_flags.empty()) {
    md += "no claims scored\n\n";
  } else {
    md += "| category | claims mutated | share |\n|---|---|---|\n";
    double denom = static_cast<double>(psylex_flags.size());
    for (const auto& cat : categories) {
      std::size_t k =
          mutated_by_cat.count(cat) ? mutated_by_cat.at(cat) : 0;
      md += "| " + cat + " | " + std::to_string(k) + " | " +
            fmt_double(static_cast<double>(k) / denom, 4) + " |\n";
    }
    md += "\n";
  }

  md += "## Narrative (actor-action-target) mutations\n\n";
  for (const auto& slot : aat_meta["slots"]) {
    md += "- " + slot["slot"].get<std::string>() + ": " +
          std::to_string(slot["phrase_count"].get<std::size_t>()) +
          " phrases, k = " + std::to_string(slot["k"].get<std::size_t>());
    if (slot.contains("silhouette"))
      md += ", silhouette = " + num(slot["silhouette"]);
    md += "\n";
  }
  md += "- claims with slot mutations: actor " + std::to_string(aat_actor) +
        ", action " + std::to_string(aat_action) + ", target " +
        std::to_string(aat_target) + "\n\n";

  md += "## Survival\n\n";
  md += "- claims analyzed: " +
        std::to_string(summary["n_claims"].get<std::size_t>()) + " (" +
        std::to_string(summary["n_events"].get<std::size_t>()) + " events, " +
        std::to_string(summary["n_censored"].get<std::size_t>()) +
        " censored)\n";
  md += "- note: " + summary["censoring_rule"].get<std::string>() + " (gap = " +
        std::to_string(summary["gap_days"].get<std::int64_t>()) + " days).\n\n";
  if (summary.contains("groupings")) {
    for (auto it = summary["groupings"].begin();
         it != summary["groupings"].end(); ++it) {
      md += "### Grouping: " + it.key() + "\n\n";
      md += "| group | n | events | 20% mortality time (days) |\n|---|---|---|---|\n";
      const auto& groups = it.value()["groups"];
      for (auto g = groups.begin(); g != groups.end(); ++g) {
        md += "| " + g.key() + " | " +
              std::to_string(g.value()["n"].get<std::size_t>()) + " | " +
              std::to_string(g.value()["events"].get<std::size_t>()) + " | ";
        if (g.value().contains("time_to_20pct_mortality"))
          md += num(g.value()["time_to_20pct_mortality"]);
        else
          md += "not reached";
        md += " |\n";
      }
      if (it.value().contains("log_rank")) {
        const auto& lr = it.value()["log_rank"];
        md += "\nlog-rank (" + lr["groups"][0].get<std::string>() + " vs " +
              lr["groups"][1].get<std::string>() +
              "): chi-square = " + num(lr["chi_square"]) +
              ", p = " + num(lr["p"], 6) + "\n";
      }
      md += "\n";
    }
  }

  md += "## Models\n\n";
  md += "Controls are log1p-transformed and z-scored. Time ratio (TR) above 1 "
        "means longer expected lifespan.\n\n";
  for (const auto& m : models_doc["models"]) {
    md += "### " + m["name"].get<std::string>() + "\n\n";
    if (m.contains("skipped")) {
      md += "skipped: " + m["skipped"].get<std::string>() + "\n\n";
      continue;
    }
    md += "- n = " + std::to_string(m["n"].get<std::size_t>()) + ", events = " +
          std::to_string(m["n_events"].get<std::size_t>()) + "\n";
    md += "- rho = " + num(m["rho"]) + " [" + num(m["rho_ci"][0]) + ", " +
          num(m["rho_ci"][1]) + "], AIC = " + num(m["aic"]) + "\n";
    md += "- likelihood ratio vs intercept-only: chi-square = " +
          num(m["lr"]["statistic"]) + " (df " +
          std::to_string(m["lr"]["df"].get<std::size_t>()) +
          "), p = " + num(m["lr"]["p"], 6) + "\n";
    if (m.contains("concordance"))
      md += "- concordance = " + num(m["concordance"]) + "\n";
    if (!m["pruned"].empty()) {
      md += "- pruned covariates: ";
      for (std::size_t i = 0; i < m["pruned"].size(); ++i) {
        if (i) md += ", ";
        md += m["pruned"][i].get<std::string>();
      }
      md += "\n";
    }
    md += "\n| term | coef | se | TR | 95% CI (TR) | p |\n|---|---|---|---|---|---|\n";
    for (const auto& t : m["terms"]) {
      md += "| " + t["name"].get<std::string>() + " | " + num(t["coef"]) +
            " | " + num(t["se"]) + " | " + num(t["time_ratio"]) + " | [" +
            num(t["tr_ci_low"]) + ", " + num(t["tr_ci_high"]) + "] | " +
            num(t["p"], 6) + " |\n";
    }
    if (m.contains("vif")) {
      md += "\nVIF: ";
      for (std::size_t i = 0; i < m["vif"].size(); ++i) {
        if (i) md += ", ";
        const auto& v = m["vif"][i];
        md += v["name"].get<std::string>() + " = ";
        md += v["infinite"].get<bool>() ? "inf" : num(v["vif"]);
      }
      md += "\n";
    }
    md += "\n";
  }

  write_file(detail::artifact(cfg, "report.md"), md);
  detail::write_stamp(cfg, Stage::report, hash);
  return StageStatus::ran;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline StageStatus run_stage(const PipelineConfig& cfg, Stage s) {
  switch (s) {
    case Stage::ingest: return run_ingest(cfg);
    case Stage::cluster: return run_cluster(cfg);
    case Stage::drift: return run_drift(cfg);
    case Stage::psylex: return run_psylex(cfg);
    case Stage::aat: return run_aat(cfg);
    case Stage::survive: return run_survive(cfg);
    case Stage::report: return run_report(cfg);
  }
  throw Error("unknown stage");
}

}  // namespace cdrift
