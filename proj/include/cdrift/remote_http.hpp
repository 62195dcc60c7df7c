// HTTP-backed triplet extractor. Kept out of aat.hpp because the bundled
// HTTP client header is large; include this only where the remote transport
// is actually used.
#pragma once

#include <cstdlib>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <cdrift/aat.hpp>
#include <cdrift/common.hpp>
#include <httplib.h>
#include <json.hpp>

// httplib drags in glibc's <resolv.h>, which #defines _res and corrupts any
// later header using that identifier (Eigen's matrix kernels do).
#ifdef _res
#undef _res
#endif

namespace cdrift {

struct RemoteExtractorConfig {
  std::string endpoint;  // e.g. http://host:port/v1/extract
  std::string model;     // model identifier forwarded verbatim
  std::string api_key;   // empty -> taken from CDRIFT_LLM_KEY
  int timeout_seconds = 60;
};

// POST body: {"model": ..., "prompt": ..., "batch": [{"id": ..., "text":
// ...}]}. Reply: array of one-key objects mapping post id to its triplet
// list. Slots longer than three words are truncated with a warning.
// Malformed replies throw; extract_triplets owns the retry budget.
class RemoteExtractor : public TripletExtractor {
 public:
  explicit RemoteExtractor(RemoteExtractorConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
      const char* env = std::getenv("CDRIFT_LLM_KEY");
      if (env) config_.api_key = env;
    }
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw Error("extractor endpoint needs a scheme: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = config_.endpoint;
      path_ = "/";
    } else {
      base_ = config_.endpoint.substr(0, path_start);
      path_ = config_.endpoint.substr(path_start);
    }
  }

  std::vector<Triplet> extract_batch(const ExtractionBatch& batch) override {
    nlohmann::json body;
    body["model"] = config_.model;
    body["prompt"] = kTripletExtractionPrompt;
    body["batch"] = nlohmann::json::array();
    for (const auto& [id, text] : batch)
      body["batch"].push_back({{"id", id}, {"text", text}});
    return parse_reply(post_json(body.dump()), batch);
  }

  // Optional labelling helper; replies feed the editable description CSV.
  std::string describe_cluster(const std::vector<std::string>& sample_phrases) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["prompt"] = kClusterLabelPrompt;
    body["batch"] = nlohmann::json::array();
    body["batch"].push_back({{"id", "cluster"},
                             {"text", nlohmann::json(sample_phrases).dump()}});
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(post_json(body.dump()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("cluster label reply is not valid JSON: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("description") ||
        !reply.at("description").is_string())
      throw Error("cluster label reply missing string field 'description'");
    return reply.at("description").get<std::string>();
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

  // Parses and validates a reply body against the batch; exposed separately
  // so tests can exercise validation without a live server.
  std::vector<Triplet> parse_reply(const std::string& body, const ExtractionBatch& batch) {
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("extractor reply is not valid JSON: ") + e.what());
    }
    if (!reply.is_array()) throw Error("extractor reply must be a JSON array");

    std::unordered_map<std::string, std::vector<Triplet>> by_id;
    for (const auto& el : reply) {
      if (!el.is_object() || el.size() != 1)
        throw Error("extractor reply elements must be single-key objects");
      for (auto it = el.begin(); it != el.end(); ++it) {
        const std::string& post_id = it.key();
        if (!it.value().is_array())
          throw Error("extractor reply for post " + post_id + " must be an array");
        auto& list = by_id[post_id];
        for (const auto& tj : it.value()) {
          if (!tj.is_object() || !tj.contains("actor") || !tj.contains("action") ||
              !tj.contains("target"))
            throw Error("extractor triplet for post " + post_id +
                        " missing actor/action/target");
          if (!tj.at("actor").is_string() || !tj.at("action").is_string() ||
              !tj.at("target").is_string())
            throw Error("extractor triplet slots for post " + post_id +
                        " must be strings");
          Triplet t;
          t.post_id = post_id;
          t.actor = truncate_slot(tj.at("actor").get<std::string>(), post_id, "actor");
          t.action = truncate_slot(tj.at("action").get<std::string>(), post_id, "action");
          t.target = truncate_slot(tj.at("target").get<std::string>(), post_id, "target");
          list.push_back(std::move(t));
        }
      }
    }

    // Emit in batch order; an id absent from the reply means no triplets.
    std::unordered_set<std::string> batch_ids;
    for (const auto& [id, text] : batch) batch_ids.insert(id);
    for (const auto& [id, triplets] : by_id)
      if (!batch_ids.count(id)) throw Error("extractor reply names unknown post " + id);
    std::vector<Triplet> out;
    for (const auto& [id, text] : batch) {
      auto it = by_id.find(id);
      if (it == by_id.end()) continue;
      for (auto& t : it->second) out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::string post_json(const std::string& body) {
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res)
      throw Error("extractor request to " + config_.endpoint +
                  " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error("extractor request to " + config_.endpoint + " returned status " +
                  std::to_string(res->status));
    return res->body;
  }

  std::string truncate_slot(const std::string& value, const std::string& post_id,
                            const char* slot) {
    std::vector<std::string> words;
    std::string w;
    for (char c : value) {
      if (c == ' ') {
        if (!w.empty()) words.push_back(std::move(w));
        w.clear();
      } else {
        w += c;
      }
    }
    if (!w.empty()) words.push_back(std::move(w));
    if (words.size() <= 3) return value;
    warnings_.push_back("post " + post_id + ": " + slot +
                        " slot exceeded 3 words, truncated");
    return detail::join_words(words, 0, 3);
  }

  RemoteExtractorConfig config_;
  std::string base_;
  std::string path_;
  std::vector<std::string> warnings_;
};

}  // namespace cdrift
