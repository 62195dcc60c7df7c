// Actor-action-target extraction and clustering. Extraction is pluggable:
// a remote HTTP endpoint (production) or a deterministic pattern extractor
// (hermetic tests, offline runs; documented lower fidelity). Phrases are
// clustered per slot with k-means, k chosen by silhouette, and per-claim
// mutation means a slot's phrases span >= 2 clusters.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <cdrift/common.hpp>
#include <cdrift/corpus.hpp>
#include <cdrift/wordlists.hpp>
#include <json.hpp>

namespace cdrift {

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // pictographs, flags, symbols
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows/stars used as emoji
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         cp == 0x200D;                        // zero-width joiner
}

// Decodes one UTF-8 codepoint at s[i]; advances i. Invalid bytes pass
// through as single characters.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t extra = 0;
  char32_t cp = c;
  if (c >= 0xF0) {
    extra = 3;
    cp = c & 0x07;
  } else if (c >= 0xE0) {
    extra = 2;
    cp = c & 0x0F;
  } else if (c >= 0xC0) {
    extra = 1;
    cp = c & 0x1F;
  }
  if (i + extra >= s.size()) {
    ++i;
    return c;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += extra + 1;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view pat) {
  if (pos + pat.size() > s.size()) return false;
  for (std::size_t i = 0; i < pat.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != pat[i]) return false;
  return true;
}

}  // namespace detail

// Light lemmatization: plural suffixes always reduced (with an exception
// list); -ing/-ed dropped only when the remaining stem is itself a known
// verb token ("leaked" -> "leak" but "created" stays, since "creat" is not
// a word).
inline std::string lemmatize_token(const std::string& token) {
  if (token.size() < 4) return token;
  if (pronoun_list().count(token) || auxiliary_list().count(token) ||
      determiner_list().count(token) || clause_break_list().count(token) ||
      plural_exception_list().count(token))
    return token;

  const auto& verbs = common_verb_list();
  if (token.size() >= 5 && token.ends_with("ing")) {
    std::string stem = token.substr(0, token.size() - 3);
    if (verbs.count(stem)) return stem;
  }
  if (token.ends_with("ed")) {
    std::string stem = token.substr(0, token.size() - 2);
    if (verbs.count(stem)) return stem;
  }
  if (token.size() >= 5 && token.ends_with("ies"))
    return token.substr(0, token.size() - 3) + "y";
  if (token.size() >= 5 && token.ends_with("es")) {
    char prev = token[token.size() - 3];
    bool sibilant = prev == 's' || prev == 'x' || prev == 'z' ||
                    token.ends_with("ches") || token.ends_with("shes");
    if (sibilant) return token.substr(0, token.size() - 2);
  }
  if (token.ends_with("s") && !token.ends_with("ss") && !token.ends_with("us") &&
      !token.ends_with("is"))
    return token.substr(0, token.size() - 1);
  return token;
}

// Strips URLs, @mentions, HTML tags, and emoji; lowercases; collapses
// whitespace; lemmatizes word tokens. Sentence punctuation (.,!?;:) is kept,
// attached to the preceding token, so the pattern extractor can split
// clauses.
inline std::string preprocess(std::string_view text) {
  // Pass 1: remove URL/mention/tag/emoji spans, lowercase ASCII.
  std::string clean;
  clean.reserve(text.size());
  bool at_token_start = true;
  std::size_t i = 0;
  while (i < text.size()) {
    if (at_token_start && (detail::starts_with_ci(text, i, "http://") ||
                           detail::starts_with_ci(text, i, "https://") ||
                           detail::starts_with_ci(text, i, "www."))) {
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    char c = text[i];
    if (c == '@' && at_token_start) {
      ++i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
        ++i;
      continue;
    }
    if (c == '<') {
      std::size_t close = text.find('>', i + 1);
      if (close != std::string_view::npos && close - i <= 256) {
        i = close + 1;
        at_token_start = false;
        continue;
      }
      ++i;  // stray '<': drop the character itself
      continue;
    }
    if (static_cast<unsigned char>(c) >= 0x80) {
      std::size_t next = i;
      char32_t cp = detail::decode_utf8(text, next);
      if (!detail::is_emoji_codepoint(cp)) detail::append_utf8(clean, cp);
      at_token_start = false;
      i = next;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      clean += ' ';
      at_token_start = true;
    } else {
      clean += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      at_token_start = false;
    }
    ++i;
  }

  // Pass 2: token rebuild with lemmatization; collapse whitespace.
  std::string out;
  std::string word;
  auto is_word_char = [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '\'' || c == '-' || c == '_' || c >= 0x80;
  };
  auto is_sentence_punct = [](char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
  };
  auto emit_word = [&] {
    if (word.empty()) return;
    std::string lemma = lemmatize_token(word);
    if (!out.empty() && out.back() != ' ') out += ' ';
    out += lemma;
    word.clear();
  };
  for (char c : clean) {
    if (is_word_char(static_cast<unsigned char>(c))) {
      word += c;
    } else if (is_sentence_punct(c)) {
      emit_word();
      if (!out.empty() && !is_sentence_punct(out.back())) out += c;
    } else {
      emit_word();
    }
  }
  emit_word();
  while (!out.empty() && (out.back() == ' ')) out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Triplet extraction
// ---------------------------------------------------------------------------

struct Triplet {
  std::string post_id;
  std::string actor;
  std::string action;
  std::string target;

  bool operator==(const Triplet&) const = default;
};

// Batch item: (post_id, normalized text).
using ExtractionBatch = std::vector<std::pair<std::string, std::string>>;

class TripletExtractor {
 public:
  virtual ~TripletExtractor() = default;
  virtual std::vector<Triplet> extract_batch(const ExtractionBatch& batch) = 0;
};

namespace detail {

// Is this surface token a verb? Direct hit, or -ing/-ed stripped with
// e-restoration and consonant de-doubling ("created" -> create,
// "stopped" -> stop). Used for recognition only; the emitted slot keeps the
// surface form.
inline bool is_verb_surface(const std::string& tok) {
  const auto& verbs = common_verb_list();
  if (verbs.count(tok)) return true;
  auto stem_hits = [&](std::string stem) {
    if (verbs.count(stem)) return true;
    if (verbs.count(stem + "e")) return true;
    if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        verbs.count(stem.substr(0, stem.size() - 1)))
      return true;
    return false;
  };
  if (tok.size() >= 5 && tok.ends_with("ing")) return stem_hits(tok.substr(0, tok.size() - 3));
  if (tok.size() >= 4 && tok.ends_with("ed")) return stem_hits(tok.substr(0, tok.size() - 2));
  return false;
}

inline std::string join_words(const std::vector<std::string>& words, std::size_t lo,
                              std::size_t hi) {
  std::string s;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!s.empty()) s += ' ';
    s += words[i];
  }
  return s;
}

}  // namespace detail

// Deterministic subject-verb-object pattern extractor over normalized text.
// One candidate triplet per clause (clauses split at .,!?;:). Pattern-based
// and intentionally simple; it exists so tests and offline runs need no
// network.
class OfflineExtractor : public TripletExtractor {
 public:
  std::vector<Triplet> extract_batch(const ExtractionBatch& batch) override {
    std::vector<Triplet> out;
    for (const auto& [post_id, text] : batch) extract_one(post_id, text, out);
    return out;
  }

 private:
  static void extract_one(const std::string& post_id, const std::string& text,
                          std::vector<Triplet>& out) {
    // Clause boundaries: any sentence punctuation.
    std::vector<std::vector<std::string>> clauses(1);
    std::string word;
    auto flush_word = [&] {
      if (!word.empty()) {
        clauses.back().push_back(word);
        word.clear();
      }
    };
    for (char c : text) {
      if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':') {
        flush_word();
        if (!clauses.back().empty()) clauses.emplace_back();
      } else if (c == ' ') {
        flush_word();
      } else {
        word += c;
      }
    }
    flush_word();

    const auto& aux = auxiliary_list();
    const auto& det = determiner_list();
    const auto& breaks = clause_break_list();
    for (const auto& tokens : clauses) {
      if (tokens.empty()) continue;
      // Main verb: first non-auxiliary verb; fall back to the first
      // auxiliary when the clause has no content verb.
      std::size_t verb_at = tokens.size();
      std::size_t aux_at = tokens.size();
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!detail::is_verb_surface(tokens[i])) continue;
        if (aux.count(tokens[i])) {
          if (aux_at == tokens.size()) aux_at = i;
          continue;
        }
        verb_at = i;
        break;
      }
      if (verb_at == tokens.size()) verb_at = aux_at;
      if (verb_at == tokens.size()) continue;  // no verb, no triplet

      Triplet t;
      t.post_id = post_id;
      t.action = tokens[verb_at];

      // Actor: content tokens before the verb, last three.
      std::vector<std::string> actor_words;
      for (std::size_t i = 0; i < verb_at; ++i) {
        const std::string& tok = tokens[i];
        if (det.count(tok) || aux.count(tok) || breaks.count(tok)) continue;
        actor_words.push_back(tok);
      }
      std::size_t lo = actor_words.size() > 3 ? actor_words.size() - 3 : 0;
      t.actor = detail::join_words(actor_words, lo, actor_words.size());

      // Target: tokens after the verb up to a clause break; determiners are
      // skipped anywhere in the span, an auxiliary ends a started span
      // (it opens a new verb phrase); first three content words.
      std::vector<std::string> target_words;
      for (std::size_t i = verb_at + 1; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (breaks.count(tok)) break;
        if (det.count(tok)) continue;
        if (aux.count(tok)) {
          if (target_words.empty()) continue;
          break;
        }
        target_words.push_back(tok);
        if (target_words.size() == 3) break;
      }
      t.target = detail::join_words(target_words, 0, target_words.size());

      if (!t.actor.empty() || !t.target.empty()) out.push_back(std::move(t));
    }
  }
};

// Instruction sent to the remote extraction endpoint alongside each batch.
inline constexpr const char* kTripletExtractionPrompt =
    "You label social-media posts with actor-action-target (AAT) triples.\n"
    "For every post in the batch:\n"
    "1. Read the post text.\n"
    "2. List every actor-action-target triple the text asserts: the actor is\n"
    "   who acts, the action is what they do, the target is what the action\n"
    "   applies to.\n"
    "3. Shorten any slot longer than three words to at most three words.\n"
    "4. Leave a slot that has no content as an empty string.\n"
    "Reply with strict JSON only - no prose, no code fences. The reply is an\n"
    "array with one object per post, keyed by the post id:\n"
    "[{\"<post_id>\": [{\"actor\": \"...\", \"action\": \"...\", \"target\": \"...\"}]}]\n"
    "A post with no triples maps to an empty array.\n"
    "Example request entry: {\"id\": \"p1\", \"text\": \"the government hid the study\"}\n"
    "Example reply: [{\"p1\": [{\"actor\": \"government\", \"action\": \"hid\", "
    "\"target\": \"study\"}]}]\n";

// Instruction for optional cluster labelling; replies feed the editable
// description CSV.
inline constexpr const char* kClusterLabelPrompt =
    "You name clusters of short phrases. Given sample phrases that belong to\n"
    "one cluster, reply with strict JSON {\"description\": \"...\"} where the\n"
    "description is at most five words capturing what the phrases share.\n";

// The HTTP-backed RemoteExtractor lives in cdrift/remote_http.hpp; it pulls
// in the HTTP client header, which only transport-using translation units
// should pay for.

struct ExtractionOptions {
  std::size_t batch_size = 32;
  int max_attempts = 3;
};

// Normalizes each post's text and routes batches through the extractor.
// Remote failures are retried per batch up to max_attempts; the last error
// propagates with batch context.
inline std::vector<Triplet> extract_triplets(TripletExtractor& extractor,
                                             const PostCollection& posts,
                                             const ExtractionOptions& options = {}) {
  std::vector<Triplet> all;
  ExtractionBatch batch;
  std::size_t batch_start = 0;
  auto flush = [&](std::size_t first_index) {
    if (batch.empty()) return;
    int attempt = 0;
    for (;;) {
      ++attempt;
      try {
        auto got = extractor.extract_batch(batch);
        for (auto& t : got) all.push_back(std::move(t));
        break;
      } catch (const Error& e) {
        if (attempt >= options.max_attempts)
          throw Error("triplet extraction failed for batch starting at post index " +
                      std::to_string(first_index) + " after " +
                      std::to_string(attempt) + " attempts: " + e.what());
      }
    }
    batch.clear();
  };

  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (batch.empty()) batch_start = i;
    batch.emplace_back(posts[i].post_id, preprocess(posts[i].text));
    if (batch.size() >= options.batch_size) flush(batch_start);
  }
  flush(batch_start);
  return all;
}

// Drops slot values that carry no narrative content: actors/targets that are
// exactly a pronoun, and single-word targets that are verbs. Cleared slots
// become empty strings; the action slot is never filtered.
inline std::vector<Triplet> filter_triplets(std::vector<Triplet> triplets) {
  const auto& pronouns = pronoun_list();
  for (auto& t : triplets) {
    if (pronouns.count(t.actor)) t.actor.clear();
    if (pronouns.count(t.target)) t.target.clear();
    if (!t.target.empty() && t.target.find(' ') == std::string::npos &&
        detail::is_verb_surface(t.target))
      t.target.clear();
  }
  return triplets;
}

// ---------------------------------------------------------------------------
// Phrase vectors
// ---------------------------------------------------------------------------

// Deterministic character-trigram random-projection vector; the hashing
// fallback used when no ingested phrase-vector file is supplied (tests,
// fixture generation). Shared trigrams give related phrases correlated
// directions.
inline std::vector<float> hash_phrase_vector(std::string_view phrase,
                                             std::size_t dimension = 64) {
  std::vector<double> acc(dimension, 0.0);
  std::string padded = "^" + std::string(phrase) + "$";
  std::size_t grams = 0;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    std::uint64_t h = fnv1a64(padded.substr(i, 3));
    for (std::size_t d = 0; d < dimension; ++d) {
      std::uint64_t r = splitmix64(h + 0x9e3779b97f4a7c15ULL * (d + 1));
      // Map to roughly standard normal via sum of two uniforms.
      double u1 = static_cast<double>(r >> 32) / 4294967296.0;
      double u2 = static_cast<double>(r & 0xffffffffULL) / 4294967296.0;
      acc[d] += (u1 + u2) - 1.0;
    }
    ++grams;
  }
  if (grams == 0) grams = 1;
  double n2 = 0.0;
  for (double v : acc) n2 += v * v;
  double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
  std::vector<float> out(dimension);
  for (std::size_t d = 0; d < dimension; ++d)
    out[d] = static_cast<float>(acc[d] * inv);
  if (inv == 0.0) out[0] = 1.0f;  // degenerate empty phrase: fixed unit vector
  return out;
}

// Vector lookup for phrases: ingested store first, hashing fallback when
// permitted (or mandatory when no store is given).
class PhraseVectorProvider {
 public:
  PhraseVectorProvider(const EmbeddingStore* store, bool allow_hash_fallback,
                       std::size_t hash_dimension = 64)
      : store_(store),
        allow_hash_(allow_hash_fallback),
        hash_dim_(store ? store->dimension() : hash_dimension) {}

  std::size_t dimension() const { return hash_dim_; }

  std::vector<float> vec(const std::string& phrase) const {
    if (store_ && store_->has(phrase)) {
      auto v = store_->vec(store_->row_of(phrase));
      return {v.begin(), v.end()};
    }
    if (!allow_hash_)
      throw Error("no ingested vector for phrase: " + phrase);
    return hash_phrase_vector(phrase, hash_dim_);
  }

 private:
  const EmbeddingStore* store_;
  bool allow_hash_;
  std::size_t hash_dim_;
};

// ---------------------------------------------------------------------------
// K-means over phrase vectors
// ---------------------------------------------------------------------------

struct PhraseClusters {
  std::string slot;
  std::size_t k = 0;
  std::vector<std::string> phrases;          // unique, sorted
  std::vector<std::size_t> assignment;       // aligned with phrases
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  double silhouette = 0.0;
  bool degenerate = false;                   // all-identical inputs
  std::vector<double> inertia_trace;         // per Lloyd iteration

  std::size_t cluster_of(const std::string& phrase) const {
    auto it = std::lower_bound(phrases.begin(), phrases.end(), phrase);
    if (it == phrases.end() || *it != phrase)
      throw Error("phrase not in clustering: " + phrase);
    return assignment[static_cast<std::size_t>(it - phrases.begin())];
  }
};

namespace detail {

inline double sq_dist(const std::vector<float>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

inline double sq_dist_rows(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

// Mean silhouette over (sampled) points; singleton-cluster points and
// all-identical data score 0.
inline double silhouette_score(const std::vector<std::vector<float>>& rows,
                               const std::vector<std::size_t>& assignment,
                               std::size_t k, std::uint64_t seed,
                               std::size_t sample_cap = 5000) {
  std::size_t n = rows.size();
  if (k < 2 || n < 2) return 0.0;

  std::vector<std::size_t> cluster_sizes(k, 0);
  for (auto a : assignment) ++cluster_sizes[a];

  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  if (n > sample_cap) {
    std::mt19937_64 rng(derive_seed(seed, "silhouette-sample"));
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(sample_cap);
    std::sort(sample.begin(), sample.end());
  }

  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> dist_sum(k);
  for (auto i : sample) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[assignment[j]] += std::sqrt(sq_dist_rows(rows[i], rows[j]));
    }
    std::size_t own = assignment[i];
    ++counted;
    if (cluster_sizes[own] < 2) continue;  // singleton: s(i) = 0
    double a = dist_sum[own] / static_cast<double>(cluster_sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || cluster_sizes[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_sizes[c]));
    }
    if (!std::isfinite(b)) continue;  // only one non-empty cluster
    double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace detail

// k-means++ initialization, Lloyd iterations until max centroid shift
// < 1e-6 or 300 iterations. Deterministic under the seed. Phrases must be
// unique; vectors come from the provider.
inline PhraseClusters cluster_phrases(std::vector<std::string> phrases,
                                      const PhraseVectorProvider& vectors,
                                      std::size_t k, std::uint64_t seed,
                                      const std::string& slot = "") {
  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  if (k < 1) throw Error("cluster count must be >= 1");
  if (k > phrases.size())
    throw Error("cluster count " + std::to_string(k) + " exceeds phrase count " +
                std::to_string(phrases.size()));

  PhraseClusters pc;
  pc.slot = slot;
  pc.k = k;
  pc.phrases = std::move(phrases);
  std::size_t n = pc.phrases.size();

  std::vector<std::vector<float>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = vectors.vec(pc.phrases[i]);
  std::size_t dim = rows.empty() ? 0 : rows[0].size();

  bool all_identical = true;
  for (std::size_t i = 1; i < n && all_identical; ++i)
    if (detail::sq_dist_rows(rows[i], rows[0]) > 1e-18) all_identical = false;

  std::mt19937_64 rng(derive_seed(seed, "kmeans-" + slot));

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t c0 = first(rng);
  centroids.emplace_back(rows[c0].begin(), rows[c0].end());
  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, detail::sq_dist(rows[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t chosen;
    if (total <= 0.0) {
      chosen = first(rng);  // identical points: any pick works
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      chosen = n - 1;
      double run = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run >= r) {
          chosen = i;
          break;
        }
      }
    }
    centroids.emplace_back(rows[chosen].begin(), rows[chosen].end());
  }

  // Lloyd iterations.
  std::vector<std::size_t> assignment(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double d = detail::sq_dist(rows[i], centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assignment[i] = arg;
      inertia += best;
    }
    pc.inertia_trace.push_back(inertia);
    pc.inertia = inertia;

    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) next[assignment[i]][d] += rows[i][d];
    }
    // Re-seed empty clusters with the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) next[c][d] /= static_cast<double>(counts[c]);
        continue;
      }
      double worst = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = detail::sq_dist(rows[i], centroids[assignment[i]]);
        if (d > worst) {
          worst = d;
          arg = i;
        }
      }
      next[c].assign(rows[arg].begin(), rows[arg].end());
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        double diff = next[c][d] - centroids[c][d];
        s += diff * diff;
      }
      shift = std::max(shift, std::sqrt(s));
    }
    centroids = std::move(next);
    if (shift < 1e-6) break;
  }

  // Final assignment against the last centroids (and final inertia).
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double d = detail::sq_dist(rows[i], centroids[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    assignment[i] = arg;
    inertia += best;
  }
  pc.inertia_trace.push_back(inertia);
  pc.inertia = inertia;
  pc.centroids = std::move(centroids);
  pc.assignment = std::move(assignment);
  pc.degenerate = all_identical;
  pc.silhouette = all_identical ? 0.0
                                : detail::silhouette_score(rows, pc.assignment, k, seed);
  return pc;
}

struct KSelectionRow {
  std::size_t k = 0;
  double inertia = 0.0;
  double silhouette = 0.0;
};

struct KSelection {
  std::size_t best_k = 0;
  std::vector<KSelectionRow> table;  // for elbow inspection
};

// k* = argmax silhouette over the range; ties break toward smaller k.
inline KSelection select_k(const std::vector<std::string>& phrases,
                           const PhraseVectorProvider& vectors,
                           const std::vector<std::size_t>& k_range, std::uint64_t seed,
                           const std::string& slot = "") {
  if (k_range.empty()) throw Error("select_k requires a non-empty k range");
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k : k_range) {
    auto pc = cluster_phrases(phrases, vectors, k, seed, slot);
    sel.table.push_back({k, pc.inertia, pc.silhouette});
    if (pc.silhouette > best) {
      best = pc.silhouette;
      sel.best_k = k;
    }
  }
  return sel;
}

// ---------------------------------------------------------------------------
// MMR sampling
// ---------------------------------------------------------------------------

// Greedy maximum-marginal-relevance selection. First pick: nearest the
// centroid. Then argmax of lambda*sim(centroid, d) - (1-lambda)*max
// similarity to anything already selected. Similarities are dot products.
// Ties resolve to the lowest index. Returns selection order.
inline std::vector<std::size_t> mmr_sample(const std::vector<std::vector<float>>& items,
                                           const std::vector<double>& centroid,
                                           std::size_t n = 20, double lambda = 0.5) {
  if (lambda < 0.0 || lambda > 1.0) throw Error("mmr lambda must lie in [0,1]");
  std::size_t count = items.size();
  n = std::min(n, count);
  std::vector<double> rel(count, 0.0);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < centroid.size(); ++d)
      rel[i] += static_cast<double>(items[i][d]) * centroid[d];

  std::vector<std::size_t> selected;
  std::vector<char> used(count, 0);
  std::vector<double> max_sim_sel(count, -std::numeric_limits<double>::infinity());
  while (selected.size() < n) {
    std::size_t arg = count;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      if (used[i]) continue;
      double score = selected.empty()
                         ? rel[i]
                         : lambda * rel[i] - (1.0 - lambda) * max_sim_sel[i];
      if (score > best) {
        best = score;
        arg = i;
      }
    }
    if (arg == count) break;
    used[arg] = 1;
    selected.push_back(arg);
    for (std::size_t i = 0; i < count; ++i) {
      if (used[i]) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < items[arg].size(); ++d)
        s += static_cast<double>(items[i][d]) * items[arg][d];
      max_sim_sel[i] = std::max(max_sim_sel[i], s);
    }
  }
  return selected;
}

// ---------------------------------------------------------------------------
// Mutation flags
// ---------------------------------------------------------------------------

struct AatMutationFlags {
  std::size_t claim_id = 0;
  bool actor_mutated = false;
  bool action_mutated = false;
  bool target_mutated = false;
  bool any_mutated = false;
};

// A slot mutates when the claim's retained phrases fall into >= 2 distinct
// clusters. Purely set-based: post order is irrelevant.
inline AatMutationFlags detect_aat_mutations(std::size_t claim_id,
                                             const std::vector<Triplet>& claim_triplets,
                                             const PhraseClusters& actor_clusters,
                                             const PhraseClusters& action_clusters,
                                             const PhraseClusters& target_clusters) {
  auto slot_mutated = [&](const PhraseClusters& pc, auto slot_of) {
    std::unordered_set<std::size_t> ids;
    for (const auto& t : claim_triplets) {
      const std::string& phrase = slot_of(t);
      if (phrase.empty()) continue;
      auto it = std::lower_bound(pc.phrases.begin(), pc.phrases.end(), phrase);
      if (it == pc.phrases.end() || *it != phrase) continue;
      ids.insert(pc.assignment[static_cast<std::size_t>(it - pc.phrases.begin())]);
      if (ids.size() >= 2) return true;
    }
    return ids.size() >= 2;
  };

  AatMutationFlags f;
  f.claim_id = claim_id;
  f.actor_mutated = slot_mutated(actor_clusters, [](const Triplet& t) -> const std::string& {
    return t.actor;
  });
  f.action_mutated = slot_mutated(action_clusters, [](const Triplet& t) -> const std::string& {
    return t.action;
  });
  f.target_mutated = slot_mutated(target_clusters, [](const Triplet& t) -> const std::string& {
    return t.target;
  });
  f.any_mutated = f.actor_mutated || f.action_mutated || f.target_mutated;
  return f;
}

}  // namespace cdrift
