// Lexicon-based category scoring of post text plus mutation detection on
// consecutive-post relative changes. The bundled demonstration lexicon is a
// small open word list, not the proprietary dictionary it stands in for.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <cdrift/common.hpp>
#include <cdrift/stats.hpp>

namespace cdrift {

// Tokenizer stand-in: maximal runs of alphanumerics (plus in-word
// apostrophes); any byte >= 0x80 is treated as a word character so UTF-8
// text stays intact. ASCII letters are lowercased.
inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    bool word_char = std::isalnum(c) != 0 || c == '\'' || c == '_' || c >= 0x80;
    if (word_char) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

class Lexicon {
 public:
  struct Category {
    std::string name;
    std::unordered_set<std::string> exact;
    std::vector<std::string> stems;                   // prefix matchers
    std::vector<std::vector<std::string>> phrases;    // tokenized, longest first
  };

  const std::vector<Category>& categories() const { return categories_; }
  std::size_t category_count() const { return categories_.size(); }

  const std::vector<std::string>& category_names() const { return names_; }

  std::size_t category_index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw Error("unknown lexicon category: " + std::string(name));
  }

  void add_category(std::string name) {
    for (const auto& n : names_)
      if (n == name) throw Error("duplicate lexicon category: " + name);
    names_.push_back(name);
    categories_.push_back(Category{std::move(name), {}, {}, {}});
  }

  void add_entry(std::string_view entry) {
    if (categories_.empty())
      throw Error("lexicon entry before any [category] header: " + std::string(entry));
    if (entry.empty()) throw Error("empty lexicon entry");
    for (unsigned char c : entry)
      if (std::isupper(c))
        throw Error("lexicon entry must be lowercase: " + std::string(entry));
    Category& cat = categories_.back();
    if (entry.find(' ') != std::string_view::npos) {
      auto tokens = tokenize_words(entry);
      if (tokens.empty()) throw Error("unusable lexicon phrase: " + std::string(entry));
      cat.phrases.push_back(std::move(tokens));
    } else if (entry.back() == '*') {
      auto stem = std::string(entry.substr(0, entry.size() - 1));
      if (stem.empty()) throw Error("empty lexicon stem entry");
      cat.stems.push_back(std::move(stem));
    } else {
      cat.exact.insert(std::string(entry));
    }
  }

  // Sorts phrase matchers longest-first so greedy matching prefers the most
  // specific phrase; keeps stems deterministic.
  void finalize() {
    for (auto& cat : categories_) {
      std::sort(cat.phrases.begin(), cat.phrases.end(),
                [](const auto& a, const auto& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return a < b;
                });
      std::sort(cat.stems.begin(), cat.stems.end());
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Category> categories_;
};

// Format: "[category]" header lines, then entry lines; entries separated by
// commas. "#" starts a comment line. Entries are exact words, "stem*"
// prefixes, or multiword phrases; everything lowercase.
inline Lexicon parse_lexicon(std::string_view content) {
  Lexicon lex;
  auto lines = split_lines(content);
  for (const auto& raw : lines) {
    std::string_view line = raw;
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
      line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
      line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw Error("malformed lexicon category header: " + std::string(line));
      lex.add_category(std::string(line.substr(1, line.size() - 2)));
      continue;
    }
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      std::string_view entry = comma == std::string_view::npos
                                   ? line.substr(start)
                                   : line.substr(start, comma - start);
      while (!entry.empty() && entry.front() == ' ') entry.remove_prefix(1);
      while (!entry.empty() && entry.back() == ' ') entry.remove_suffix(1);
      if (!entry.empty()) lex.add_entry(entry);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  lex.finalize();
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  return parse_lexicon(read_file(path));
}

struct CategoryScores {
  std::string post_id;
  std::size_t total_tokens = 0;
  std::vector<double> percent;  // aligned with Lexicon::category_names()
};

// Percentage of tokens matching each category. Multiword phrases are matched
// greedily before single tokens; a phrase counts as one match while its
// tokens all count toward the total.
inline CategoryScores score_text(const Lexicon& lexicon, std::string_view text) {
  CategoryScores s;
  auto tokens = tokenize_words(text);
  s.total_tokens = tokens.size();
  s.percent.assign(lexicon.category_count(), 0.0);
  if (tokens.empty()) return s;

  for (std::size_t ci = 0; ci < lexicon.category_count(); ++ci) {
    const auto& cat = lexicon.categories()[ci];
    std::size_t matches = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t consumed = 0;
      for (const auto& phrase : cat.phrases) {
        if (phrase.size() > tokens.size() - i) continue;
        bool ok = true;
        for (std::size_t j = 0; j < phrase.size(); ++j)
          if (tokens[i + j] != phrase[j]) {
            ok = false;
            break;
          }
        if (ok) {
          consumed = phrase.size();
          break;
        }
      }
      if (consumed > 0) {
        ++matches;
        i += consumed;
        continue;
      }
      const std::string& tok = tokens[i];
      bool hit = cat.exact.count(tok) > 0;
      if (!hit)
        for (const auto& stem : cat.stems)
          if (tok.size() >= stem.size() && tok.compare(0, stem.size(), stem) == 0) {
            hit = true;
            break;
          }
      if (hit) ++matches;
      ++i;
    }
    s.percent[ci] = 100.0 * static_cast<double>(matches) /
                    static_cast<double>(tokens.size());
  }
  return s;
}

// Relative difference |a-b| / ((a+b)/2), in [0,2]; 0/0 is defined as 0
// (absence -> absence is no change).
inline double pairwise_change(double score_a, double score_b) {
  if (score_a < 0.0 || score_b < 0.0)
    throw Error("pairwise_change requires non-negative scores");
  double denom = (score_a + score_b) / 2.0;
  if (denom == 0.0) return 0.0;
  return std::abs(score_a - score_b) / denom;
}

struct MutationFlags {
  std::size_t claim_id = 0;
  std::vector<bool> mutated;       // aligned with category names
  std::vector<double> fluctuation; // population SD of consecutive changes
};

// Consecutive-post comparison over time-ordered scores. A category mutates
// when any consecutive pair's relative change reaches the threshold and at
// least one side is non-zero (all-zero categories never flag on noise).
inline MutationFlags detect_mutations(std::size_t claim_id,
                                      const std::vector<CategoryScores>& ordered_scores,
                                      std::size_t category_count,
                                      double threshold = 0.5) {
  MutationFlags f;
  f.claim_id = claim_id;
  f.mutated.assign(category_count, false);
  f.fluctuation.assign(category_count, 0.0);
  if (ordered_scores.size() < 2) return f;

  for (std::size_t ci = 0; ci < category_count; ++ci) {
    std::vector<double> changes;
    changes.reserve(ordered_scores.size() - 1);
    bool mutated = false;
    for (std::size_t i = 0; i + 1 < ordered_scores.size(); ++i) {
      double a = ordered_scores[i].percent[ci];
      double b = ordered_scores[i + 1].percent[ci];
      double change = pairwise_change(a, b);
      changes.push_back(change);
      if (change >= threshold && std::max(a, b) > 0.0) mutated = true;
    }
    f.mutated[ci] = mutated;
    f.fluctuation[ci] = population_sd(changes);
  }
  return f;
}

}  // namespace cdrift
