#include <catch_amalgamated.hpp>

#include <random>

#include "cdrift/psylex.hpp"
#include "cdrift/synth.hpp"
#include "support/oracles.hpp"

using namespace cdrift;

TEST_CASE("single-category lexicon parses") {
  Lexicon lex = parse_lexicon("[risk]\ndanger, threat\n");
  REQUIRE(lex.category_names() == std::vector<std::string>{"risk"});
  CategoryScores s = score_text(lex, "danger ahead");
  CHECK(s.total_tokens == 2);
  CHECK_THAT(s.percent[0], Catch::Matchers::WithinAbs(50.0, 1e-12));
}

TEST_CASE("duplicate category header is rejected") {
  CHECK_THROWS_WITH(parse_lexicon("[risk]\ndanger\n[risk]\nthreat\n"),
                    Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("stem entries match by prefix") {
  Lexicon lex = parse_lexicon("[health]\nmedic*\n");
  for (const char* text : {"medical", "medicine", "medics"}) {
    CategoryScores s = score_text(lex, text);
    CHECK(s.percent[0] == 100.0);
  }
  CHECK(score_text(lex, "media").percent[0] == 0.0);  // prefix, not substring
}

TEST_CASE("phrases match greedily and count once") {
  Lexicon lex = parse_lexicon("[health]\nside effect\nside\n");
  CategoryScores s = score_text(lex, "a side effect appeared");
  CHECK(s.total_tokens == 4);
  // One phrase match out of four tokens.
  CHECK_THAT(s.percent[0], Catch::Matchers::WithinAbs(25.0, 1e-12));
}

TEST_CASE("eight-token text with one hit scores 12.5") {
  Lexicon lex = parse_lexicon("[tone_neg]\nanger\n");
  CategoryScores s =
      score_text(lex, "the anger is rising across the whole town");
  CHECK(s.total_tokens == 8);
  CHECK_THAT(s.percent[0], Catch::Matchers::WithinAbs(12.5, 1e-12));
}

TEST_CASE("empty text scores zero everywhere") {
  Lexicon lex = parse_lexicon("[a]\nx\n[b]\ny\n");
  CategoryScores s = score_text(lex, "");
  CHECK(s.total_tokens == 0);
  CHECK(s.percent == std::vector<double>{0.0, 0.0});
}

TEST_CASE("scores are case-insensitive over raw text") {
  Lexicon lex = parse_lexicon("[risk]\ndanger\n");
  CHECK(score_text(lex, "DANGER Danger danger").percent[0] == 100.0);
}

TEST_CASE("pairwise change reproduces the 20/5 example") {
  CHECK_THAT(pairwise_change(20.0, 5.0), Catch::Matchers::WithinAbs(1.2, 1e-12));
  CHECK(pairwise_change(20.0, 5.0) >= 0.5);  // flags at the default threshold
}

TEST_CASE("pairwise change identities") {
  CHECK(pairwise_change(7.0, 7.0) == 0.0);
  CHECK(pairwise_change(0.0, 0.0) == 0.0);  // degenerate case by convention
  CHECK(pairwise_change(0.0, 10.0) == 2.0); // appearing from nothing maxes out
}

TEST_CASE("pairwise change is symmetric and scale-invariant") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    double a = 100.0 * oracle::uniform01(rng);
    double b = 100.0 * oracle::uniform01(rng);
    double c = 0.1 + 10.0 * oracle::uniform01(rng);
    CHECK(pairwise_change(a, b) == pairwise_change(b, a));
    CHECK_THAT(pairwise_change(c * a, c * b),
               Catch::Matchers::WithinAbs(pairwise_change(a, b), 1e-9));
    double v = pairwise_change(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }
}

namespace {

std::vector<CategoryScores> series_of(const std::vector<double>& values) {
  std::vector<CategoryScores> out;
  for (double v : values) {
    CategoryScores s;
    s.total_tokens = 10;
    s.percent = {v};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("series [20, 5] mutates at threshold 0.5") {
  MutationFlags f = detect_mutations(1, series_of({20.0, 5.0}), 1, 0.5);
  REQUIRE(f.mutated.size() == 1);
  CHECK(f.mutated[0]);
  // Single consecutive change => fluctuation is the SD of one value = 0.
  CHECK(f.fluctuation[0] == 0.0);
}

TEST_CASE("flat series [5, 5, 5] does not mutate") {
  MutationFlags f = detect_mutations(1, series_of({5.0, 5.0, 5.0}), 1, 0.5);
  CHECK_FALSE(f.mutated[0]);
  CHECK(f.fluctuation[0] == 0.0);
}

TEST_CASE("single-post claims cannot mutate or fluctuate") {
  MutationFlags f = detect_mutations(1, series_of({40.0}), 1, 0.5);
  CHECK_FALSE(f.mutated[0]);
  CHECK(f.fluctuation[0] == 0.0);
}

TEST_CASE("zero-to-zero consecutive steps never mutate") {
  MutationFlags f = detect_mutations(1, series_of({0.0, 0.0, 0.0}), 1, 0.5);
  CHECK_FALSE(f.mutated[0]);
}

TEST_CASE("mutation thresholds are monotone") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> vals;
    for (int i = 0; i < 5; ++i) vals.push_back(30.0 * oracle::uniform01(rng));
    auto series = series_of(vals);
    bool strict = detect_mutations(1, series, 1, 0.75).mutated[0];
    bool mid = detect_mutations(1, series, 1, 0.5).mutated[0];
    bool loose = detect_mutations(1, series, 1, 0.25).mutated[0];
    if (strict) CHECK(mid);
    if (mid) CHECK(loose);
  }
}

TEST_CASE("fluctuation is the population SD of consecutive changes") {
  // Changes: |10-20|/15 = 2/3, |20-10|/15 = 2/3, |10-30|/20 = 1.
  MutationFlags f = detect_mutations(1, series_of({10.0, 20.0, 10.0, 30.0}), 1, 10.0);
  std::vector<double> changes{2.0 / 3.0, 2.0 / 3.0, 1.0};
  CHECK_THAT(f.fluctuation[0],
             Catch::Matchers::WithinAbs(population_sd(changes), 1e-12));
  CHECK_FALSE(f.mutated[0]);  // threshold 10 is unreachable (max change is 2)
}

TEST_CASE("bundled lexicon file matches the embedded demo bytes") {
  std::string bundled = read_file(std::string(CDRIFT_SOURCE_DIR) + "/data/lexicon.cdl");
  CHECK(bundled == std::string(kDemoLexicon));
  // And it parses into the ten demo categories.
  Lexicon lex = parse_lexicon(bundled);
  CHECK(lex.category_names().size() == 10);
  CHECK(lex.category_index("risk") == 9);
  CHECK_THROWS_WITH(lex.category_index("nope"),
                    Catch::Matchers::ContainsSubstring("unknown lexicon category"));
}

TEST_CASE("tokenizer lowercases and splits on punctuation") {
  CHECK(tokenize_words("It's DANGEROUS, right? yes-no") ==
        std::vector<std::string>{"it's", "dangerous", "right", "yes", "no"});
  CHECK(tokenize_words("'quoted'") == std::vector<std::string>{"quoted"});
  CHECK(tokenize_words("...") == std::vector<std::string>{});
}
