// Generates the synthetic demo corpus: posts, embeddings, lexicon, phrase
// vectors, ground-truth labels, and a ready-to-run pipeline config.
//
//   cdrift-fixture --out DIR [--posts N] [--claims N] [--dim D] [--seed S]
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdrift/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic corpus generator"};
  std::string out_dir;
  cdrift::SynthConfig cfg;
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--posts", cfg.post_count, "total posts");
  app.add_option("--claims", cfg.claim_count, "multi-post claims");
  app.add_option("--dim", cfg.dim, "embedding dimension");
  app.add_option("--seed", cfg.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    cdrift::SynthCorpus corpus = cdrift::generate_synth_corpus(cfg);
    cdrift::write_synth_corpus(corpus, out_dir);

    // Phrase vectors for the AAT stage, keyed by extracted surface phrases.
    cdrift::PostCollection posts(corpus.posts);
    cdrift::EmbeddingStore phrases = cdrift::synth_phrase_vectors(posts, cfg.dim);
    phrases.save(out_dir + "/phrases.bin");

    // Ground truth for eyeballing pipeline output against the plan.
    std::string truth = "claim_id,mutating,lifespan_days,post_count\n";
    for (std::size_t c = 0; c < corpus.claims.size(); ++c)
      truth += std::to_string(c) + "," +
               (corpus.claims[c].mutating ? "1" : "0") + "," +
               cdrift::fmt_double(corpus.claims[c].lifespan_days, 6) + "," +
               std::to_string(corpus.claims[c].post_ids.size()) + "\n";
    cdrift::write_file(out_dir + "/truth.csv", truth);

    nlohmann::json config{
        {"paths",
         {{"posts", out_dir + "/posts.jsonl"},
          {"embeddings", out_dir + "/embeddings.bin"},
          {"lexicon", out_dir + "/lexicon.cdl"},
          {"phrase_vectors", out_dir + "/phrases.bin"},
          {"out", out_dir + "/out"}}},
        {"seed", cfg.seed}};
    cdrift::write_file(out_dir + "/cdrift.json", config.dump(2) + "\n");

    std::printf("wrote %zu posts, %zu claims to %s\n", corpus.posts.size(),
                corpus.claims.size(), out_dir.c_str());
    std::printf("run: cdrift ingest cluster drift psylex aat survive report "
                "--config %s/cdrift.json\n",
                out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
