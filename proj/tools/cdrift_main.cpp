// cdrift: run the claim-drift pipeline stage by stage.
//
//   cdrift <stage> --config cdrift.json [--out DIR] [--jobs N] [--seed S]
//
// Stages: ingest, cluster, drift, psylex, aat, survive, report.
// Exit codes: 0 on success, 1 on a module error, 2 when a stage's upstream
// artifacts are missing.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdrift/pipeline.hpp"

namespace {

int run_stages(const cdrift::PipelineConfig& cfg,
               const std::vector<cdrift::Stage>& stages) {
  for (cdrift::Stage s : stages) {
    cdrift::StageStatus st = cdrift::run_stage(cfg, s);
    std::printf("%s: %s\n", cdrift::stage_name(s),
                st == cdrift::StageStatus::ran ? "done" : "up to date");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claim drift pipeline"};
  app.require_subcommand(1, 0);  // one or more stages, run in the order given

  std::string config_path;
  std::string out_override;
  std::size_t jobs_override = 0;
  std::uint64_t seed_override = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "pipeline config (JSON)")
      ->required();
  app.add_option("--out", out_override, "override paths.out from the config");
  app.add_option("--jobs", jobs_override, "override worker thread count");
  app.add_option("--seed", seed_override, "override the pipeline seed")
      ->each([&](const std::string&) { seed_set = true; });

  std::vector<cdrift::Stage> stages;
  for (cdrift::Stage s :
       {cdrift::Stage::ingest, cdrift::Stage::cluster, cdrift::Stage::drift,
        cdrift::Stage::psylex, cdrift::Stage::aat, cdrift::Stage::survive,
        cdrift::Stage::report}) {
    CLI::App* sub = app.add_subcommand(
        cdrift::stage_name(s),
        std::string("run the ") + cdrift::stage_name(s) + " stage");
    sub->callback([&stages, s] { stages.push_back(s); });
    sub->fallthrough();  // lets `cdrift ingest --config ...` reach the app options
  }

  CLI11_PARSE(app, argc, argv);

  try {
    cdrift::PipelineConfig cfg = cdrift::PipelineConfig::load(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (jobs_override > 0) cfg.jobs = jobs_override;
    if (seed_set) cfg.seed = seed_override;
    return run_stages(cfg, stages);
  } catch (const cdrift::DependencyError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
