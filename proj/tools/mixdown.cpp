#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mixdown/error.hpp"
#include "mixdown/ingest.hpp"
#include "mixdown/langid.hpp"
#include "mixdown/pipeline.hpp"
#include "mixdown/recipe.hpp"
#include "mixdown/stats.hpp"

namespace fs = std::filesystem;
using namespace mixdown;

namespace {

struct CommonArgs {
  std::string recipe;
  std::string out = ".";
  std::string in;
  std::vector<std::string> sources;  // name=path
  std::string name;
  bool no_cache = false;
  int max_in_flight = 0;
  int threads = 0;
};

Recipe recipe_from(const CommonArgs& args, bool required) {
  Recipe recipe;
  if (!args.recipe.empty()) {
    recipe = load_recipe(args.recipe);
  } else if (required) {
    throw Error(ErrorKind::config, "missing_recipe", "--recipe is required for this command");
  }
  apply_env_overrides(recipe);
  if (!args.sources.empty()) {
    recipe.sources.clear();
    for (const auto& spec : args.sources) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorKind::config, "invalid_source", "--source expects name=path, got '" + spec + "'");
      }
      recipe.sources.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
    }
  }
  return recipe;
}

RunOptions options_from(const CommonArgs& args) {
  RunOptions opt;
  opt.out_dir = args.out;
  opt.use_cache = !args.no_cache;
  if (args.max_in_flight > 0) opt.max_in_flight = args.max_in_flight;
  return opt;
}

// Records for a single-stage command: --in dataset, else the recipe's sources
// freshly ingested.
std::vector<Record> input_records(const CommonArgs& args, const Recipe& recipe, std::vector<StageReport>& reports) {
  if (!args.in.empty()) return read_dataset(args.in);
  if (recipe.sources.empty()) {
    throw Error(ErrorKind::config, "missing_input", "give --in <dataset.jsonl>, --source name=path or a recipe with sources");
  }
  auto ingested = stage_ingest(recipe);
  reports.push_back(ingested.report);
  return std::move(ingested.records);
}

void finish_stage(const CommonArgs& args, const Recipe& recipe, std::vector<StageReport>& reports, const StageResult& result,
                  const std::string& default_name) {
  fs::create_directories(args.out);
  emit_stage(args.out, result, args.name.empty() ? default_name : args.name);
  reports.push_back(result.report);
  merge_reports(fs::path(args.out) / "report.json", reports, recipe_summary(recipe));
  std::cerr << result.report.stage << ": " << result.report.input_count << " -> " << result.report.output_count << '\n';
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_recipe_input) {
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_option("--threads", args.threads, "Worker threads for parallel kernels (default: all cores)");
  if (with_recipe_input) {
    cmd->add_option("--recipe", args.recipe, "Recipe TOML file");
    cmd->add_option("--in", args.in, "Input dataset JSONL (metrics read from the .metrics.jsonl sidecar)");
    cmd->add_option("--source", args.sources, "Raw Alpaca source as name=path; replaces the recipe's sources")
        ->take_all();
    cmd->add_option("--name", args.name, "Output dataset name (<out>/<name>.jsonl)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixdown: build instruction-tuning data mixtures from declarative recipes"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* run = app.add_subcommand("run", "Run the full recipe");
  add_common(run, args, false);
  run->add_option("--recipe", args.recipe, "Recipe TOML file")->required();
  run->add_option("--source", args.sources, "Raw Alpaca source as name=path; replaces the recipe's sources")
      ->take_all();
  std::string stop_after;
  bool report_only = false;
  run->add_option("--stage", stop_after, "Stop after this stage and write <stage>.jsonl")
      ->check(CLI::IsMember({"ingest", "dedup", "filter_low", "score", "filter_high", "select"}));
  run->add_flag("--no-cache", args.no_cache, "Do not read or write the on-disk score cache");
  run->add_option("--max-in-flight", args.max_in_flight, "Concurrent scorer requests")->check(CLI::PositiveNumber);
  run->add_flag("--report-only", report_only, "Write report and statistics only, no dataset");

  auto* dedup = app.add_subcommand("dedup", "Drop exact duplicates");
  add_common(dedup, args, true);

  auto* filter = app.add_subcommand("filter", "Apply heuristic (low) or score-based (high) filters");
  add_common(filter, args, true);
  std::string level = "auto";
  filter->add_option("--level", level, "low, high, or auto (high when the input carries scores)")
      ->check(CLI::IsMember({"low", "high", "auto"}))
      ->capture_default_str();

  auto* score = app.add_subcommand("score", "Compute PPL and IFD scores");
  add_common(score, args, true);
  score->add_flag("--no-cache", args.no_cache, "Do not read or write the on-disk score cache");
  score->add_option("--max-in-flight", args.max_in_flight, "Concurrent scorer requests")->check(CLI::PositiveNumber);

  auto* select = app.add_subcommand("select", "Quota, k-center and token-budget selection");
  add_common(select, args, true);

  auto* stats = app.add_subcommand("stats", "Histograms and mixture table of a dataset");
  add_common(stats, args, false);
  stats->add_option("--in", args.in, "Input dataset JSONL")->required();
  stats->add_option("--name", args.name, "Prefix of the written CSV files")->capture_default_str();

  auto* train = app.add_subcommand("train-profile", "Train a language profile from a text corpus");
  std::string code, corpus, profile_out;
  train->add_option("--code", code, "Language code")->required();
  train->add_option("--corpus", corpus, "UTF-8 text corpus")->required()->check(CLI::ExistingFile);
  train->add_option("--output", profile_out, "Profile JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code_for(ErrorKind::config);
  }

  try {
    if (args.threads > 0) omp_set_num_threads(args.threads);

    if (*run) {
      Recipe recipe = recipe_from(args, true);
      RunOptions opt = options_from(args);
      opt.stop_after = stop_after;
      opt.report_only = report_only;
      const auto reports = run_pipeline(recipe, opt);
      for (const auto& r : reports) std::cerr << r.stage << ": " << r.input_count << " -> " << r.output_count << '\n';
    } else if (*dedup) {
      Recipe recipe = recipe_from(args, false);
      std::vector<StageReport> reports;
      auto result = stage_dedup(input_records(args, recipe, reports));
      finish_stage(args, recipe, reports, result, "dedup");
    } else if (*filter) {
      Recipe recipe = recipe_from(args, true);
      std::vector<StageReport> reports;
      auto records = input_records(args, recipe, reports);
      if (level == "auto") {
        const bool scored = !records.empty() && std::all_of(records.begin(), records.end(),
                                                             [](const Record& r) { return r.scores.ppl.has_value(); });
        level = scored ? "high" : "low";
      }
      StageResult result;
      if (level == "low") {
        const auto profiles = recipe.lang_profiles.empty() ? default_profiles() : load_profiles(recipe.lang_profiles);
        result = stage_filter_low(std::move(records), recipe, profiles);
      } else {
        result = stage_filter_high(std::move(records), recipe);
      }
      finish_stage(args, recipe, reports, result, result.report.stage);
    } else if (*score) {
      Recipe recipe = recipe_from(args, true);
      std::vector<StageReport> reports;
      auto records = input_records(args, recipe, reports);
      fs::create_directories(args.out);
      Session session(recipe, options_from(args));
      auto result = stage_score(std::move(records), recipe, session.base_scorer(), session.tuned_scorer(),
                                session.max_in_flight());
      finish_stage(args, recipe, reports, result, "score");
    } else if (*select) {
      Recipe recipe = recipe_from(args, true);
      std::vector<StageReport> reports;
      auto records = input_records(args, recipe, reports);
      RunOptions opt = options_from(args);
      opt.use_cache = false;
      Session session(recipe, opt);
      auto result = stage_select(std::move(records), recipe, session.embedder());
      finish_stage(args, recipe, reports, result, "mixture");
    } else if (*stats) {
      const auto records = read_dataset(args.in);
      const std::string name = args.name.empty() ? "stats" : args.name;
      fs::create_directories(args.out);
      const auto hists = stage_histograms(records);
      write_hist_csv(fs::path(args.out) / (name + ".hist.csv"), hists);
      write_mixture_csv(fs::path(args.out) / (name + ".mixture.csv"), mixture_table(records));
      for (const auto& [source, row] : mixture_table(records)) {
        std::cout << source << '\t' << row.count << " samples\t" << row.tokens << " tokens\n";
      }
    } else if (*train) {
      std::ifstream in(corpus, std::ios::binary);
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      save_profile(train_profile(code, text), profile_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::io);
  }
  return 0;
}
