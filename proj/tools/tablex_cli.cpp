#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "tablex/commands.hpp"

int main(int argc, char** argv) {
  using namespace tablex;
  using namespace tablex::cli;

  CLI::App app{"tablex: table structure extraction and text-to-table linking for HTML reports"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON pipeline configuration");
  app.add_option("--out", out, "output file (directory for extract); standard output when omitted");
  app.add_option("--seed", seed, "seed for random-baseline");
  app.add_flag("--quiet", quiet, "suppress warnings and progress messages");

  std::vector<std::string> inputs;
  std::string model_path;
  std::string pred_path;
  std::string gold_path;
  std::string bank_path;
  std::string task = "tde";

  auto* extract = app.add_subcommand("extract", "parse HTML into document JSON and cell JSONL");
  extract->add_option("inputs", inputs, "HTML files or directories");

  auto* train = app.add_subcommand("train", "train the naive Bayes cell classifier on labeled cell JSONL");
  train->add_option("inputs", inputs, "labeled cell JSONL files");

  auto* build = app.add_subcommand("build-patterns", "mine the row-pattern bank from labeled cell JSONL");
  build->add_option("inputs", inputs, "labeled cell JSONL files");

  auto* classify = app.add_subcommand("classify", "label cells with the baseline model or an adapter");
  classify->add_option("inputs", inputs, "cell JSONL files");
  classify->add_option("--model", model_path, "baseline model JSON (overrides classifier.model_path)");

  auto* correct = app.add_subcommand("correct", "apply row-pattern correction to predictions");
  correct->add_option("predictions", pred_path, "predictions JSONL")->required();
  correct->add_option("--bank", bank_path, "pattern bank JSON")->required();

  auto* link = app.add_subcommand("link", "link description paragraphs to table cells");
  link->add_option("inputs", inputs, "HTML files or directories");

  auto* eval = app.add_subcommand("eval", "score predictions against gold annotations");
  eval->add_option("pred", pred_path, "predicted labels or links")->required();
  eval->add_option("gold", gold_path, "gold labels or links")->required();
  eval->add_option("--task", task, "tde or ttre")->check(CLI::IsMember({"tde", "ttre"}));

  auto* stats = app.add_subcommand("stats", "token-length histogram of cell texts");
  stats->add_option("inputs", inputs, "cell JSONL files");

  auto* random = app.add_subcommand("random-baseline", "seeded uniform-random links");
  random->add_option("inputs", inputs, "HTML files or directories");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  Context ctx;
  ctx.out = out;
  ctx.seed = seed;
  ctx.quiet = quiet;
  if (!config_path.empty()) {
    try {
      ctx.config = load_config(config_path);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code_for(e.code());
    }
  }
  if (!model_path.empty()) {
    ctx.config.classifier.mode = ClassifierMode::Baseline;
    ctx.config.classifier.model_path = model_path;
  }

  if (*extract) return cmd_extract(inputs, ctx);
  if (*train) return cmd_train(inputs, ctx);
  if (*build) return cmd_build_patterns(inputs, ctx);
  if (*classify) return cmd_classify(inputs, ctx);
  if (*correct) return cmd_correct(pred_path, bank_path, ctx);
  if (*link) return cmd_link(inputs, ctx);
  if (*eval) return cmd_eval(pred_path, gold_path, task == "tde" ? EvalTask::Tde : EvalTask::Ttre, ctx);
  if (*stats) return cmd_stats(inputs, ctx);
  if (*random) return cmd_random_baseline(inputs, ctx);
  return kFailure;
}
