#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phishguard/cli.hpp"
#include "phishguard/error.hpp"

namespace pc = phishguard::cli;

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::vector<double> noise_levels;
  std::string gen_endpoint;
  std::string names_file;
  bool no_mask = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run config");
  cmd->add_option("-o,--out", o.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "master seed");
}

pc::RunConfig resolve(const Overrides& o) {
  pc::RunConfig cfg = o.config.empty() ? pc::RunConfig{} : pc::load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.lr) cfg.lr = *o.lr;
  if (!o.noise_levels.empty()) cfg.noise_levels = o.noise_levels;
  if (!o.gen_endpoint.empty()) cfg.gen_endpoint = o.gen_endpoint;
  if (!o.names_file.empty()) cfg.gazetteer = o.names_file;
  if (o.no_mask) cfg.masking = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phishing classifier pipeline: prepare, train, evaluate, perturb and explain"};
  app.require_subcommand(1);
  Overrides o;
  bool fgm = false;
  std::vector<std::string> checkpoints;
  pc::ExplainRequest req;
  std::string text, input, checkpoint;
  std::size_t synth_n = 2000;
  std::string synth_path;

  auto* prepare = app.add_subcommand("prepare", "mask, normalize and split the dataset; build the vocabulary");
  add_common(prepare, o);
  prepare->add_option("--dataset", o.dataset, "CSV or JSONL dataset");
  prepare->add_flag("--no-mask", o.no_mask, "skip PII masking");
  prepare->add_option("--names-file", o.names_file, "gazetteer of given names, one per line");

  auto* train = app.add_subcommand("train", "train a classifier on the prepared splits");
  add_common(train, o);
  train->add_flag("--fgm", fgm, "enable adversarial training in embedding space");
  train->add_option("--epsilon", o.epsilon, "perturbation radius");
  train->add_option("--lambda", o.lambda, "adversarial loss weight");
  train->add_option("--epochs", o.epochs, "training epochs");
  train->add_option("--lr", o.lr, "learning rate");

  auto* perturb = app.add_subcommand("perturb", "write character-noise copies of the test split");
  add_common(perturb, o);
  perturb->add_option("--noise-levels", o.noise_levels, "comma-separated noise levels")->delimiter(',');

  auto* eval = app.add_subcommand("eval", "clean metrics and accuracy under noise for each checkpoint");
  add_common(eval, o);
  eval->add_option("checkpoints", checkpoints, "checkpoint files")->required();
  eval->add_option("--noise-levels", o.noise_levels, "comma-separated noise levels")->delimiter(',');

  auto* expl = app.add_subcommand("explain", "classify one email and explain the verdict");
  add_common(expl, o);
  expl->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* text_opt = expl->add_option("--text", text, "email text");
  auto* input_opt = expl->add_option("--input", input, "file holding the email text");
  text_opt->excludes(input_opt);
  expl->add_flag("--json", req.json, "print the JSON document");
  expl->add_option("--names-file", o.names_file, "gazetteer of given names, one per line");
  expl->add_option("--gen-endpoint", o.gen_endpoint, "http endpoint of a text generator");

  auto* report = app.add_subcommand("report", "print the tables of a saved evaluation report");
  add_common(report, o);

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic corpus");
  synth->add_option("path", synth_path, "output .csv or .jsonl")->required();
  synth->add_option("-n,--count", synth_n, "number of emails");
  synth->add_option("--seed", o.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  const pc::Io io{std::cout, std::cerr};
  try {
    if (synth->parsed()) return pc::cmd_synth(synth_n, o.seed.value_or(42), synth_path, io);
    const auto cfg = resolve(o);
    if (prepare->parsed()) return pc::cmd_prepare(cfg, io);
    if (train->parsed()) return pc::cmd_train(cfg, fgm, io);
    if (perturb->parsed()) return pc::cmd_perturb(cfg, io);
    if (eval->parsed()) {
      return pc::cmd_eval(cfg, {checkpoints.begin(), checkpoints.end()}, io);
    }
    if (expl->parsed()) {
      req.checkpoint = checkpoint;
      if (*text_opt) req.text = text;
      if (*input_opt) req.input = input;
      return pc::cmd_explain(cfg, req, io);
    }
    if (report->parsed()) return pc::cmd_report(cfg, io);
  } catch (const phishguard::PipelineError& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
