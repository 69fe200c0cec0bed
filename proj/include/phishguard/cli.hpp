#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "phishguard/advtrain.hpp"
#include "phishguard/corpus.hpp"
#include "phishguard/explain.hpp"
#include "phishguard/privacy.hpp"
#include "phishguard/tokenize.hpp"

namespace phishguard::cli {

namespace fs = std::filesystem;

/// Everything a pipeline run depends on. One seed drives every random
/// stage; stages derive their own streams from it.
struct RunConfig {
  fs::path dataset;
  std::optional<corpus::Format> format;  // guessed from the extension when empty
  corpus::LoadOptions columns;
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 42;

  bool masking = true;
  std::optional<fs::path> gazetteer;  // defaults to the bundled names list

  std::size_t min_freq = 1;
  std::size_t max_vocab = 0;
  std::size_t max_len = tokenize::kDefaultMaxLen;
  std::size_t dim = 32;

  double lr = 0.1;
  std::size_t epochs = 5;
  std::size_t batch_size = 4;
  std::size_t grad_accum = 8;
  double epsilon = 0.001;
  double lambda = 0.5;

  std::vector<double> noise_levels{0.05, 0.10, 0.20};
  std::optional<fs::path> homoglyphs;

  std::size_t lime_samples = 500;
  double kernel_width = 0.75;
  std::size_t top_k = 8;
  double ridge = 1e-3;
  std::optional<fs::path> cues_dir;
  std::optional<std::string> gen_endpoint;

  fs::path output_dir = "runs/default";

  void validate() const;
  advtrain::TrainConfig train_config(bool fgm) const;
  corpus::SplitSpec split_spec() const;
  explain::LimeConfig lime_config() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const fs::path& path);
nlohmann::json config_to_json(const RunConfig& c);

/// Directory holding names.txt, homoglyphs.tsv and cues/.
fs::path data_dir();

/// Applies masking (when enabled) and then normalization; the one text
/// path shared by prepare and explain.
class Preprocessor {
 public:
  explicit Preprocessor(const RunConfig& cfg);
  std::string operator()(std::string_view raw) const;

 private:
  std::vector<privacy::MaskRule> rules_;  // empty when masking is off
};

/// Pipeline artifact names inside the output directory.
struct Layout {
  fs::path root;
  fs::path train() const { return root / "train.jsonl"; }
  fs::path val() const { return root / "val.jsonl"; }
  fs::path test() const { return root / "test.jsonl"; }
  fs::path vocab() const { return root / "vocab.json"; }
  fs::path checkpoint(const std::string& name) const { return root / (name + ".ckpt.json"); }
  fs::path history(const std::string& name) const { return root / (name + ".history.jsonl"); }
  fs::path steps(const std::string& name) const { return root / (name + ".steps.jsonl"); }
  fs::path noisy(double level) const;
  fs::path report_json() const { return root / "report.json"; }
  fs::path report_txt() const { return root / "report.txt"; }
  fs::path explanation() const { return root / "explanation.json"; }
};

/// Console sinks; wall-clock timings only ever go to `err`.
struct Io {
  std::ostream& out;
  std::ostream& err;
};

/// Commands return a process exit code and throw PipelineError on failure.
int cmd_prepare(const RunConfig& cfg, Io io);
int cmd_train(const RunConfig& cfg, bool fgm, Io io);
int cmd_perturb(const RunConfig& cfg, Io io);
/// `checkpoints` are paths; each model is named after its file stem.
int cmd_eval(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, Io io);

struct ExplainRequest {
  fs::path checkpoint;
  std::optional<std::string> text;
  std::optional<fs::path> input;
  bool json = false;  // print the JSON document instead of the summary
};
/// Exit code 2 when the verdict is PHISHING, 0 otherwise.
int cmd_explain(const RunConfig& cfg, const ExplainRequest& req, Io io);
int cmd_report(const RunConfig& cfg, Io io);
/// Writes a synthetic corpus to `path` (CSV or JSONL by extension).
int cmd_synth(std::size_t n, std::uint64_t seed, const fs::path& path, Io io);

}  // namespace phishguard::cli
