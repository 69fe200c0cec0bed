#include "phishguard/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "phishguard/error.hpp"
#include "phishguard/metrics.hpp"
#include "phishguard/model.hpp"
#include "phishguard/perturb.hpp"
#include "phishguard/rng.hpp"
#include "phishguard/synthetic.hpp"

#ifndef PHISHGUARD_DATA_DIR
#define PHISHGUARD_DATA_DIR "data"
#endif

namespace phishguard::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("cli", msg); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) fail(what + " not found: " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write " + p.string());
  return out;
}

corpus::Dataset load_split(const fs::path& p) {
  require_file(p, "prepared split");
  return corpus::load_dataset(p, corpus::Format::Jsonl).dataset;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

perturb::NoiseSpec noise_base(const RunConfig& cfg) {
  perturb::NoiseSpec spec;
  spec.homoglyphs = perturb::load_homoglyphs(cfg.homoglyphs.value_or(data_dir() / "homoglyphs.tsv"));
  return spec;
}

std::uint64_t noise_seed(const RunConfig& cfg) { return derive_seed(cfg.seed, "noise"); }

explain::CueLexicons cue_lexicons(const RunConfig& cfg) {
  return explain::load_cue_lexicons(cfg.cues_dir.value_or(data_dir() / "cues"));
}

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

const std::set<std::string> kKnownKeys{
    "dataset",  "format",     "text_col",   "label_col",  "id_col",       "train_frac", "val_frac",
    "test_frac", "seed",      "masking",    "gazetteer",  "min_freq",     "max_vocab",  "max_len",
    "dim",      "lr",         "epochs",     "batch_size", "grad_accum",   "epsilon",    "lambda",
    "noise_levels", "homoglyphs", "lime_samples", "kernel_width", "top_k", "ridge",    "cues_dir",
    "gen_endpoint", "output_dir"};

}  // namespace

fs::path data_dir() { return PHISHGUARD_DATA_DIR; }

void RunConfig::validate() const {
  split_spec().validate();
  train_config(true).validate();
  lime_config().validate();
  if (dim == 0) fail("dim must be positive");
  if (max_len == 0) fail("max_len must be positive");
  if (min_freq == 0) fail("min_freq must be at least 1");
  if (max_vocab != 0 && max_vocab < 3) fail("max_vocab must leave room for at least one word");
  for (double l : noise_levels) {
    if (!(l >= 0.0 && l <= 1.0)) fail("noise level " + fmt("%g", l) + " outside [0, 1]");
  }
  if (gazetteer && !fs::is_regular_file(*gazetteer)) fail("gazetteer not found: " + gazetteer->string());
  if (homoglyphs && !fs::is_regular_file(*homoglyphs)) fail("homoglyph table not found: " + homoglyphs->string());
  if (cues_dir && !fs::is_directory(*cues_dir)) fail("cue directory not found: " + cues_dir->string());
  if (output_dir.empty()) fail("output_dir must be set");
}

advtrain::TrainConfig RunConfig::train_config(bool fgm) const {
  advtrain::TrainConfig t;
  t.lr = lr;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.grad_accum = grad_accum;
  t.seed = derive_seed(seed, "train");
  if (fgm) t.fgm = advtrain::FgmConfig{epsilon, lambda};
  return t;
}

corpus::SplitSpec RunConfig::split_spec() const { return {train_frac, val_frac, test_frac, seed}; }

explain::LimeConfig RunConfig::lime_config() const {
  explain::LimeConfig l;
  l.n_samples = lime_samples;
  l.kernel_width = kernel_width;
  l.top_k = top_k;
  l.ridge = ridge;
  l.seed = derive_seed(seed, "lime");
  return l;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.count(key)) fail("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("format") && !j.at("format").is_null()) {
      c.format = corpus::parse_format(j.at("format").get<std::string>());
    }
    read_key(j, "text_col", c.columns.text_col);
    read_key(j, "label_col", c.columns.label_col);
    read_key(j, "id_col", c.columns.id_col);
    read_key(j, "train_frac", c.train_frac);
    read_key(j, "val_frac", c.val_frac);
    read_key(j, "test_frac", c.test_frac);
    read_key(j, "seed", c.seed);
    read_key(j, "masking", c.masking);
    if (j.contains("gazetteer") && !j.at("gazetteer").is_null()) c.gazetteer = j.at("gazetteer").get<std::string>();
    read_key(j, "min_freq", c.min_freq);
    read_key(j, "max_vocab", c.max_vocab);
    read_key(j, "max_len", c.max_len);
    read_key(j, "dim", c.dim);
    read_key(j, "lr", c.lr);
    read_key(j, "epochs", c.epochs);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "grad_accum", c.grad_accum);
    read_key(j, "epsilon", c.epsilon);
    read_key(j, "lambda", c.lambda);
    read_key(j, "noise_levels", c.noise_levels);
    if (j.contains("homoglyphs") && !j.at("homoglyphs").is_null()) c.homoglyphs = j.at("homoglyphs").get<std::string>();
    read_key(j, "lime_samples", c.lime_samples);
    read_key(j, "kernel_width", c.kernel_width);
    read_key(j, "top_k", c.top_k);
    read_key(j, "ridge", c.ridge);
    if (j.contains("cues_dir") && !j.at("cues_dir").is_null()) c.cues_dir = j.at("cues_dir").get<std::string>();
    read_opt(j, "gen_endpoint", c.gen_endpoint);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    fail(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = config_from_json(j);
  // Relative paths in a config file are relative to the file itself.
  const fs::path base = path.parent_path();
  auto rebase = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  rebase(c.dataset);
  rebase(c.output_dir);
  if (c.gazetteer) rebase(*c.gazetteer);
  if (c.homoglyphs) rebase(*c.homoglyphs);
  if (c.cues_dir) rebase(*c.cues_dir);
  return c;
}

json config_to_json(const RunConfig& c) {
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
  return {{"dataset", c.dataset.string()},
          {"format", c.format ? json(*c.format == corpus::Format::Csv ? "csv" : "jsonl") : json(nullptr)},
          {"text_col", c.columns.text_col},
          {"label_col", c.columns.label_col},
          {"id_col", c.columns.id_col},
          {"train_frac", c.train_frac},
          {"val_frac", c.val_frac},
          {"test_frac", c.test_frac},
          {"seed", c.seed},
          {"masking", c.masking},
          {"gazetteer", opt_path(c.gazetteer)},
          {"min_freq", c.min_freq},
          {"max_vocab", c.max_vocab},
          {"max_len", c.max_len},
          {"dim", c.dim},
          {"lr", c.lr},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"grad_accum", c.grad_accum},
          {"epsilon", c.epsilon},
          {"lambda", c.lambda},
          {"noise_levels", c.noise_levels},
          {"homoglyphs", opt_path(c.homoglyphs)},
          {"lime_samples", c.lime_samples},
          {"kernel_width", c.kernel_width},
          {"top_k", c.top_k},
          {"ridge", c.ridge},
          {"cues_dir", opt_path(c.cues_dir)},
          {"gen_endpoint", c.gen_endpoint ? json(*c.gen_endpoint) : json(nullptr)},
          {"output_dir", c.output_dir.string()}};
}

Preprocessor::Preprocessor(const RunConfig& cfg) {
  if (!cfg.masking) return;
  auto gaz = std::make_shared<privacy::Gazetteer>(
      privacy::load_gazetteer(cfg.gazetteer.value_or(data_dir() / "names.txt")));
  rules_ = privacy::default_rules(std::move(gaz));
}

std::string Preprocessor::operator()(std::string_view raw) const {
  if (rules_.empty()) return tokenize::normalize(raw);
  return tokenize::normalize(privacy::mask_pii(raw, rules_));
}

fs::path Layout::noisy(double level) const { return root / ("test.noise-" + fmt("%.2f", level) + ".jsonl"); }

int cmd_prepare(const RunConfig& cfg, Io io) {
  cfg.validate();
  if (cfg.dataset.empty()) fail("no dataset configured");
  require_file(cfg.dataset, "dataset");
  const auto format = cfg.format.value_or(corpus::format_from_path(cfg.dataset));
  auto loaded = corpus::load_dataset(cfg.dataset, format, cfg.columns);
  if (loaded.dataset.empty()) fail("dataset has no usable records");

  const Preprocessor prep(cfg);
  std::vector<corpus::EmailRecord> cleaned;
  cleaned.reserve(loaded.dataset.size());
  for (const auto& r : loaded.dataset.records()) {
    try {
      cleaned.push_back({r.id, prep(r.text), r.label});
    } catch (const PipelineError& e) {
      throw PipelineError(e.module(), "record '" + r.id + "': " + e.what());
    }
  }
  const corpus::Dataset all(std::move(cleaned));
  auto [train, val, test] = corpus::stratified_split(all, cfg.split_spec());

  const Layout lay{cfg.output_dir};
  fs::create_directories(lay.root);
  corpus::write_jsonl(train, lay.train());
  corpus::write_jsonl(val, lay.val());
  corpus::write_jsonl(test, lay.test());

  std::vector<std::string> texts;
  for (const auto& r : train.records()) texts.push_back(r.text);
  const auto vocab = tokenize::build_vocab(texts, cfg.min_freq, cfg.max_vocab);
  tokenize::save_vocab(vocab, lay.vocab());

  io.out << "split   records    safe%  phishing%\n";
  auto row = [&](const char* name, const corpus::Dataset& d) {
    const auto r = d.class_ratio();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-6s %8zu %8.2f %10.2f\n", name, d.size(), 100.0 * r[0], 100.0 * r[1]);
    io.out << buf;
  };
  row("all", all);
  row("train", train);
  row("val", val);
  row("test", test);
  if (loaded.skipped_empty > 0) io.out << "skipped " << loaded.skipped_empty << " records with empty text\n";
  io.out << "vocabulary: " << vocab.size() << " tokens\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, bool fgm, Io io) {
  cfg.validate();
  const Layout lay{cfg.output_dir};
  require_file(lay.vocab(), "vocabulary (run prepare first)");
  const auto vocab = tokenize::load_vocab(lay.vocab());
  const auto train_set = advtrain::encode_dataset(load_split(lay.train()), vocab, cfg.max_len);
  const auto val_set = advtrain::encode_dataset(load_split(lay.val()), vocab, cfg.max_len);

  const std::string name = fgm ? "fgm" : "baseline";
  auto params = model::init_params(vocab.size(), cfg.dim, derive_seed(cfg.seed, "init"));

  auto hist = open_out(lay.history(name));
  auto on_epoch = [&](const advtrain::EpochRecord& e) {
    hist << json{{"epoch", e.epoch},
                 {"l_clean", e.l_clean},
                 {"l_adv", e.l_adv},
                 {"l_total", e.l_total},
                 {"val_accuracy", e.val_accuracy},
                 {"updates", e.updates}}
                .dump()
         << '\n';
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%s] epoch %zu  l_clean %.4f  l_adv %.4f  l_total %.4f  val_acc %.4f  (%.2fs)\n",
                  name.c_str(), e.epoch, e.l_clean, e.l_adv, e.l_total, e.val_accuracy, e.seconds);
    io.err << buf;
  };
  const auto result = advtrain::train(std::move(params), train_set, val_set, cfg.train_config(fgm), on_epoch);

  auto steps = open_out(lay.steps(name));
  for (std::size_t i = 0; i < result.history.steps.size(); ++i) {
    const auto& s = result.history.steps[i];
    steps << json{{"step", i}, {"l_clean", s.l_clean}, {"l_adv", s.l_adv}, {"l_total", s.l_total}}.dump() << '\n';
  }
  model::save_checkpoint(result.params, lay.checkpoint(name));
  io.out << name << ": best epoch " << result.history.best_epoch << ", val accuracy "
         << fmt("%.4f", result.history.epochs.at(result.history.best_epoch - 1).val_accuracy) << ", checkpoint "
         << lay.checkpoint(name).string() << '\n';
  return 0;
}

int cmd_perturb(const RunConfig& cfg, Io io) {
  cfg.validate();
  const Layout lay{cfg.output_dir};
  const auto test = load_split(lay.test());
  const auto sets = perturb::make_noisy_testsets(test, cfg.noise_levels, noise_seed(cfg), noise_base(cfg));
  for (const auto& s : sets) {
    perturb::write_noisy_jsonl(s, lay.noisy(s.level));
    std::size_t edits = 0;
    for (const auto& e : s.edits) edits += e.size();
    io.out << "level " << fmt("%.2f", s.level) << ": " << s.data.size() << " records, " << edits << " edits -> "
           << lay.noisy(s.level).string() << '\n';
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, Io io) {
  if (checkpoints.empty()) fail("eval needs at least one checkpoint");
  cfg.validate();
  const Layout lay{cfg.output_dir};
  require_file(lay.vocab(), "vocabulary (run prepare first)");
  const auto vocab = tokenize::load_vocab(lay.vocab());
  const auto test = load_split(lay.test());
  // Same seeds as `perturb`, so these sets match the files it writes.
  const auto sets = perturb::make_noisy_testsets(test, cfg.noise_levels, noise_seed(cfg), noise_base(cfg));

  std::vector<model::TextClassifier> classifiers;
  std::vector<metrics::ModelUnderTest> models;
  classifiers.reserve(checkpoints.size());
  for (const auto& ck : checkpoints) {
    require_file(ck, "checkpoint");
    classifiers.emplace_back(vocab, model::load_checkpoint(ck), cfg.max_len);
  }
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    std::string name = checkpoints[i].filename().string();
    if (const auto at = name.find(".ckpt"); at != std::string::npos) name.resize(at);
    const auto* clf = &classifiers[i];
    models.push_back({name, [clf](std::string_view t) { return clf->predict_proba(t); }});
  }
  auto report = metrics::robustness_report(models, test, sets);
  report.metadata = {{"test_records", test.size()}, {"seed", cfg.seed}};

  fs::create_directories(lay.root);
  open_out(lay.report_json()) << metrics::to_json(report).dump(2) << '\n';
  const std::string text = metrics::render_text(report);
  open_out(lay.report_txt()) << text;
  io.out << text;
  return 0;
}

int cmd_explain(const RunConfig& cfg, const ExplainRequest& req, Io io) {
  cfg.validate();
  if (req.text.has_value() == req.input.has_value()) fail("explain needs exactly one of --text or --input");
  std::string raw;
  if (req.text) {
    raw = *req.text;
  } else {
    std::ifstream in(*req.input, std::ios::binary);
    if (!in) fail("cannot read input " + req.input->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    raw = ss.str();
  }
  const Layout lay{cfg.output_dir};
  const std::string text = Preprocessor(cfg)(raw);
  if (text.empty()) fail("input text is empty");

  require_file(lay.vocab(), "vocabulary (run prepare first)");
  require_file(req.checkpoint, "checkpoint");
  const model::TextClassifier clf(tokenize::load_vocab(lay.vocab()), model::load_checkpoint(req.checkpoint),
                                  cfg.max_len);
  const auto e = explain::lime_explain([&](std::string_view t) { return clf.predict_proba(t); }, text,
                                       cfg.lime_config());
  explain::RemoteOptions remote;
  if (cfg.gen_endpoint) remote.endpoint = *cfg.gen_endpoint;
  const auto n = explain::generate_narrative(
      e, cfg.gen_endpoint ? explain::NarrativeMode::Remote : explain::NarrativeMode::Template, cue_lexicons(cfg),
      remote);
  if (!n.warning.empty()) io.err << "warning: " << n.warning << '\n';

  const json doc = explain::to_json(e, n);
  fs::create_directories(lay.root);
  open_out(lay.explanation()) << doc.dump(2) << '\n';
  if (req.json) {
    io.out << doc.dump(2) << '\n';
  } else {
    io.out << "verdict:    " << explain::verdict_name(e.label) << '\n';
    io.out << "confidence: " << explain::format_confidence(e.confidence) << '\n';
    io.out << "top tokens:";
    for (const auto& f : e.features) io.out << ' ' << f.token << '(' << fmt("%+.3f", f.weight) << ')';
    io.out << '\n' << "narrative:  " << n.text << '\n';
  }
  return e.label == corpus::kPhishing ? 2 : 0;
}

int cmd_report(const RunConfig& cfg, Io io) {
  const Layout lay{cfg.output_dir};
  require_file(lay.report_json(), "report (run eval first)");
  std::ifstream in(lay.report_json());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("report is not valid JSON: " + std::string(e.what()));
  }
  io.out << metrics::render_text(metrics::report_from_json(j));
  return 0;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const fs::path& path, Io io) {
  const auto d = synthetic::generate_corpus({n, 0.60, seed});
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (corpus::format_from_path(path) == corpus::Format::Jsonl) {
    corpus::write_jsonl(d, path);
  } else {
    auto out = open_out(path);
    out << "id,text,label\n";
    for (const auto& r : d.records()) {
      std::string q;
      for (char c : r.text) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
      }
      out << r.id << ",\"" << q << "\"," << corpus::label_name(r.label) << '\n';
    }
  }
  io.out << "wrote " << d.size() << " records (" << d.class_counts()[0] << " safe, " << d.class_counts()[1]
         << " phishing) to " << path.string() << '\n';
  return 0;
}

}  // namespace phishguard::cli
