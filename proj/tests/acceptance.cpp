// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "oracles/gradcheck.hpp"
#include "oracles/oracles.hpp"
#include "phishguard/advtrain.hpp"
#include "phishguard/cli.hpp"
#include "phishguard/explain.hpp"
#include "phishguard/metrics.hpp"
#include "phishguard/perturb.hpp"
#include "phishguard/privacy.hpp"
#include "phishguard/rng.hpp"
#include "phishguard/synthetic.hpp"

namespace pg = phishguard;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared pipeline on the synthetic corpus.

constexpr std::size_t kCorpusSize = 2000;
const std::vector<double> kLevels{0.05, 0.10, 0.20};

pg::advtrain::TrainConfig acceptance_train_config(std::uint64_t seed, bool fgm) {
  pg::advtrain::TrainConfig t;
  t.lr = 1.0;
  t.epochs = 20;
  t.seed = pg::derive_seed(seed, "train");
  if (fgm) t.fgm = pg::advtrain::FgmConfig{};  // epsilon 0.001, lambda 0.5
  return t;
}

struct SeedRun {
  std::uint64_t seed = 0;
  pg::corpus::Dataset train, val, test;
  pg::tokenize::Vocabulary vocab;
  std::vector<pg::perturb::NoisySet> noisy;
  pg::advtrain::TrainResult baseline, fgm;
  pg::metrics::EvalReport report;
};

SeedRun run_seed(std::uint64_t seed) {
  SeedRun r;
  r.seed = seed;
  const auto raw = pg::synthetic::generate_corpus({kCorpusSize, 0.60, seed});
  pg::cli::RunConfig cfg;
  cfg.seed = seed;
  const pg::cli::Preprocessor prep(cfg);
  std::vector<pg::corpus::EmailRecord> cleaned;
  for (const auto& rec : raw.records()) cleaned.push_back({rec.id, prep(rec.text), rec.label});
  std::tie(r.train, r.val, r.test) = pg::corpus::stratified_split(pg::corpus::Dataset(std::move(cleaned)), cfg.split_spec());

  std::vector<std::string> texts;
  for (const auto& rec : r.train.records()) texts.push_back(rec.text);
  r.vocab = pg::tokenize::build_vocab(texts);
  const auto tr = pg::advtrain::encode_dataset(r.train, r.vocab);
  const auto va = pg::advtrain::encode_dataset(r.val, r.vocab);
  const auto init = pg::model::init_params(r.vocab.size(), pg::model::kDefaultDim, pg::derive_seed(seed, "init"));
  r.baseline = pg::advtrain::train(init, tr, va, acceptance_train_config(seed, false));
  r.fgm = pg::advtrain::train(init, tr, va, acceptance_train_config(seed, true));

  r.noisy = pg::perturb::make_noisy_testsets(r.test, kLevels, pg::derive_seed(seed, "noise"));
  auto base_clf = std::make_shared<pg::model::TextClassifier>(r.vocab, r.baseline.params);
  auto fgm_clf = std::make_shared<pg::model::TextClassifier>(r.vocab, r.fgm.params);
  r.report = pg::metrics::robustness_report(
      {{"baseline", [base_clf](std::string_view t) { return base_clf->predict_proba(t); }},
       {"fgm", [fgm_clf](std::string_view t) { return fgm_clf->predict_proba(t); }}},
      r.test, r.noisy);
  return r;
}

// ---------------------------------------------------------------------------

void criterion_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto inst = oracles::random_instance(0xACCE97 + s);
    const auto chk = oracles::check_gradients(inst.params, inst.ids, inst.label, 1e-5);
    worst = std::max(worst, chk.max_rel);
    checked += chk.checked;
  }
  const double secs = seconds_since(t0);
  report(1, "gradient correctness", worst < 1e-4 && secs < 10.0,
         "max rel err " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " entries, 50 instances, " +
             fmt("%.2f s", secs));
}

void criterion_fgm_norm() {
  pg::Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    pg::model::Matrix g(1 + rng.uniform_index(10), 1 + rng.uniform_index(8));
    const double scale = std::pow(10.0, rng.uniform(-6.0, 6.0));
    for (auto& x : g.data) x = scale * rng.uniform(-1.0, 1.0);
    g.data[0] += scale;  // never all-zero
    const auto d = pg::advtrain::fgm_delta(g, 0.001);
    double s = 0.0;
    for (double x : d.data) s += x * x;
    worst = std::max(worst, std::abs(std::sqrt(s) - 0.001));
  }
  const auto z = pg::advtrain::fgm_delta(pg::model::Matrix(4, 3), 0.001);
  const bool zero_ok = std::all_of(z.data.begin(), z.data.end(), [](double x) { return x == 0.0; });
  report(2, "FGM norm law", worst <= 1e-12 && zero_ok,
         "max | |delta| - eps | = " + fmt("%.2e", worst) + ", zero guard " + (zero_ok ? "exact" : "BROKEN"));
}

void criterion_loss_composition(const SeedRun& r) {
  // A dedicated five-epoch FGM run on the first seed's splits.
  const auto tr = pg::advtrain::encode_dataset(r.train, r.vocab);
  const auto va = pg::advtrain::encode_dataset(r.val, r.vocab);
  auto cfg = acceptance_train_config(r.seed, true);
  cfg.epochs = 5;
  const auto res = pg::advtrain::train(pg::model::init_params(r.vocab.size(), pg::model::kDefaultDim, 1), tr, va, cfg);
  double worst = 0.0;
  for (const auto& s : res.history.steps) worst = std::max(worst, std::abs(s.l_total - (s.l_clean + 0.5 * s.l_adv)));
  report(3, "loss composition", worst <= 1e-12 && !res.history.steps.empty(),
         std::to_string(res.history.steps.size()) + " steps, max |l_total - (l_clean + 0.5 l_adv)| = " +
             fmt("%.2e", worst));
}

void criterion_robustness(const std::vector<SeedRun>& runs, double secs) {
  std::size_t good = 0;
  for (const auto& r : runs) {
    const auto& b = r.report.models[0];
    const auto& f = r.report.models[1];
    const bool clean_ok = b.clean.accuracy >= 0.95 && f.clean.accuracy >= 0.95;
    const bool order_ok = f.noise[1].accuracy >= b.noise[1].accuracy && f.noise[2].accuracy >= b.noise[2].accuracy;
    const bool mono_ok = b.non_increasing && f.non_increasing;
    const bool ok = clean_ok && order_ok && mono_ok;
    good += ok;
    std::printf("       seed %llu  baseline %.4f/%.4f/%.4f/%.4f  fgm %.4f/%.4f/%.4f/%.4f  %s\n",
                static_cast<unsigned long long>(r.seed), b.clean.accuracy, b.noise[0].accuracy, b.noise[1].accuracy,
                b.noise[2].accuracy, f.clean.accuracy, f.noise[0].accuracy, f.noise[1].accuracy, f.noise[2].accuracy,
                ok ? "ok" : (!clean_ok ? "clean<0.95" : (!mono_ok ? "not monotone" : "fgm below baseline")));
  }
  report(4, "robustness ordering", good >= 4 && secs < 300.0,
         std::to_string(good) + "/5 seeds hold (need 4), " + fmt("%.1f s", secs));
}

void criterion_noise_budget(const std::vector<SeedRun>& runs) {
  std::size_t records = 0, bad = 0;
  for (const auto& r : runs) {
    for (const auto& set : r.noisy) {
      for (std::size_t i = 0; i < set.data.size(); ++i) {
        const auto& text = r.test.records()[i].text;
        const auto want =
            static_cast<std::size_t>(std::llround(set.level * static_cast<double>(pg::perturb::eligible_positions(text).size())));
        ++records;
        bad += set.edits[i].size() != want;
      }
    }
  }
  auto pinned = [](const char* in, double level, std::uint64_t seed, const char* want) {
    pg::perturb::NoiseSpec s;
    s.level = level;
    s.seed = seed;
    return pg::perturb::inject_noise(in, s).text == want;
  };
  const bool ex = pinned("account", 0.1, 44, "acount") && pinned("o", 1.0, 0, "0") &&
                  pinned("financial", 0.1, 1916, "finanxcial") && pinned("financial", 0.1, 46, "fianncial");
  report(5, "noise budget", bad == 0 && ex,
         std::to_string(records) + " perturbed records, " + std::to_string(bad) + " off-budget; pinned examples " +
             (ex ? "reproduced" : "MISMATCH"));
}

void criterion_lime() {
  const auto t0 = Clock::now();
  const std::vector<std::string> words{"urgent", "please", "review", "the", "notes", "today", "team", "invoice",
                                       "lunch", "agenda", "verify", "link", "friday", "report"};
  auto has = [](std::string_view text, const std::string& w) {
    for (const auto& t : pg::tokenize::split_tokens(text)) {
      if (t.text == w) return true;
    }
    return false;
  };
  pg::Rng rng(6);
  std::size_t rank_ok = 0, trials = 0;
  double worst_ls = 0.0;
  for (int i = 0; i < 40; ++i) {
    // 2..10 distinct tokens, trigger at a random position.
    std::vector<std::string> pool(words.begin() + 1, words.end());
    rng.shuffle(std::span<std::string>(pool));
    const std::size_t n = 2 + rng.uniform_index(9);
    std::vector<std::string> toks(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n - 1));
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(n)), "urgent");
    std::string text;
    for (const auto& t : toks) text += (text.empty() ? "" : " ") + t;

    const pg::explain::Predictor trig = [&](std::string_view t) -> pg::model::Probs {
      return has(t, "urgent") ? pg::model::Probs{0.01, 0.99} : pg::model::Probs{0.99, 0.01};
    };
    pg::explain::LimeConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    const auto e = pg::explain::lime_explain(trig, text, cfg);
    ++trials;
    rank_ok += e.features[0].token == "urgent" && std::abs(e.features[0].weight) >= 5.0 * std::abs(e.features[1].weight);

    // Exhaustive, unpenalised fit of a graded predictor against the dense solver.
    const std::string w1 = toks[0], w2 = toks[n - 1];
    const pg::explain::Predictor graded = [&](std::string_view t) -> pg::model::Probs {
      const double s = 0.15 + 0.35 * has(t, "urgent") + 0.2 * has(t, w1) + 0.15 * (has(t, w2) && has(t, "urgent"));
      return {1.0 - s, s};
    };
    pg::explain::LimeConfig ex;
    ex.sampling = pg::explain::Sampling::Exhaustive;
    ex.ridge = 0.0;
    ex.top_k = 10;
    const auto got = pg::explain::lime_explain(graded, text, ex);
    const auto feats = pg::explain::lime_features(text);
    std::vector<std::vector<double>> x;
    std::vector<double> y, w;
    for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
      std::vector<double> row(n);
      std::string kept;
      std::size_t removed = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = (bits >> j) & 1U;
        removed += row[j] == 0.0;
        if (row[j] != 0.0) kept += feats[j] + " ";
      }
      x.push_back(row);
      y.push_back(graded(kept)[static_cast<std::size_t>(got.label)]);
      const double d = static_cast<double>(removed) / static_cast<double>(n);
      w.push_back(std::exp(-d * d / (0.75 * 0.75)));
    }
    const auto ref = oracles::weighted_least_squares(x, y, w);
    std::map<std::string, double> coef;
    for (const auto& f : got.features) coef[f.token] = f.weight;
    for (std::size_t j = 0; j < n; ++j) {
      worst_ls = std::max(worst_ls, std::abs(coef.at(feats[j]) - ref.coef(static_cast<Eigen::Index>(j))));
    }
  }
  const double secs = seconds_since(t0);
  report(6, "LIME oracle recovery", rank_ok == trials && worst_ls < 1e-6 && secs < 30.0,
         "trigger rank-1 with 5x margin in " + std::to_string(rank_ok) + "/" + std::to_string(trials) +
             ", max |coef - dense LS| " + fmt("%.2e", worst_ls) + ", " + fmt("%.2f s", secs));
}

void criterion_metrics() {
  pg::Rng rng(7);
  std::size_t bad = 0;
  for (int s = 0; s < 1000; ++s) {
    const std::size_t n = 1 + rng.uniform_index(200);
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.uniform_index(2));
      y[i] = static_cast<int>(rng.uniform_index(2));
    }
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += p[i] == 1 && y[i] == 1;
      tn += p[i] == 0 && y[i] == 0;
      fp += p[i] == 1 && y[i] == 0;
      fn += p[i] == 0 && y[i] == 1;
    }
    const double acc = (tp + tn) / static_cast<double>(n);
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const auto cm = pg::metrics::confusion(p, y);
    bad += std::abs(pg::metrics::accuracy(cm) - acc) > 1e-12;
    bad += std::abs(pg::metrics::precision(cm).value - prec) > 1e-12;
    bad += std::abs(pg::metrics::recall(cm).value - rec) > 1e-12;
    bad += std::abs(pg::metrics::f1(cm).value - f) > 1e-12;
  }
  double worst_auc = 0.0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t n = 2 + rng.uniform_index(150);
    std::vector<double> sc(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      sc[i] = rng.bernoulli(0.3) ? static_cast<double>(rng.uniform_index(5)) / 4.0 : rng.uniform01();
      y[i] = static_cast<int>(rng.uniform_index(2));
    }
    y[0] = 0;
    y[1] = 1;
    worst_auc = std::max(worst_auc, std::abs(pg::metrics::auc(sc, y) - oracles::auc_pairs(sc, y)));
  }
  report(7, "metrics equivalence", bad == 0 && worst_auc <= 1e-12,
         std::to_string(bad) + " mismatches over 1000 scenarios, max AUC diff " + fmt("%.2e", worst_auc));
}

void criterion_masking() {
  auto gaz = std::make_shared<pg::privacy::Gazetteer>(pg::privacy::load_gazetteer(pg::cli::data_dir() / "names.txt"));
  const auto rules = pg::privacy::default_rules(gaz);
  const std::string in =
      "Hi Alexis, your bank account 1234567890 has been suspended. Submit your PIN immediately to renew your access.";
  const std::string want =
      "Hi [NAME], your bank account [ACCOUNT] has been suspended. Submit your PIN immediately to renew your access.";
  const bool golden = pg::privacy::mask_pii(in, rules) == want;

  const std::vector<std::string> pieces{"Hi", "Dear", "hello", "Alexis", "Sarah", "Bob", "your", "account", "123456",
                                        "9876543210", "555-0100", "(555) 123-4567", "+14155550100", "x@y.com",
                                        "first.last@mail.example", "@", ".", "-", "[NAME]", ",", "!", "12", "Team"};
  pg::Rng rng(8);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const std::size_t n = 1 + rng.uniform_index(14);
    for (std::size_t k = 0; k < n; ++k) {
      s += pieces[rng.uniform_index(pieces.size())];
      if (rng.bernoulli(0.8)) s += ' ';
    }
    const auto once = pg::privacy::mask_pii(s, rules);
    bad += pg::privacy::mask_pii(once, rules) != once;
  }
  report(8, "masking golden + idempotence", golden && bad == 0,
         std::string("golden ") + (golden ? "byte-exact" : "MISMATCH") + ", " + std::to_string(bad) +
             "/1000 fuzz strings not idempotent");
}

void criterion_stratification(const std::vector<SeedRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    std::set<std::string> ids;
    std::size_t total = 0;
    for (const auto* part : {&r.train, &r.val, &r.test}) {
      const double m = static_cast<double>(part->size());
      const auto& c = part->class_counts();
      ok &= std::abs(static_cast<double>(c[0]) - 0.6 * m) <= 1.0 && std::abs(static_cast<double>(c[1]) - 0.4 * m) <= 1.0;
      for (const auto& rec : part->records()) ids.insert(rec.id);
      total += part->size();
    }
    ok &= ids.size() == kCorpusSize && total == kCorpusSize;
  }
  const auto& c = runs[0];
  detail = "splits " + std::to_string(c.train.size()) + "/" + std::to_string(c.val.size()) + "/" +
           std::to_string(c.test.size()) + " (safe " + std::to_string(c.train.class_counts()[0]) + "/" +
           std::to_string(c.val.class_counts()[0]) + "/" + std::to_string(c.test.class_counts()[0]) + "), " +
           std::to_string(runs.size()) + " seeds checked";
  report(9, "stratification", ok, detail);
}

void criterion_grounding(const SeedRun& r) {
  const pg::model::TextClassifier clf(r.vocab, r.fgm.params);
  const pg::explain::Predictor pred = [&](std::string_view t) { return clf.predict_proba(t); };
  const auto lex = pg::explain::load_cue_lexicons(pg::cli::data_dir() / "cues");
  std::size_t grounded = 0, deterministic = 0;
  const auto& recs = r.test.records();
  for (std::size_t i = 0; i < 100; ++i) {
    pg::explain::LimeConfig cfg;
    cfg.n_samples = 200;
    cfg.seed = i;
    const auto& text = recs[i % recs.size()].text;
    const auto e = pg::explain::lime_explain(pred, text, cfg);
    const auto n1 = pg::explain::generate_narrative(e, pg::explain::NarrativeMode::Template, lex);
    std::set<std::string> feats;
    for (const auto& f : e.features) feats.insert(f.token);
    bool ok = !n1.grounding_tokens.empty();
    for (const auto& t : n1.grounding_tokens) ok &= feats.count(t) > 0;
    grounded += ok;
    const auto e2 = pg::explain::lime_explain(pred, text, cfg);
    const auto n2 = pg::explain::generate_narrative(e2, pg::explain::NarrativeMode::Template, lex);
    deterministic += n1.text == n2.text && pg::explain::to_json(e, n1).dump() == pg::explain::to_json(e2, n2).dump();
  }
  report(10, "narrative grounding", grounded == 100 && deterministic == 100,
         std::to_string(grounded) + "/100 grounded, " + std::to_string(deterministic) + "/100 byte-identical reruns");
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_fgm_norm();

  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (std::uint64_t s = 1; s <= 5; ++s) runs.push_back(run_seed(s));
  const double secs = seconds_since(t0);

  criterion_loss_composition(runs[0]);
  criterion_robustness(runs, secs);
  criterion_noise_budget(runs);
  criterion_lime();
  criterion_metrics();
  criterion_masking();
  criterion_stratification(runs);
  criterion_grounding(runs[0]);

  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
