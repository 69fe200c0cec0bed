#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "phishguard/model.hpp"

namespace phishguard::explain {

/// Text -> class probabilities. Must accept any subset of the input's tokens,
/// including none at all.
using Predictor = std::function<model::Probs(std::string_view)>;

enum class Sampling {
  Random,      // n_samples masks, the first one all-ones
  Exhaustive,  // every one of the 2^L masks; L <= 20
};

struct LimeConfig {
  std::size_t n_samples = 500;
  double kernel_width = 0.75;
  std::size_t top_k = 8;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::Random;

  void validate() const;
};

struct FeatureWeight {
  std::string token;
  double weight = 0.0;

  bool operator==(const FeatureWeight&) const = default;
};

struct Explanation {
  int label = 0;
  double confidence = 0.0;
  std::vector<FeatureWeight> features;  // |weight| descending, at most top_k
  double coverage = 0.0;                // weighted R^2 of the surrogate
  double intercept = 0.0;
  std::size_t n_features = 0;           // distinct tokens in the text

  bool operator==(const Explanation&) const = default;
};

/// Weighted linear least squares with an unpenalised intercept:
/// minimises sum_i w_i (y_i - b - x_i.beta)^2 + ridge * |beta|^2.
struct Surrogate {
  std::vector<double> coef;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// `x` is n x L. Throws when the system is singular (only possible with
/// ridge == 0).
Surrogate fit_weighted_ridge(const model::Matrix& x, std::span<const double> y,
                             std::span<const double> w, double ridge);

/// exp(-D^2 / width^2) with D the fraction of features removed.
double proximity_kernel(double removed_fraction, double kernel_width);

/// Distinct tokens of `text` in first-occurrence order.
std::vector<std::string> lime_features(std::string_view text);

/// Copy of `text` with every occurrence of each dropped feature replaced by
/// a single space. `keep` is indexed like lime_features(text).
std::string render_masked(std::string_view text, const std::vector<bool>& keep);

/// Explains predictor's decision on `text` by sampling token-presence masks,
/// weighting them by proximity to the full text and fitting a weighted ridge
/// surrogate to the predicted-class probability. Duplicate tokens share one
/// feature. A single-token text is fit from its two possible masks.
Explanation lime_explain(const Predictor& predictor, std::string_view text, const LimeConfig& cfg);

// --- plain-language narrative -------------------------------------------

enum class CueFamily { Urgency = 0, Credential = 1, Financial = 2, Link = 3 };

inline constexpr std::size_t kCueFamilyCount = 4;

std::string_view cue_name(CueFamily family);

using CueLexicons = std::array<std::unordered_set<std::string>, kCueFamilyCount>;

CueLexicons default_cue_lexicons();
CueLexicons empty_cue_lexicons();

/// Reads urgency.txt, credential.txt, financial.txt and link.txt (one
/// lowercase word per line) from `dir`.
CueLexicons load_cue_lexicons(const std::filesystem::path& dir);

/// Cue families hit by any feature token, in enum order.
std::vector<CueFamily> match_cues(const Explanation& e, const CueLexicons& lexicons);

std::string_view verdict_name(int label);

/// Two decimals, as shown to users ("0.99", "1.00").
std::string format_confidence(double confidence);

struct Narrative {
  std::string text;
  std::vector<CueFamily> cues;
  std::vector<std::string> grounding_tokens;
  bool used_fallback = false;
  std::string warning;
};

enum class NarrativeMode { Template, Remote };

struct RemoteOptions {
  std::string endpoint;  // http://host[:port]/path
  int max_tokens = 128;
  int timeout_seconds = 10;
};

/// Deterministic: verdict sentence, cue sentence, then the grounded key-token
/// list "Key tokens: a, b, c".
Narrative template_narrative(const Explanation& e, const CueLexicons& lexicons);

/// Structured prompt sent to a remote generation service.
std::string build_prompt(const Explanation& e, const std::vector<CueFamily>& cues);

/// Template mode, or remote mode: POST {"prompt","max_tokens","temperature":0}
/// and expect {"text"}. The key-token list is appended to the remote text.
/// Any remote failure falls back to template mode with used_fallback set.
Narrative generate_narrative(const Explanation& e, NarrativeMode mode, const CueLexicons& lexicons,
                             const RemoteOptions& remote = {});

/// {label, verdict, confidence, coverage, features:[{token, weight}],
///  narrative, cues, grounding_tokens, fallback}
nlohmann::json to_json(const Explanation& e, const Narrative& n);

}  // namespace phishguard::explain
