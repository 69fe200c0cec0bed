#include <cctype>
#include <cstdio>
#include <fstream>

#include "httplib.h"
#include "phishguard/error.hpp"
#include "phishguard/explain.hpp"

namespace phishguard::explain {
namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// "a", "a and b", "a, b and c"
std::string join_list(const std::vector<std::string>& parts) {
  if (parts.size() <= 1) return join(parts, "");
  std::vector<std::string> head(parts.begin(), parts.end() - 1);
  return join(head, ", ") + " and " + parts.back();
}

std::string_view phishing_clause(CueFamily f) {
  switch (f) {
    case CueFamily::Urgency: return "pushes the reader to act under time pressure";
    case CueFamily::Credential: return "asks for or references login credentials";
    case CueFamily::Financial: return "mentions sensitive financial terms";
    case CueFamily::Link: return "steers the reader toward a link or download";
  }
  return "";
}

std::vector<std::string> grounding(const Explanation& e) {
  std::vector<std::string> out;
  out.reserve(e.features.size());
  for (const auto& f : e.features) out.push_back(f.token);
  return out;
}

std::string key_tokens_sentence(const std::vector<std::string>& tokens) {
  return "Key tokens: " + join(tokens, ", ");
}

bool lexicons_empty(const CueLexicons& lex) {
  for (const auto& s : lex) {
    if (!s.empty()) return false;
  }
  return true;
}

struct ParsedUrl {
  std::string host_port;  // scheme://host[:port]
  std::string path;
};

std::optional<ParsedUrl> parse_http_url(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme)) return std::nullopt;
  const auto slash = url.find('/', kScheme.size());
  ParsedUrl p;
  p.host_port = std::string(url.substr(0, slash));
  p.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  if (p.host_port.size() == kScheme.size()) return std::nullopt;
  return p;
}

std::unordered_set<std::string> words(std::initializer_list<const char*> list) {
  std::unordered_set<std::string> out;
  for (const char* w : list) out.insert(w);
  return out;
}

}  // namespace

std::string_view cue_name(CueFamily family) {
  switch (family) {
    case CueFamily::Urgency: return "urgency";
    case CueFamily::Credential: return "credential";
    case CueFamily::Financial: return "financial";
    case CueFamily::Link: return "link";
  }
  return "";
}

CueLexicons default_cue_lexicons() {
  // Keep in sync with data/cues/*.txt.
  return {
      words({"urgent", "urgently", "immediate", "immediately", "now", "final", "warning", "minutes",
             "hours", "expire", "expires", "expired", "deadline", "asap", "suspended", "terminated",
             "deletion", "permanent", "failure", "alert"}),
      words({"password", "passwords", "pin", "verify", "verification", "reset", "login", "log",
             "signin", "credentials", "username", "security", "confirm", "authenticate", "ssn"}),
      words({"payment", "payments", "card", "credit", "bank", "account", "invoice", "billing",
             "refund", "transfer", "wire", "funds", "tax", "paypal", "transaction"}),
      words({"click", "http", "https", "link", "url", "www", "download", "attachment", "here"}),
  };
}

CueLexicons empty_cue_lexicons() { return {}; }

CueLexicons load_cue_lexicons(const std::filesystem::path& dir) {
  CueLexicons lex;
  for (std::size_t f = 0; f < kCueFamilyCount; ++f) {
    const auto path = dir / (std::string(cue_name(static_cast<CueFamily>(f))) + ".txt");
    std::ifstream in(path);
    if (!in) throw PipelineError("explain", "cannot open cue lexicon '" + path.string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      for (auto& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      lex[f].insert(line);
    }
  }
  return lex;
}

std::vector<CueFamily> match_cues(const Explanation& e, const CueLexicons& lexicons) {
  std::vector<CueFamily> out;
  for (std::size_t f = 0; f < kCueFamilyCount; ++f) {
    for (const auto& feat : e.features) {
      if (lexicons[f].contains(feat.token)) {
        out.push_back(static_cast<CueFamily>(f));
        break;
      }
    }
  }
  return out;
}

std::string_view verdict_name(int label) { return label == 1 ? "PHISHING" : "LEGITIMATE"; }

std::string format_confidence(double confidence) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", confidence);
  return buf;
}

Narrative template_narrative(const Explanation& e, const CueLexicons& lexicons) {
  if (e.features.empty()) throw PipelineError("explain", "cannot narrate an empty explanation");
  Narrative n;
  n.cues = match_cues(e, lexicons);
  n.grounding_tokens = grounding(e);

  std::string text = "The email was classified as " + std::string(verdict_name(e.label)) +
                     " with confidence " + format_confidence(e.confidence) + ".";
  if (!lexicons_empty(lexicons)) {
    if (e.label == 1 && !n.cues.empty()) {
      std::vector<std::string> clauses;
      for (auto c : n.cues) clauses.emplace_back(phishing_clause(c));
      text += " The message " + join_list(clauses) + ".";
    } else if (e.label == 0 && n.cues.empty()) {
      text += " The message appears routine and contains no social-engineering cues or suspicious tokens.";
    } else if (e.label == 0) {
      std::vector<std::string> names;
      for (auto c : n.cues) names.emplace_back(cue_name(c));
      text += " The message mentions " + join_list(names) +
              " terms, but the model weighs them as part of ordinary correspondence.";
    }
  }
  text += " " + key_tokens_sentence(n.grounding_tokens);
  n.text = std::move(text);
  return n;
}

std::string build_prompt(const Explanation& e, const std::vector<CueFamily>& cues) {
  std::vector<std::string> tokens;
  for (const auto& f : e.features) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.4f", f.weight);
    tokens.push_back(f.token + " (" + buf + ")");
  }
  std::vector<std::string> cue_names;
  for (auto c : cues) cue_names.emplace_back(cue_name(c));
  return "Write a brief, non-repetitive security explanation for an email user.\n"
         "Prediction: " + std::string(verdict_name(e.label)) + "\n"
         "Confidence: " + format_confidence(e.confidence) + "\n"
         "Most influential tokens (LIME weight): " + join(tokens, ", ") + "\n"
         "Matched phishing cue families: " + (cue_names.empty() ? "none" : join(cue_names, ", ")) + "\n"
         "Only refer to the tokens listed above.";
}

Narrative generate_narrative(const Explanation& e, NarrativeMode mode, const CueLexicons& lexicons,
                             const RemoteOptions& remote) {
  if (mode == NarrativeMode::Template) return template_narrative(e, lexicons);

  auto fallback = [&](const std::string& why) {
    Narrative n = template_narrative(e, lexicons);
    n.used_fallback = true;
    n.warning = "remote generation failed (" + why + "); used template narrative";
    return n;
  };

  if (e.features.empty()) throw PipelineError("explain", "cannot narrate an empty explanation");
  const auto url = parse_http_url(remote.endpoint);
  if (!url) return fallback("endpoint must be an http:// URL");

  const auto cues = match_cues(e, lexicons);
  const json request = {{"prompt", build_prompt(e, cues)},
                        {"max_tokens", remote.max_tokens},
                        {"temperature", 0}};
  httplib::Client client(url->host_port);
  client.set_connection_timeout(remote.timeout_seconds, 0);
  client.set_read_timeout(remote.timeout_seconds, 0);
  const auto res = client.Post(url->path, request.dump(), "application/json");
  if (!res) return fallback(httplib::to_string(res.error()));
  if (res->status != 200) return fallback("HTTP status " + std::to_string(res->status));

  std::string generated;
  try {
    const auto body = json::parse(res->body);
    generated = body.at("text").get<std::string>();
  } catch (const json::exception& ex) {
    return fallback(std::string("bad response: ") + ex.what());
  }
  while (!generated.empty() && std::isspace(static_cast<unsigned char>(generated.back()))) generated.pop_back();
  std::size_t lead = 0;
  while (lead < generated.size() && std::isspace(static_cast<unsigned char>(generated[lead]))) ++lead;
  generated.erase(0, lead);

  Narrative n;
  n.cues = cues;
  n.grounding_tokens = grounding(e);
  n.text = generated.empty() ? key_tokens_sentence(n.grounding_tokens)
                             : generated + " " + key_tokens_sentence(n.grounding_tokens);
  return n;
}

json to_json(const Explanation& e, const Narrative& n) {
  json features = json::array();
  for (const auto& f : e.features) features.push_back({{"token", f.token}, {"weight", f.weight}});
  json cues = json::array();
  for (auto c : n.cues) cues.push_back(cue_name(c));
  return {{"label", e.label},
          {"verdict", verdict_name(e.label)},
          {"confidence", e.confidence},
          {"coverage", e.coverage},
          {"features", std::move(features)},
          {"narrative", n.text},
          {"cues", std::move(cues)},
          {"grounding_tokens", n.grounding_tokens},
          {"fallback", n.used_fallback}};
}

}  // namespace phishguard::explain
