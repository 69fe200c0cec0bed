#include "phishguard/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "json.hpp"
#include "phishguard/error.hpp"

namespace phishguard::tokenize {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("tokenize", msg); }

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

// Length of a "[letters]" placeholder starting at i, or 0.
std::size_t placeholder_length(std::string_view text, std::size_t i) {
  if (text[i] != '[') return 0;
  std::size_t j = i + 1;
  while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
  if (j == i + 1 || j >= text.size() || text[j] != ']') return 0;
  return j + 1 - i;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  return out;
}

std::vector<Token> split_tokens(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_punct(c)) {
      const std::size_t len = std::max<std::size_t>(1, placeholder_length(text, i));
      out.push_back({std::string(text.substr(i, len)), i, i + len});
      i += len;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j])) &&
           !is_punct(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    out.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary({std::string(kUnkToken), std::string(kPadToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> id_to_token, std::size_t min_freq,
                       std::size_t max_size)
    : id_to_token_(std::move(id_to_token)), min_freq_(min_freq), max_size_(max_size) {
  if (id_to_token_.size() < 2 || id_to_token_[kUnkId] != kUnkToken ||
      id_to_token_[kPadId] != kPadToken) {
    fail("vocabulary must start with <unk>, <pad>");
  }
  token_to_id_.reserve(id_to_token_.size());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i)).second) {
      fail("duplicate vocabulary token '" + id_to_token_[i] + "'");
    }
  }
}

TokenId Vocabulary::id_of(std::string_view token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    fail("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return token_to_id_.contains(token); }

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_freq,
                       std::size_t max_size) {
  if (corpus.empty()) fail("cannot build a vocabulary from an empty corpus");
  if (max_size != 0 && max_size < 2) fail("max_size must be 0 (no cap) or at least 2");
  std::map<std::string, std::size_t> freq;
  for (const auto& text : corpus) {
    for (auto& tok : split_tokens(text)) ++freq[std::move(tok.text)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= std::max<std::size_t>(min_freq, 1) && tok != kUnkToken && tok != kPadToken) {
      ranked.emplace_back(tok, n);
    }
  }
  // freq is ordered, so a stable sort on count keeps lexicographic tie order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(kUnkToken), std::string(kPadToken)};
  for (auto& [tok, n] : ranked) {
    if (max_size != 0 && tokens.size() >= max_size) break;
    tokens.push_back(std::move(tok));
  }
  return Vocabulary(std::move(tokens), min_freq, max_size);
}

void save_vocab(const Vocabulary& v, const std::filesystem::path& path) {
  json map = json::object();
  for (std::size_t i = 0; i < v.size(); ++i) map[v.tokens()[i]] = i;
  json doc = {{"format_version", 1},
              {"min_freq", v.min_freq()},
              {"max_size", v.max_size()},
              {"token_to_id", std::move(map)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path.string() + "'");
  out << doc.dump(1, ' ', false, json::error_handler_t::replace) << '\n';
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open vocabulary '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail("invalid vocabulary JSON: " + std::string(e.what()));
  }
  if (doc.value("format_version", 0) != 1) fail("unsupported vocabulary format_version");
  const auto& map = doc.at("token_to_id");
  std::vector<std::string> tokens(map.size());
  std::vector<bool> filled(map.size(), false);
  for (auto it = map.begin(); it != map.end(); ++it) {
    const auto id = it.value().get<long long>();
    if (id < 0 || static_cast<std::size_t>(id) >= tokens.size() || filled[id]) {
      fail("vocabulary ids must be a permutation of 0..size-1");
    }
    tokens[id] = it.key();
    filled[id] = true;
  }
  return Vocabulary(std::move(tokens), doc.value("min_freq", std::size_t{1}),
                    doc.value("max_size", std::size_t{0}));
}

TokenSequence encode(std::string_view text, const Vocabulary& v, std::size_t max_len) {
  TokenSequence seq;
  auto toks = split_tokens(text);
  if (toks.size() > max_len) toks.resize(max_len);
  seq.ids.reserve(toks.size());
  seq.tokens.reserve(toks.size());
  seq.spans.reserve(toks.size());
  for (auto& t : toks) {
    seq.ids.push_back(v.id_of(t.text));
    seq.spans.emplace_back(t.begin, t.end);
    seq.tokens.push_back(std::move(t.text));
  }
  return seq;
}

}  // namespace phishguard::tokenize
