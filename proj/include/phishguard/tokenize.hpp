#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phishguard::tokenize {

using TokenId = std::int32_t;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::size_t kDefaultMaxLen = 256;

/// ASCII lowercase, whitespace runs collapsed to one space, ends trimmed.
/// Bytes >= 0x80 pass through unchanged.
std::string normalize(std::string_view text);

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

/// Splits on whitespace; each ASCII punctuation character is its own token,
/// except that "[" letters "]" (a mask placeholder such as "[name]") stays
/// one token. Does not normalize.
std::vector<Token> split_tokens(std::string_view text);

class Vocabulary {
 public:
  /// Only the two special tokens.
  Vocabulary();

  /// Tokens must start with <unk>, <pad> and contain no duplicates.
  explicit Vocabulary(std::vector<std::string> id_to_token, std::size_t min_freq = 1,
                      std::size_t max_size = 0);

  TokenId id_of(std::string_view token) const;
  const std::string& token_of(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return id_to_token_.size(); }
  std::size_t min_freq() const { return min_freq_; }
  std::size_t max_size() const { return max_size_; }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> token_to_id_;
  std::size_t min_freq_ = 1;
  std::size_t max_size_ = 0;
};

/// Builds a vocabulary from (already normalized) training texts. Keeps
/// tokens seen at least `min_freq` times, most frequent first, ties in
/// lexicographic order. `max_size` caps the total size including the two
/// special tokens; 0 means no cap.
Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_freq = 1,
                       std::size_t max_size = 0);

/// {"format_version":1,"min_freq":..,"max_size":..,"token_to_id":{...}}
void save_vocab(const Vocabulary& v, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  std::size_t size() const { return ids.size(); }
};

/// Tokenizes already-normalized text, maps out-of-vocabulary tokens to UNK
/// and keeps at most `max_len` tokens.
TokenSequence encode(std::string_view text, const Vocabulary& v,
                     std::size_t max_len = kDefaultMaxLen);

}  // namespace phishguard::tokenize
