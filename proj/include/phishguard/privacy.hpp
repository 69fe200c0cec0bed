#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace phishguard::privacy {

/// Declaration order is application order: structured patterns first,
/// heuristics last.
enum class MaskKind { Email = 0, Phone = 1, Account = 2, Name = 3 };

inline constexpr std::size_t kMaskKindCount = 4;

std::string_view placeholder_for(MaskKind kind);

/// Half-open byte range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

/// Returns candidate spans in `text`. Candidates may overlap; the masker
/// keeps the earliest-starting (then longest) of any overlapping group.
using Matcher = std::function<std::vector<Span>(std::string_view text)>;

struct MaskRule {
  MaskKind kind;
  std::string placeholder;  // "[EMAIL]", "[PHONE]", "[ACCOUNT]" or "[NAME]"
  Matcher matcher;
};

/// Given names, stored in title case ("alexis" and "ALEXIS" load as "Alexis").
using Gazetteer = std::unordered_set<std::string>;

/// One name per line, UTF-8. Blank lines and lines starting with '#' are ignored.
Gazetteer load_gazetteer(const std::filesystem::path& path);

// Normative matcher definitions. A "word byte" is an ASCII letter or digit
// or any byte >= 0x80.
//
// EMAIL   For every '@': local part = maximal run of [A-Za-z0-9._%+-]
//         directly left of it, not reaching into the previous match, with
//         leading dots dropped; domain = longest prefix of the [A-Za-z0-9.-]
//         run right of it that ends in a letter or digit and has at least two
//         non-empty dot-separated labels, the last being two or more ASCII
//         letters. Matches when both parts are non-empty.
// PHONE   Any of the following, not preceded by a word byte or '+' and not
//         followed by a word byte:
//           E.164          \+[1-9][0-9]{7,14}
//           North American (\+?1[-. ])?(\([0-9]{3}\) ?|[0-9]{3}[-. ])[0-9]{3}[-. ][0-9]{4}
//           local          [0-9]{3}[-.][0-9]{4}
// ACCOUNT Maximal run of six or more ASCII digits with no word byte on
//         either side. Runs already replaced by [PHONE] are gone by the time
//         this rule runs.
// NAME    A word token of the form [A-Z][a-z]+ that is either in the
//         gazetteer or directly follows (whitespace only in between) one of
//         the greetings hi/hello/dear/hey, matched case-insensitively.
//         Greetings and a short list of salutation words ("Team", "All",
//         "Customer", ...) are never treated as names by the greeting rule.
std::vector<Span> match_emails(std::string_view text);
std::vector<Span> match_phones(std::string_view text);
std::vector<Span> match_accounts(std::string_view text);
std::vector<Span> match_names(std::string_view text, const Gazetteer* gazetteer);

MaskRule email_rule();
MaskRule phone_rule();
MaskRule account_rule();
/// The gazetteer is shared read-only; null means greeting heuristic only.
MaskRule name_rule(std::shared_ptr<const Gazetteer> gazetteer = nullptr);

/// All four rules in application order.
std::vector<MaskRule> default_rules(std::shared_ptr<const Gazetteer> gazetteer = nullptr);

struct MaskResult {
  std::string text;
  /// Spans replaced per MaskKind during this call.
  std::array<std::size_t, kMaskKindCount> replaced{};

  std::size_t total_replaced() const;
};

/// Applies the rules in EMAIL, PHONE, ACCOUNT, NAME order regardless of the
/// order given. Each rule sees the output of the previous one; spans that
/// overlap an existing placeholder are ignored, which makes masking idempotent.
MaskResult mask_pii_detailed(std::string_view text, const std::vector<MaskRule>& rules);

std::string mask_pii(std::string_view text, const std::vector<MaskRule>& rules);

}  // namespace phishguard::privacy
