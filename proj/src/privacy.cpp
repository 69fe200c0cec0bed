#include "phishguard/privacy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include "phishguard/error.hpp"

namespace phishguard::privacy {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_local_char(unsigned char c) {
  return std::isalnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
bool is_domain_char(unsigned char c) { return std::isalnum(c) || c == '.' || c == '-'; }

bool valid_domain(std::string_view domain) {
  std::size_t labels = 0;
  std::size_t start = 0;
  std::string_view last;
  while (true) {
    const std::size_t dot = domain.find('.', start);
    const std::string_view label = domain.substr(start, dot == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : dot - start);
    if (label.empty()) return false;
    ++labels;
    last = label;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (labels < 2 || last.size() < 2) return false;
  return std::all_of(last.begin(), last.end(), [](unsigned char c) { return std::isalpha(c); });
}

std::string title_case(std::string_view s) {
  std::string out(s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = static_cast<unsigned char>(out[i]);
    out[i] = static_cast<char>(i == 0 ? std::toupper(c) : std::tolower(c));
  }
  return out;
}

bool is_title_case_word(std::string_view w) {
  if (w.size() < 2 || !std::isupper(static_cast<unsigned char>(w[0]))) return false;
  return std::all_of(w.begin() + 1, w.end(), [](unsigned char c) { return std::islower(c); });
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_greeting(std::string_view w) {
  for (std::string_view g : {"hi", "hello", "dear", "hey"}) {
    if (iequals(w, g)) return true;
  }
  return false;
}

bool is_salutation_word(std::string_view w) {
  static const std::unordered_set<std::string_view> kWords = {
      "Team", "All", "There", "Everyone", "Sir", "Madam", "Customer", "User",
      "Friend", "Friends", "Valued", "Member", "Client", "Colleague", "Colleagues"};
  return is_greeting(w) || kWords.contains(w);
}

// Removes overlaps: earliest start first, then the longest candidate.
std::vector<Span> resolve(std::vector<Span> spans, const std::vector<Span>& blocked) {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
  });
  auto overlaps = [](const Span& a, const Span& b) { return a.begin < b.end && b.begin < a.end; };
  std::vector<Span> out;
  for (const auto& s : spans) {
    if (s.begin >= s.end) continue;
    if (!out.empty() && overlaps(out.back(), s)) continue;
    if (std::any_of(blocked.begin(), blocked.end(), [&](const Span& b) { return overlaps(b, s); })) {
      continue;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Span> find_placeholders(std::string_view text) {
  std::vector<Span> out;
  for (std::size_t k = 0; k < kMaskKindCount; ++k) {
    const auto ph = placeholder_for(static_cast<MaskKind>(k));
    for (std::size_t pos = text.find(ph); pos != std::string_view::npos;
         pos = text.find(ph, pos + ph.size())) {
      out.push_back({pos, pos + ph.size()});
    }
  }
  return out;
}

std::vector<Span> regex_candidates(std::string_view text, const std::regex& re) {
  std::vector<Span> out;
  const char* base = text.data();
  const char* end = base + text.size();
  const char* cursor = base;
  std::cmatch m;
  while (cursor < end && std::regex_search(cursor, end, m, re)) {
    const std::size_t b = static_cast<std::size_t>(m[0].first - base);
    const std::size_t e = static_cast<std::size_t>(m[0].second - base);
    const bool left_ok =
        b == 0 || (!is_word_byte(static_cast<unsigned char>(text[b - 1])) && text[b - 1] != '+');
    const bool right_ok = e == text.size() || !is_word_byte(static_cast<unsigned char>(text[e]));
    if (left_ok && right_ok) out.push_back({b, e});
    cursor = base + b + 1;
  }
  return out;
}

}  // namespace

std::string_view placeholder_for(MaskKind kind) {
  switch (kind) {
    case MaskKind::Email: return "[EMAIL]";
    case MaskKind::Phone: return "[PHONE]";
    case MaskKind::Account: return "[ACCOUNT]";
    case MaskKind::Name: return "[NAME]";
  }
  return "";
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("privacy", "cannot open names file '" + path.string() + "'");
  Gazetteer names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (b == line.size() || line[b] == '#') continue;
    names.insert(title_case(std::string_view(line).substr(b)));
  }
  return names;
}

std::vector<Span> match_emails(std::string_view text) {
  std::vector<Span> out;
  std::size_t floor = 0;  // end of the previous match
  for (std::size_t at = text.find('@'); at != std::string_view::npos; at = text.find('@', at + 1)) {
    if (at < floor) continue;
    std::size_t lb = at;
    while (lb > floor && is_local_char(static_cast<unsigned char>(text[lb - 1]))) --lb;
    while (lb < at && text[lb] == '.') ++lb;
    std::size_t re = at + 1;
    while (re < text.size() && is_domain_char(static_cast<unsigned char>(text[re]))) ++re;
    if (lb == at) continue;
    // Longest prefix of the run that forms a valid domain.
    while (re > at + 1) {
      const auto last = static_cast<unsigned char>(text[re - 1]);
      if (std::isalnum(last) && valid_domain(text.substr(at + 1, re - at - 1))) break;
      --re;
    }
    if (re == at + 1) continue;
    out.push_back({lb, re});
    floor = re;
  }
  return out;
}

std::vector<Span> match_phones(std::string_view text) {
  static const std::regex kE164(R"(\+[1-9][0-9]{7,14})");
  static const std::regex kNorthAmerican(
      R"((\+?1[-. ])?(\([0-9]{3}\) ?|[0-9]{3}[-. ])[0-9]{3}[-. ][0-9]{4})");
  static const std::regex kLocal(R"([0-9]{3}[-.][0-9]{4})");
  std::vector<Span> out;
  for (const auto* re : {&kE164, &kNorthAmerican, &kLocal}) {
    auto found = regex_candidates(text, *re);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

std::vector<Span> match_accounts(std::string_view text) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    const bool left_ok = i == 0 || !is_word_byte(static_cast<unsigned char>(text[i - 1]));
    const bool right_ok = j == text.size() || !is_word_byte(static_cast<unsigned char>(text[j]));
    if (j - i >= 6 && left_ok && right_ok) out.push_back({i, j});
    i = j;
  }
  return out;
}

std::vector<Span> match_names(std::string_view text, const Gazetteer* gazetteer) {
  std::vector<Span> out;
  std::string_view prev_word;
  bool prev_adjacent = false;  // only whitespace since prev_word
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!is_word_byte(c)) {
      if (!std::isspace(c)) prev_adjacent = false;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view word = text.substr(i, j - i);
    if (is_title_case_word(word)) {
      const bool in_gazetteer = gazetteer != nullptr && gazetteer->contains(std::string(word));
      const bool after_greeting =
          prev_adjacent && is_greeting(prev_word) && !is_salutation_word(word);
      if (in_gazetteer || after_greeting) out.push_back({i, j});
    }
    prev_word = word;
    prev_adjacent = true;
    i = j;
  }
  return out;
}

MaskRule email_rule() {
  return {MaskKind::Email, std::string(placeholder_for(MaskKind::Email)), match_emails};
}
MaskRule phone_rule() {
  return {MaskKind::Phone, std::string(placeholder_for(MaskKind::Phone)), match_phones};
}
MaskRule account_rule() {
  return {MaskKind::Account, std::string(placeholder_for(MaskKind::Account)), match_accounts};
}
MaskRule name_rule(std::shared_ptr<const Gazetteer> gazetteer) {
  return {MaskKind::Name, std::string(placeholder_for(MaskKind::Name)),
          [g = std::move(gazetteer)](std::string_view text) { return match_names(text, g.get()); }};
}

std::vector<MaskRule> default_rules(std::shared_ptr<const Gazetteer> gazetteer) {
  return {email_rule(), phone_rule(), account_rule(), name_rule(std::move(gazetteer))};
}

std::size_t MaskResult::total_replaced() const {
  std::size_t n = 0;
  for (auto k : replaced) n += k;
  return n;
}

MaskResult mask_pii_detailed(std::string_view text, const std::vector<MaskRule>& rules) {
  std::vector<const MaskRule*> ordered;
  for (const auto& r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(), [](const MaskRule* a, const MaskRule* b) {
    return static_cast<int>(a->kind) < static_cast<int>(b->kind);
  });

  MaskResult result;
  result.text = std::string(text);
  for (const MaskRule* rule : ordered) {
    const auto spans = resolve(rule->matcher(result.text), find_placeholders(result.text));
    if (spans.empty()) continue;
    std::string next;
    next.reserve(result.text.size());
    std::size_t cursor = 0;
    for (const auto& s : spans) {
      next.append(result.text, cursor, s.begin - cursor);
      next.append(rule->placeholder);
      cursor = s.end;
    }
    next.append(result.text, cursor, std::string::npos);
    result.text = std::move(next);
    result.replaced[static_cast<std::size_t>(rule->kind)] += spans.size();
  }
  return result;
}

std::string mask_pii(std::string_view text, const std::vector<MaskRule>& rules) {
  return mask_pii_detailed(text, rules).text;
}

}  // namespace phishguard::privacy
