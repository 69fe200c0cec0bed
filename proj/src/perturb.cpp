#include "phishguard/perturb.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"

namespace phishguard::perturb {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("perturb", msg); }

bool is_ascii_alnum(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::isalnum(u);
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

char random_letter(Rng& rng, char exclude) {
  const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(exclude)));
  const bool exclude_letter = lower >= 'a' && lower <= 'z' && lower == exclude;
  if (!exclude_letter) return static_cast<char>('a' + rng.uniform_index(26));
  auto idx = static_cast<char>('a' + rng.uniform_index(25));
  if (idx >= exclude) ++idx;
  return idx;
}

}  // namespace

std::string_view op_name(NoiseOp op) {
  switch (op) {
    case NoiseOp::Delete: return "delete";
    case NoiseOp::Homoglyph: return "homoglyph";
    case NoiseOp::Insert: return "insert";
    case NoiseOp::Swap: return "swap";
  }
  return "";
}

HomoglyphTable default_homoglyphs() {
  return {{'o', "0"}, {'l', "1"}, {'i', "1"}, {'e', "3"}, {'a', "@"}, {'s', "5"}, {'t', "7"}};
}

HomoglyphTable load_homoglyphs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open homoglyph table '" + path.string() + "'");
  HomoglyphTable table;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail("homoglyph line " + std::to_string(line_no) + ": expected from<TAB>to");
    const std::string from = line.substr(0, tab);
    const std::string to = line.substr(tab + 1);
    if (from.size() != 1 || !is_ascii_alnum(from[0])) {
      fail("homoglyph line " + std::to_string(line_no) + ": source must be one ASCII letter or digit");
    }
    if (utf8_length(to) != 1) {
      fail("homoglyph line " + std::to_string(line_no) + ": target must be a single character");
    }
    table[static_cast<char>(std::tolower(static_cast<unsigned char>(from[0])))] = to;
  }
  return table;
}

void NoiseSpec::validate() const {
  if (!(level >= 0.0 && level <= 1.0)) fail("noise level must lie in [0, 1]");
  if (ops.empty()) fail("at least one noise operation must be enabled");
  for (const auto& [from, to] : homoglyphs) {
    if (!is_ascii_alnum(from) || utf8_length(to) != 1) {
      fail("homoglyph table must map single characters to single characters");
    }
  }
}

std::vector<std::size_t> eligible_positions(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '[') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i + 1 && j < text.size() && text[j] == ']') {
        i = j + 1;
        continue;
      }
    }
    if (is_ascii_alnum(text[i])) out.push_back(i);
    ++i;
  }
  return out;
}

std::size_t edit_budget(std::string_view text, double level) {
  const auto n = static_cast<double>(eligible_positions(text).size());
  return static_cast<std::size_t>(std::round(level * n));
}

NoisyText apply_edits(std::string_view text, std::span<const PlannedEdit> plan) {
  std::vector<std::string> cells(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) cells[i] = std::string(1, text[i]);

  NoisyText out;
  out.edits.reserve(plan.size());
  std::size_t last = 0;
  for (std::size_t n = 0; n < plan.size(); ++n) {
    const auto& e = plan[n];
    if (e.position >= text.size() || (n > 0 && e.position <= last)) {
      fail("edit plan positions must be distinct, ascending and inside the text");
    }
    last = e.position;
    const std::string original(1, text[e.position]);
    switch (e.op) {
      case NoiseOp::Delete:
        cells[e.position].clear();
        out.edits.push_back({e.position, e.op, original, ""});
        break;
      case NoiseOp::Homoglyph:
        cells[e.position] = e.replacement;
        out.edits.push_back({e.position, e.op, original, e.replacement});
        break;
      case NoiseOp::Insert:
        cells[e.position] = original + e.replacement;
        out.edits.push_back({e.position, e.op, original, cells[e.position]});
        break;
      case NoiseOp::Swap: {
        const std::size_t lo = std::min(e.position, e.partner);
        const std::size_t hi = std::max(e.position, e.partner);
        if (hi != lo + 1 || hi >= text.size()) fail("swap partner must be adjacent");
        cells[lo] = std::string(1, text[hi]);
        cells[hi] = std::string(1, text[lo]);
        out.edits.push_back({lo, e.op, std::string{text[lo], text[hi]}, std::string{text[hi], text[lo]}});
        break;
      }
    }
  }
  out.text.reserve(text.size() + plan.size() * 3);
  for (const auto& c : cells) out.text += c;
  return out;
}

NoisyText inject_noise(std::string_view text, const NoiseSpec& spec) {
  spec.validate();
  auto eligible = eligible_positions(text);
  const auto k = static_cast<std::size_t>(std::round(spec.level * static_cast<double>(eligible.size())));
  if (k == 0) return {std::string(text), {}};

  Rng rng(spec.seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<std::size_t> chosen(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());

  std::vector<bool> is_eligible(text.size(), false);
  for (auto p : eligible) is_eligible[p] = true;
  std::vector<bool> is_chosen(text.size(), false);
  for (auto p : chosen) is_chosen[p] = true;
  std::vector<bool> consumed(text.size(), false);
  std::size_t nonspace = static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(), [](char c) { return !std::isspace(static_cast<unsigned char>(c)); }));

  auto swap_partner = [&](std::size_t p) -> std::ptrdiff_t {
    for (std::ptrdiff_t q : {static_cast<std::ptrdiff_t>(p) + 1, static_cast<std::ptrdiff_t>(p) - 1}) {
      if (q < 0 || static_cast<std::size_t>(q) >= text.size()) continue;
      const auto uq = static_cast<std::size_t>(q);
      if (is_eligible[uq] && !is_chosen[uq] && !consumed[uq] && text[uq] != text[p]) return q;
    }
    return -1;
  };

  std::vector<PlannedEdit> plan;
  plan.reserve(k);
  for (std::size_t p : chosen) {
    PlannedEdit e;
    e.position = p;
    e.op = spec.ops[rng.uniform_index(spec.ops.size())];
    if (e.op == NoiseOp::Swap) {
      const auto q = swap_partner(p);
      if (q >= 0) {
        e.partner = static_cast<std::size_t>(q);
        consumed[e.partner] = true;
      } else {
        std::vector<NoiseOp> others;
        for (auto op : spec.ops) {
          if (op != NoiseOp::Swap) others.push_back(op);
        }
        e.op = others.empty() ? NoiseOp::Homoglyph : others[rng.uniform_index(others.size())];
      }
    }
    if (e.op == NoiseOp::Delete) {
      if (nonspace <= 1) {
        e.op = NoiseOp::Homoglyph;
      } else {
        --nonspace;
      }
    }
    if (e.op == NoiseOp::Homoglyph) {
      const char c = text[p];
      const auto it = spec.homoglyphs.find(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      if (it != spec.homoglyphs.end() && it->second != std::string(1, c)) {
        e.replacement = it->second;
      } else {
        e.replacement = std::string(1, random_letter(rng, c));
      }
    } else if (e.op == NoiseOp::Insert) {
      e.replacement = std::string(1, static_cast<char>('a' + rng.uniform_index(26)));
    }
    plan.push_back(std::move(e));
  }
  return apply_edits(text, plan);
}

std::vector<NoisySet> make_noisy_testsets(const corpus::Dataset& test, std::span<const double> levels,
                                          std::uint64_t seed, const NoiseSpec& base) {
  std::vector<NoisySet> out;
  for (double level : levels) {
    NoiseSpec spec = base;
    spec.level = level;
    spec.validate();
    NoisySet set;
    set.level = level;
    std::vector<corpus::EmailRecord> records;
    records.reserve(test.size());
    set.edits.reserve(test.size());
    for (const auto& r : test.records()) {
      spec.seed = derive_seed(derive_seed(seed, r.id), std::bit_cast<std::uint64_t>(level));
      auto noisy = inject_noise(r.text, spec);
      records.push_back({r.id, std::move(noisy.text), r.label});
      set.edits.push_back(std::move(noisy.edits));
    }
    set.data = corpus::Dataset(std::move(records));
    out.push_back(std::move(set));
  }
  return out;
}

void write_noisy_jsonl(const NoisySet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path.string() + "'");
  const auto& records = set.data.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    json edits = json::array();
    for (const auto& e : set.edits[i]) {
      edits.push_back({{"position", e.position}, {"op", op_name(e.op)}, {"before", e.before}, {"after", e.after}});
    }
    json row = {{"id", records[i].id},
                {"text", records[i].text},
                {"label", records[i].label},
                {"level", set.level},
                {"edits", std::move(edits)}};
    out << row.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

}  // namespace phishguard::perturb
