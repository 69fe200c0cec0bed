#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phishguard/corpus.hpp"

namespace phishguard::perturb {

enum class NoiseOp { Delete, Homoglyph, Insert, Swap };

std::string_view op_name(NoiseOp op);

/// Lowercase ASCII letter or digit -> one UTF-8 code point. Lookup lowercases
/// the source character, so 'O' and 'o' share an entry.
using HomoglyphTable = std::map<char, std::string>;

/// o->0, l->1, i->1, e->3, a->@, s->5, t->7.
HomoglyphTable default_homoglyphs();

/// Two tab-separated columns per line: `from<TAB>to`.
HomoglyphTable load_homoglyphs(const std::filesystem::path& path);

struct NoiseSpec {
  double level = 0.10;
  std::vector<NoiseOp> ops{NoiseOp::Delete, NoiseOp::Homoglyph, NoiseOp::Insert, NoiseOp::Swap};
  HomoglyphTable homoglyphs = default_homoglyphs();
  std::uint64_t seed = 0;

  void validate() const;
};

struct Edit {
  std::size_t position = 0;  // byte offset in the original text
  NoiseOp op = NoiseOp::Delete;
  std::string before;
  std::string after;

  bool operator==(const Edit&) const = default;
};

struct NoisyText {
  std::string text;
  std::vector<Edit> edits;
};

/// Byte offsets of characters that may be edited: ASCII letters and digits
/// outside "[letters]" mask placeholders.
std::vector<std::size_t> eligible_positions(std::string_view text);

/// round(level * eligible count), half away from zero.
std::size_t edit_budget(std::string_view text, double level);

struct PlannedEdit {
  std::size_t position = 0;
  NoiseOp op = NoiseOp::Delete;
  /// Swap: the other position. Unused otherwise.
  std::size_t partner = 0;
  /// Homoglyph: replacement code point. Insert: the inserted letter.
  std::string replacement;
};

/// Applies a plan (ascending, distinct positions) to `text`. Inserted
/// letters go directly after the edited character.
NoisyText apply_edits(std::string_view text, std::span<const PlannedEdit> plan);

/// Picks edit_budget(text, level) eligible positions uniformly without
/// replacement and one enabled operation per position, uniformly.
///  - Delete removes the character; a delete that would leave the text
///    blank becomes a homoglyph substitution.
///  - Homoglyph substitutes from the table, falling back to a random
///    lowercase letter different from the original.
///  - Insert adds a random lowercase letter after the character.
///  - Swap exchanges the character with the following one, or the preceding
///    one when the following is not usable (must be eligible, unselected,
///    not already swapped and different). When neither neighbour works the
///    operation is redrawn from the other enabled operations.
NoisyText inject_noise(std::string_view text, const NoiseSpec& spec);

struct NoisySet {
  double level = 0.0;
  corpus::Dataset data;
  std::vector<std::vector<Edit>> edits;  // parallel to data.records()
};

/// One perturbed copy of `test` per level, in the order given. Record r at
/// level x is perturbed with a seed derived from (seed, r.id, x), so each
/// set is reproducible on its own. `base` supplies ops and homoglyphs.
std::vector<NoisySet> make_noisy_testsets(const corpus::Dataset& test, std::span<const double> levels,
                                          std::uint64_t seed, const NoiseSpec& base = {});

/// {"id","text","label","level","edits":[{"position","op","before","after"}]} per line.
void write_noisy_jsonl(const NoisySet& set, const std::filesystem::path& path);

}  // namespace phishguard::perturb
