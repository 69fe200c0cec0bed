#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace phishguard::corpus {

inline constexpr int kSafe = 0;
inline constexpr int kPhishing = 1;

struct EmailRecord {
  std::string id;
  std::string text;
  int label = kSafe;

  bool operator==(const EmailRecord&) const = default;
};

/// Ordered, validated collection of records. Construction checks that
/// every label is 0/1, every text is non-blank and ids are unique.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<EmailRecord> records);

  const std::vector<EmailRecord>& records() const { return records_; }
  const std::array<std::size_t, 2>& class_counts() const { return counts_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Fraction of records per class; zeros for an empty dataset.
  std::array<double, 2> class_ratio() const;

 private:
  std::vector<EmailRecord> records_;
  std::array<std::size_t, 2> counts_{0, 0};
};

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 42;

  void validate() const;
};

enum class Format { Csv, Jsonl };

Format parse_format(std::string_view name);
/// Csv for ".csv", Jsonl otherwise.
Format format_from_path(const std::filesystem::path& path);

struct LoadOptions {
  std::string text_col = "text";
  std::string label_col = "label";
  /// Optional id column/key. Rows without one get "row-<8-digit row number>".
  std::string id_col = "id";
};

struct LoadResult {
  Dataset dataset;
  std::size_t skipped_empty = 0;
};

/// Parses "Safe Email"/"Phishing Email" (case-insensitive) or "0"/"1".
/// Returns -1 for anything else.
int parse_label(std::string_view raw);

std::string_view label_name(int label);

/// Loads a CSV (header row required, RFC 4180 quoting) or JSONL file.
/// Rows whose text is blank are skipped and counted; an unknown label or a
/// malformed row raises PipelineError naming the 1-based row number.
LoadResult load_dataset(const std::filesystem::path& path, Format format,
                        const LoadOptions& options = {});

/// Stratified three-way split. Records are sorted by id, then each class is
/// shuffled with the seeded generator and cut with floor rounding for the
/// val/test shares; the per-class remainder goes to train. Each split is
/// returned sorted by id.
std::tuple<Dataset, Dataset, Dataset> stratified_split(const Dataset& d,
                                                       const SplitSpec& spec);

/// One JSON object per line: {"id","text","label"}.
void write_jsonl(const Dataset& d, const std::filesystem::path& path);

}  // namespace phishguard::corpus
