#include "phishguard/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"

namespace phishguard::corpus {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("corpus", msg); }

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string generated_id(std::size_t row) {
  std::ostringstream os;
  os << "row-";
  os.width(8);
  os.fill('0');
  os << row;
  return os.str();
}

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines. Returns false at end of input.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next_row(std::vector<std::string>& fields) {
    fields.clear();
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    char c;
    while (in_.get(c)) {
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get(c);
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && !field_started) {
        quoted = true;
        field_started = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && in_.peek() == '\n') in_.get(c);
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
        field_started = true;
      }
    }
    if (quoted) throw std::runtime_error("unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::istream& in_;
};

struct RawRow {
  std::string id;
  std::string text;
  std::string label;
};

void collect(LoadResult& result, std::vector<EmailRecord>& out, RawRow row, std::size_t row_no) {
  if (is_blank(row.text)) {
    ++result.skipped_empty;
    return;
  }
  const int label = parse_label(row.label);
  if (label < 0) {
    fail("row " + std::to_string(row_no) + ": unknown label '" + row.label + "'");
  }
  if (row.id.empty()) row.id = generated_id(row_no);
  out.push_back({std::move(row.id), std::move(row.text), label});
}

std::string json_scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return std::to_string(static_cast<long long>(d));
    return v.dump();
  }
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

Dataset::Dataset(std::vector<EmailRecord> records) : records_(std::move(records)) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(records_.size());
  for (const auto& r : records_) {
    if (r.label != kSafe && r.label != kPhishing) {
      fail("record '" + r.id + "': label must be 0 or 1");
    }
    if (is_blank(r.text)) fail("record '" + r.id + "': empty text");
    if (!seen.insert(r.id).second) fail("duplicate record id '" + r.id + "'");
    ++counts_[static_cast<std::size_t>(r.label)];
  }
}

std::array<double, 2> Dataset::class_ratio() const {
  if (records_.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(records_.size());
  return {static_cast<double>(counts_[0]) / n, static_cast<double>(counts_[1]) / n};
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) fail("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    fail("split fractions must sum to 1");
  }
}

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::Csv;
  if (name == "jsonl") return Format::Jsonl;
  fail("unknown dataset format '" + std::string(name) + "' (expected csv or jsonl)");
}

Format format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? Format::Csv : Format::Jsonl;
}

int parse_label(std::string_view raw) {
  std::string s = trim(raw);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "0" || s == "safe email") return kSafe;
  if (s == "1" || s == "phishing email") return kPhishing;
  return -1;
}

std::string_view label_name(int label) {
  return label == kPhishing ? "Phishing Email" : "Safe Email";
}

LoadResult load_dataset(const std::filesystem::path& path, Format format,
                        const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open dataset file '" + path.string() + "'");

  LoadResult result;
  std::vector<EmailRecord> records;

  if (format == Format::Csv) {
    CsvReader reader(in);
    std::vector<std::string> header;
    try {
      if (!reader.next_row(header)) {
        result.dataset = Dataset{};
        return result;
      }
    } catch (const std::exception& e) {
      fail("header: " + std::string(e.what()));
    }
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
    auto column = [&](const std::string& name) -> std::ptrdiff_t {
      auto it = std::find(header.begin(), header.end(), name);
      return it == header.end() ? -1 : it - header.begin();
    };
    const auto text_idx = column(options.text_col);
    const auto label_idx = column(options.label_col);
    const auto id_idx = column(options.id_col);
    if (text_idx < 0) fail("CSV header has no text column '" + options.text_col + "'");
    if (label_idx < 0) fail("CSV header has no label column '" + options.label_col + "'");

    std::vector<std::string> fields;
    for (std::size_t row_no = 1;; ++row_no) {
      try {
        if (!reader.next_row(fields)) break;
      } catch (const std::exception& e) {
        fail("row " + std::to_string(row_no) + ": " + e.what());
      }
      if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
      if (fields.size() != header.size()) {
        fail("row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) +
             " fields, got " + std::to_string(fields.size()));
      }
      RawRow row{id_idx >= 0 ? fields[id_idx] : std::string{}, fields[text_idx], fields[label_idx]};
      collect(result, records, std::move(row), row_no);
    }
  } else {
    std::string line;
    for (std::size_t row_no = 1; std::getline(in, line); ++row_no) {
      if (is_blank(line)) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        fail("row " + std::to_string(row_no) + ": invalid JSON (" + e.what() + ")");
      }
      if (!obj.is_object()) fail("row " + std::to_string(row_no) + ": expected a JSON object");
      if (!obj.contains(options.text_col)) {
        fail("row " + std::to_string(row_no) + ": missing key '" + options.text_col + "'");
      }
      if (!obj.contains(options.label_col)) {
        fail("row " + std::to_string(row_no) + ": missing key '" + options.label_col + "'");
      }
      RawRow row;
      row.text = json_scalar_to_string(obj[options.text_col]);
      row.label = json_scalar_to_string(obj[options.label_col]);
      if (obj.contains(options.id_col)) row.id = json_scalar_to_string(obj[options.id_col]);
      collect(result, records, std::move(row), row_no);
    }
  }

  result.dataset = Dataset(std::move(records));
  return result;
}

std::tuple<Dataset, Dataset, Dataset> stratified_split(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  const auto& counts = d.class_counts();
  if (counts[0] == 0 || counts[1] == 0) fail("stratified split needs both classes present");

  std::vector<const EmailRecord*> sorted;
  sorted.reserve(d.size());
  for (const auto& r : d.records()) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const EmailRecord* a, const EmailRecord* b) { return a->id < b->id; });

  Rng rng(spec.seed);
  std::vector<EmailRecord> parts[3];
  for (int label : {kSafe, kPhishing}) {
    std::vector<const EmailRecord*> members;
    for (const auto* r : sorted) {
      if (r->label == label) members.push_back(r);
    }
    rng.shuffle(std::span(members));

    const double n = static_cast<double>(members.size());
    // The epsilon keeps products such as 60 * 0.15 from flooring to 8.
    const auto n_val = static_cast<std::size_t>(std::floor(n * spec.val_frac + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test_frac + 1e-9));
    const std::size_t n_train = members.size() - n_val - n_test;
    if (n_val == 0 || n_test == 0 || n_train == 0) {
      fail("class " + std::to_string(label) + " has only " + std::to_string(members.size()) +
           " records, too few to appear in every split");
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int part = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
      parts[part].push_back(*members[i]);
    }
  }
  for (auto& p : parts) {
    std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  return {Dataset(std::move(parts[0])), Dataset(std::move(parts[1])), Dataset(std::move(parts[2]))};
}

void write_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path.string() + "'");
  for (const auto& r : d.records()) {
    out << json{{"id", r.id}, {"text", r.text}, {"label", r.label}}.dump(-1, ' ', false, json::error_handler_t::replace)
        << '\n';
  }
}

}  // namespace phishguard::corpus
