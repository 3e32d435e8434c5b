#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lambada/error.hpp"

namespace lambada {

/// Class ids are contiguous 1..q.
using ClassId = int;

struct ClassLabel {
  ClassId id = 0;
  std::string name;
};

/// Bidirectional map between class names and contiguous ids, in
/// first-appearance order.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  /// Returns the id of `name`, registering it if new.
  ClassId intern(std::string_view name);
  std::optional<ClassId> find(std::string_view name) const;
  const std::string& name(ClassId id) const;
  ClassLabel label(ClassId id) const { return {id, name(id)}; }

  std::size_t size() const { return names_.size(); }
  bool contains(ClassId id) const { return id >= 1 && static_cast<std::size_t>(id) <= names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const LabelMap& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, ClassId, std::less<>> ids_;
};

/// Trims and replaces internal whitespace runs with '_'.
std::string normalize_label_name(std::string_view raw);

struct LabeledSentence {
  std::string text;
  std::vector<std::string> tokens;
  ClassId label = 0;
};

struct Dataset {
  std::vector<LabeledSentence> items;
  LabelMap labels;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::size_t num_classes() const { return labels.size(); }
  /// Item counts indexed by class id - 1.
  std::vector<std::size_t> class_counts() const;
  /// Builds an item, tokenizing `text`; throws on empty token list.
  void add(std::string_view text, ClassId label);
};

/// Concatenation that keeps `a`'s label map; `b` must share it.
Dataset concat(const Dataset& a, const Dataset& b);

// Tokenization: lowercase, split on Unicode whitespace, leading/trailing
// punctuation peeled into single-character tokens.
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(const std::vector<std::string>& tokens);

enum class DataFormat { csv, jsonl };

DataFormat format_from_path(const std::filesystem::path& path);

/// Parses a dataset. When `fixed_labels` is given, ids follow it and unknown
/// label names are record-level errors.
Dataset read_dataset(std::istream& in, DataFormat format, const LabelMap* fixed_labels = nullptr);
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LabelMap* fixed_labels = nullptr);
Dataset load_dataset(const std::filesystem::path& path, const LabelMap* fixed_labels = nullptr);

/// One JSON object per line with `text` and `label` (class name). A non-empty
/// `provenance` adds that field to every record.
void write_jsonl(std::ostream& out, const Dataset& d, std::string_view provenance = {});
void save_jsonl(const std::filesystem::path& path, const Dataset& d, std::string_view provenance = {});

/// Reads a text file with one sentence per line (blank lines skipped), or the
/// `text` field of each record when the file is CSV/JSONL.
std::vector<std::string> load_texts(const std::filesystem::path& path);

struct SplitSpec {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;

  /// Throws Error naming the violated constraint.
  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<std::string> warnings;
};

/// Stratified, deterministic, exhaustive partition.
Splits split_dataset(const Dataset& d, const SplitSpec& spec);

struct Subsample {
  Dataset data;
  /// Positions of the chosen items in the input, ascending.
  std::vector<std::size_t> indices;
  std::vector<std::string> notes;
};

/// Uniformly draws min(k, n_class) items per class without replacement.
Subsample subsample_per_class(const Dataset& d, std::size_t k, std::uint64_t seed);

/// Items of `d` whose positions are not in `indices` (ascending).
Dataset complement(const Dataset& d, const std::vector<std::size_t>& indices);

/// Writes train/validation/test JSONL files and manifest.json into `dir`.
void write_splits(const std::filesystem::path& dir, const Splits& splits, const SplitSpec& spec,
                  const std::string& source);

/// Label map stored in a split manifest.
LabelMap read_manifest_labels(const std::filesystem::path& manifest);

}  // namespace lambada
