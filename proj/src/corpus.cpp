#include "lambada/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lambada/random.hpp"

namespace lambada {

using json = nlohmann::json;

// ---------------------------------------------------------------- LabelMap

LabelMap::LabelMap(std::vector<std::string> names) {
  for (auto& n : names) {
    if (find(n)) throw Error("duplicate class name '" + n + "'");
    intern(n);
  }
}

ClassId LabelMap::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  names_.emplace_back(name);
  const auto id = static_cast<ClassId>(names_.size());
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<ClassId> LabelMap::find(std::string_view name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& LabelMap::name(ClassId id) const {
  if (!contains(id)) throw Error("unknown class id " + std::to_string(id));
  return names_[static_cast<std::size_t>(id - 1)];
}

// ---------------------------------------------------------------- tokenizer

namespace {

// Byte length of a Unicode whitespace code point starting at s[i], or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  const unsigned char c = b(0);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return 1;
  if (c == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;           // NEL, NBSP
  if (c == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;             // U+1680
  if (c == 0xE2 && b(1) == 0x80 && (b(2) <= 0x8A || b(2) == 0xA8 || b(2) == 0xA9 || b(2) == 0xAF))
    return 3;                                                          // U+2000..200A, 2028, 2029, 202F
  if (c == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;             // U+205F
  if (c == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;             // U+3000
  return 0;
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

void split_chunk(std::string chunk, std::vector<std::string>& out) {
  for (auto& ch : chunk) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80) ch = static_cast<char>(std::tolower(u));
  }
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && is_punct(chunk[begin])) out.emplace_back(1, chunk[begin++]);
  std::vector<std::string> tail;
  while (end > begin && is_punct(chunk[end - 1])) tail.emplace_back(1, chunk[--end]);
  if (end > begin) out.push_back(chunk.substr(begin, end - begin));
  out.insert(out.end(), tail.rbegin(), tail.rend());
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string chunk;
  std::size_t i = 0;
  while (i < text.size()) {
    if (auto n = unicode_space_len(text, i)) {
      if (!chunk.empty()) split_chunk(std::move(chunk), tokens);
      chunk.clear();
      i += n;
    } else {
      chunk.push_back(text[i++]);
    }
  }
  if (!chunk.empty()) split_chunk(std::move(chunk), tokens);
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string normalize_label_name(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (auto n = unicode_space_len(raw, i)) {
      pending_space = !out.empty();
      i += n;
      continue;
    }
    if (pending_space) out.push_back('_');
    pending_space = false;
    out.push_back(raw[i++]);
  }
  return out;
}

// ---------------------------------------------------------------- Dataset

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& it : items) ++counts[static_cast<std::size_t>(it.label - 1)];
  return counts;
}

void Dataset::add(std::string_view text, ClassId label) {
  if (!labels.contains(label)) throw Error("unknown class id " + std::to_string(label));
  auto tokens = tokenize(text);
  if (tokens.empty()) throw Error("sentence has no tokens");
  items.push_back({std::string(text), std::move(tokens), label});
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (!(a.labels == b.labels)) throw Error("cannot concatenate datasets with different label maps");
  Dataset out = a;
  out.items.insert(out.items.end(), b.items.begin(), b.items.end());
  return out;
}

// ---------------------------------------------------------------- I/O

namespace {

struct RawRecord {
  std::size_t line;
  std::optional<std::string> text;
  std::optional<std::string> label;
};

// RFC 4180 style reader; returns records with the line each starts on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv_rows(std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < content.size()) {
    const std::size_t start_line = line;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_done = false;
    while (i < content.size() && !row_done) {
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < content.size() && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          in_quotes = false;
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        ++i;
        continue;
      }
      switch (c) {
        case '"':
          in_quotes = true;
          break;
        case ',':
          fields.push_back(std::move(field));
          field.clear();
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          row_done = true;
          break;
        default:
          field.push_back(c);
      }
      ++i;
    }
    if (in_quotes) throw ParseError(start_line, "unterminated quoted field");
    fields.push_back(std::move(field));
    const bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) rows.emplace_back(start_line, std::move(fields));
  }
  return rows;
}

std::vector<RawRecord> read_csv_records(std::istream& in) {
  auto rows = read_csv_rows(in);
  if (rows.empty()) throw ParseError(0, "empty CSV file (expected header 'text,label')");
  const auto& header = rows.front().second;
  std::optional<std::size_t> text_col, label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string h = header[c];
    h.erase(0, h.find_first_not_of(" \t"));
    h.erase(h.find_last_not_of(" \t") + 1);
    if (h == "text") text_col = c;
    if (h == "label") label_col = c;
  }
  if (!text_col || !label_col) throw ParseError(rows.front().first, "CSV header must name 'text' and 'label' columns");
  std::vector<RawRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    RawRecord rec{line, std::nullopt, std::nullopt};
    if (*text_col < fields.size()) rec.text = fields[*text_col];
    if (*label_col < fields.size()) rec.label = fields[*label_col];
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_jsonl_records(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(n, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(n, "record is not a JSON object");
    RawRecord rec{n, std::nullopt, std::nullopt};
    if (auto it = obj.find("text"); it != obj.end()) {
      if (!it->is_string()) throw ParseError(n, "field 'text' must be a string");
      rec.text = it->get<std::string>();
    }
    if (auto it = obj.find("label"); it != obj.end()) {
      if (!it->is_string()) throw ParseError(n, "field 'label' must be a string");
      rec.label = it->get<std::string>();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

Dataset read_dataset(std::istream& in, DataFormat format, const LabelMap* fixed_labels) {
  auto records = format == DataFormat::csv ? read_csv_records(in) : read_jsonl_records(in);
  Dataset d;
  if (fixed_labels) d.labels = *fixed_labels;
  for (auto& rec : records) {
    if (!rec.text) throw ParseError(rec.line, "missing field 'text'");
    if (!rec.label) throw ParseError(rec.line, "missing field 'label'");
    auto tokens = tokenize(*rec.text);
    if (tokens.empty()) throw ParseError(rec.line, "empty field 'text'");
    const auto name = normalize_label_name(*rec.label);
    if (name.empty()) throw ParseError(rec.line, "empty field 'label'");
    ClassId id;
    if (fixed_labels) {
      auto found = d.labels.find(name);
      if (!found) throw ParseError(rec.line, "label '" + name + "' is not in the label map");
      id = *found;
    } else {
      id = d.labels.intern(name);
    }
    d.items.push_back({std::move(*rec.text), std::move(tokens), id});
  }
  if (d.items.empty()) throw ParseError(0, "dataset has no usable records");
  return d;
}

DataFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DataFormat::csv;
  if (ext == ".jsonl" || ext == ".json") return DataFormat::jsonl;
  throw Error("cannot infer dataset format from '" + path.string() + "' (use .csv or .jsonl)");
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const LabelMap* fixed_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in, format, fixed_labels);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

Dataset load_dataset(const std::filesystem::path& path, const LabelMap* fixed_labels) {
  return load_dataset(path, format_from_path(path), fixed_labels);
}

void write_jsonl(std::ostream& out, const Dataset& d, std::string_view provenance) {
  for (const auto& it : d.items) {
    json obj;
    obj["text"] = it.text;
    obj["label"] = d.labels.name(it.label);
    if (!provenance.empty()) obj["provenance"] = std::string(provenance);
    out << obj.dump() << '\n';
  }
}

void save_jsonl(const std::filesystem::path& path, const Dataset& d, std::string_view provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_jsonl(out, d, provenance);
}

std::vector<std::string> load_texts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  const auto ext = path.extension().string();
  std::vector<std::string> texts;
  if (ext == ".csv") {
    for (auto& rec : read_csv_records(in)) {
      if (!rec.text) throw ParseError(rec.line, "missing field 'text'");
      texts.push_back(std::move(*rec.text));
    }
  } else if (ext == ".jsonl") {
    for (auto& rec : read_jsonl_records(in)) {
      if (!rec.text) throw ParseError(rec.line, "missing field 'text'");
      texts.push_back(std::move(*rec.text));
    }
  } else {
    std::string line;
    while (std::getline(in, line)) {
      if (!tokenize(line).empty()) texts.push_back(line);
    }
  }
  return texts;
}

// ---------------------------------------------------------------- splits

void SplitSpec::validate() const {
  if (train < 0 || validation < 0 || test < 0) throw Error("split ratios must be non-negative");
  if (std::abs(train + validation + test - 1.0) > 1e-9) throw Error("split ratios must sum to 1.0");
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& d) {
  std::vector<std::vector<std::size_t>> by_class(d.labels.size());
  for (std::size_t i = 0; i < d.items.size(); ++i)
    by_class[static_cast<std::size_t>(d.items[i].label - 1)].push_back(i);
  return by_class;
}

Dataset select(const Dataset& d, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.labels = d.labels;
  out.items.reserve(idx.size());
  for (auto i : idx) out.items.push_back(d.items[i]);
  return out;
}

}  // namespace

Splits split_dataset(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  if (d.size() < 3) throw Error("split requires at least 3 items");
  const double ratios[3] = {spec.train, spec.validation, spec.test};
  int nonzero = 0;
  for (double r : ratios) nonzero += r > 0;

  std::vector<std::size_t> parts[3];
  Splits out;
  const auto by_class = indices_by_class(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto idx = by_class[c];
    const std::size_t n = idx.size();
    if (n == 0) continue;
    if (n < static_cast<std::size_t>(nonzero)) {
      parts[0].insert(parts[0].end(), idx.begin(), idx.end());
      out.warnings.push_back("class '" + d.labels.name(static_cast<ClassId>(c + 1)) + "' has " +
                             std::to_string(n) + " item(s); all assigned to train");
      continue;
    }
    Rng rng(derive_seed(spec.seed, {c + 1}));
    rng.shuffle(idx);
    std::size_t sizes[3];
    std::size_t assigned = 0;
    for (int b = 0; b < 3; ++b) {
      sizes[b] = static_cast<std::size_t>(std::floor(ratios[b] * static_cast<double>(n) + 1e-9));
      assigned += sizes[b];
    }
    for (int b = 0; assigned < n; b = (b + 1) % 3) {
      if (ratios[b] > 0) {
        ++sizes[b];
        ++assigned;
      }
    }
    std::size_t pos = 0;
    for (int b = 0; b < 3; ++b) {
      parts[b].insert(parts[b].end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                      idx.begin() + static_cast<std::ptrdiff_t>(pos + sizes[b]));
      pos += sizes[b];
    }
  }
  out.train = select(d, parts[0]);
  out.validation = select(d, parts[1]);
  out.test = select(d, parts[2]);
  return out;
}

Subsample subsample_per_class(const Dataset& d, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error("per-class sample size must be >= 1");
  if (d.empty()) throw Error("cannot subsample an empty dataset");
  Subsample out;
  std::vector<std::size_t> chosen;
  const auto by_class = indices_by_class(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto idx = by_class[c];
    if (idx.size() < k) {
      out.notes.push_back("class '" + d.labels.name(static_cast<ClassId>(c + 1)) + "' has only " +
                          std::to_string(idx.size()) + " item(s) (< " + std::to_string(k) + ")");
    }
    Rng rng(derive_seed(seed, {c + 1}));
    const std::size_t take = std::min(k, idx.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  out.indices = chosen;
  out.data = select(d, std::move(chosen));
  return out;
}

Dataset complement(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.labels = d.labels;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    while (k < indices.size() && indices[k] < i) ++k;
    if (k < indices.size() && indices[k] == i) continue;
    out.items.push_back(d.items[i]);
  }
  return out;
}

void write_splits(const std::filesystem::path& dir, const Splits& splits, const SplitSpec& spec,
                  const std::string& source) {
  std::filesystem::create_directories(dir);
  save_jsonl(dir / "train.jsonl", splits.train);
  save_jsonl(dir / "validation.jsonl", splits.validation);
  save_jsonl(dir / "test.jsonl", splits.test);
  json manifest;
  manifest["format"] = "lambada-splits";
  manifest["version"] = 1;
  manifest["source"] = source;
  manifest["seed"] = spec.seed;
  manifest["ratios"] = {spec.train, spec.validation, spec.test};
  manifest["labels"] = splits.train.labels.names();
  manifest["sizes"] = {{"train", splits.train.size()},
                       {"validation", splits.validation.size()},
                       {"test", splits.test.size()}};
  manifest["warnings"] = splits.warnings;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

LabelMap read_manifest_labels(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw Error("cannot open manifest '" + manifest.string() + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("invalid manifest '" + manifest.string() + "': " + e.what());
  }
  if (!m.contains("labels") || !m["labels"].is_array()) throw Error("manifest has no 'labels' array");
  return LabelMap(m["labels"].get<std::vector<std::string>>());
}

}  // namespace lambada
