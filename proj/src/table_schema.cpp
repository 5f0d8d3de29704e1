#include "cogrid/table_schema.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "cogrid/error.hpp"

namespace cogrid {

std::string to_string(SplitPolicy policy) {
  return policy == SplitPolicy::kSizeThreshold ? "size-threshold" : "pre-split-only";
}

SplitPolicy split_policy_from_string(const std::string& name) {
  if (name == "size-threshold") return SplitPolicy::kSizeThreshold;
  if (name == "pre-split-only") return SplitPolicy::kPreSplitOnly;
  throw ValidationError("unknown split policy: " + name);
}

void TableSchema::validate() const {
  if (name.empty()) throw ValidationError("table name must be nonempty");
  if (split_threshold_bytes == 0) throw ValidationError("split threshold must be positive");
  if (families.empty()) throw ValidationError("table needs at least one column family");
  std::set<std::string> fam_names;
  for (const auto& fam : families) {
    if (fam.name.empty()) throw ValidationError("column family name must be nonempty");
    if (!fam_names.insert(fam.name).second)
      throw ValidationError("duplicate column family: " + fam.name);
    std::set<std::string> quals;
    for (const auto& q : fam.qualifiers) {
      if (q.empty()) throw ValidationError("qualifier name must be nonempty");
      if (!quals.insert(q).second)
        throw ValidationError("duplicate qualifier " + q + " in family " + fam.name);
    }
    if (fam.qualifiers.empty())
      throw ValidationError("family " + fam.name + " needs at least one qualifier");
  }
}

const ColumnFamily* TableSchema::find_family(const std::string& family) const {
  for (const auto& fam : families)
    if (fam.name == family) return &fam;
  return nullptr;
}

bool TableSchema::has_column(const std::string& family, const std::string& qualifier) const {
  const ColumnFamily* fam = find_family(family);
  if (fam == nullptr) return false;
  for (const auto& q : fam->qualifiers)
    if (q == qualifier) return true;
  return false;
}

bool TableSchema::same_shape(const TableSchema& other) const {
  if (name != other.name || split_policy != other.split_policy ||
      split_threshold_bytes != other.split_threshold_bytes ||
      families.size() != other.families.size())
    return false;
  for (size_t i = 0; i < families.size(); ++i) {
    if (families[i].name != other.families[i].name ||
        families[i].qualifiers != other.families[i].qualifiers)
      return false;
  }
  return true;
}

void UploadManifest::validate() const {
  std::set<std::string> names;
  for (const auto& entry : entries) {
    if (entry.unique_name.empty()) throw ValidationError("manifest entry has empty unique name");
    if (!names.insert(entry.unique_name + "\t" + entry.family + "\t" + entry.qualifier).second)
      throw ValidationError("manifest repeats coordinate for name: " + entry.unique_name);
  }
  for (size_t i = 1; i < presplit_keys.size(); ++i) {
    if (!(presplit_keys[i - 1] < presplit_keys[i]))
      throw ValidationError("presplit keys must be strictly increasing");
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<ColumnFamily> parse_schema_file(const std::filesystem::path& path) {
  std::vector<ColumnFamily> families;
  for (const auto& line : read_lines(path)) {
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw ValidationError("schema line needs `family<TAB>qualifier`: " + line);
    ColumnFamily* fam = nullptr;
    for (auto& f : families)
      if (f.name == fields[0]) fam = &f;
    if (fam == nullptr) {
      families.push_back(ColumnFamily{fields[0], {}});
      fam = &families.back();
    }
    fam->qualifiers.push_back(fields[1]);
  }
  if (families.empty()) throw ValidationError("schema file is empty: " + path.string());
  return families;
}

std::vector<ManifestEntry> parse_manifest_file(const std::filesystem::path& path) {
  std::vector<ManifestEntry> entries;
  for (const auto& line : read_lines(path)) {
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw ValidationError(
          "manifest line needs `source_path<TAB>unique_name<TAB>family<TAB>qualifier`: " + line);
    entries.push_back(ManifestEntry{fields[0], fields[1], fields[2], fields[3]});
  }
  return entries;
}

std::vector<RowKey> parse_key_file(const std::filesystem::path& path) {
  return read_lines(path);
}

}  // namespace cogrid
