#ifndef COGRID_TABLE_SCHEMA_HPP
#define COGRID_TABLE_SCHEMA_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogrid/keys.hpp"

namespace cogrid {

enum class SplitPolicy {
  kSizeThreshold,  // split once a region's bytes exceed the threshold
  kPreSplitOnly,   // never split automatically
};

std::string to_string(SplitPolicy policy);
SplitPolicy split_policy_from_string(const std::string& name);

struct ColumnFamily {
  std::string name;
  std::vector<std::string> qualifiers;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnFamily> families;
  SplitPolicy split_policy = SplitPolicy::kSizeThreshold;
  uint64_t split_threshold_bytes = 64ull << 20;

  void validate() const;
  bool has_column(const std::string& family, const std::string& qualifier) const;
  const ColumnFamily* find_family(const std::string& family) const;
  bool same_shape(const TableSchema& other) const;
};

// Address of one stored value.
struct CellCoordinate {
  std::string table;
  RowKey rowkey;
  std::string family;
  std::string qualifier;
};

struct ManifestEntry {
  std::string source_path;
  std::string unique_name;  // becomes the rowkey
  std::string family;
  std::string qualifier;
};

struct UploadManifest {
  std::vector<ManifestEntry> entries;
  bool overwrite = false;
  std::vector<RowKey> presplit_keys;

  void validate() const;
};

// File formats (all UTF-8, tab-separated where noted):
//   schema file:   one `family<TAB>qualifier` per line
//   manifest file: one `source_path<TAB>unique_name<TAB>family<TAB>qualifier` per line
//   key file:      one rowkey per line
std::vector<ColumnFamily> parse_schema_file(const std::filesystem::path& path);
std::vector<ManifestEntry> parse_manifest_file(const std::filesystem::path& path);
std::vector<RowKey> parse_key_file(const std::filesystem::path& path);

}  // namespace cogrid

#endif  // COGRID_TABLE_SCHEMA_HPP
