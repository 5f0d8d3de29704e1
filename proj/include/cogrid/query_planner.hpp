#ifndef COGRID_QUERY_PLANNER_HPP
#define COGRID_QUERY_PLANNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cogrid/mapreduce_engine.hpp"
#include "cogrid/region_store.hpp"

namespace cogrid {

enum class Sex : uint8_t { kF = 0, kM = 1 };

std::string to_string(Sex sex);
Sex sex_from_string(const std::string& name);

// Fixed-width metadata record stored alongside each image: u64 file size,
// f32 age, u8 sex (13 bytes, little-endian). Small by design so predicate
// scans never touch image bytes.
struct IndexRecord {
  uint64_t file_size_bytes = 0;
  float age_years = 0.0f;
  Sex sex = Sex::kF;

  static constexpr size_t kEncodedSize = 13;
  std::string encode() const;
  static IndexRecord decode(std::string_view bytes);
};

struct SubsetPredicate {
  std::optional<std::pair<double, double>> age_range;  // (min, max]
  std::optional<Sex> sex;

  bool empty() const { return !age_range && !sex; }
  bool matches(const IndexRecord& record) const;
  void validate() const;
};

enum class SchemeMode {
  kProposed,  // index metadata and image bytes in separate column families
  kNaive,     // everything in one column family
};

std::string to_string(SchemeMode mode);
SchemeMode scheme_mode_from_string(const std::string& name);

// Column names each scheme uses.
struct SchemeLayout {
  FamilyQualifier index;
  FamilyQualifier image;

  static SchemeLayout for_mode(SchemeMode mode);
};

// Builds the table schema a scheme expects (used at upload/synth time).
TableSchema scheme_table_schema(const std::string& table_name, SchemeMode mode);

// Throws ValidationError when the table's schema does not fit the mode.
void validate_scheme(const Table& table, SchemeMode mode, const SchemeLayout& layout);

struct PlanResult {
  std::vector<RowKey> keys;  // exactly the matching rowkeys, ascending
  ByteAccount bytes_scanned;
  uint64_t rows_visited = 0;
};

// Evaluates the predicate by scanning index records. Under the proposed
// scheme only index bytes are read; under the naive scheme every visited row
// materializes all co-located qualifiers, image bytes included.
PlanResult plan_subset(const Table& table, const SubsetPredicate& predicate, SchemeMode mode,
                       const SchemeLayout& layout = {});

struct ExistsResult {
  bool exists = false;
  ByteAccount bytes_scanned;
};

ExistsResult exists_check(const Table& table, const RowKey& key, SchemeMode mode,
                          const SchemeLayout& layout = {});

struct SubsetAverageResult {
  ImageBlob mean;
  RowKey result_rowkey;
  std::vector<RowKey> keys;
  JobMetrics metrics;
  ByteAccount planning_bytes;
};

// Plans over the matching rowkeys only (non-matching keys become per-task
// skip sets) and runs the large-dataset averaging pipeline.
SubsetAverageResult subset_average(Store& store, const std::string& source_table,
                                   const SubsetPredicate& predicate, SchemeMode mode, uint64_t eta,
                                   const std::vector<NodeProfile>& profiles,
                                   const std::string& target_table,
                                   const FamilyQualifier& target_column,
                                   const std::string& job_id, EngineConfig config = {},
                                   const SchemeLayout& layout = {});

}  // namespace cogrid

#endif  // COGRID_QUERY_PLANNER_HPP
