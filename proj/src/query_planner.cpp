#include "cogrid/query_planner.hpp"

#include <cstring>

#include "cogrid/error.hpp"

namespace cogrid {

std::string to_string(Sex sex) { return sex == Sex::kF ? "F" : "M"; }

Sex sex_from_string(const std::string& name) {
  if (name == "F" || name == "f") return Sex::kF;
  if (name == "M" || name == "m") return Sex::kM;
  throw ValidationError("unknown sex value: " + name);
}

std::string IndexRecord::encode() const {
  std::string out;
  out.reserve(kEncodedSize);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((file_size_bytes >> (8 * i)) & 0xff));
  uint32_t age_bits;
  std::memcpy(&age_bits, &age_years, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((age_bits >> (8 * i)) & 0xff));
  out.push_back(static_cast<char>(sex));
  return out;
}

IndexRecord IndexRecord::decode(std::string_view bytes) {
  if (bytes.size() != kEncodedSize)
    throw ValidationError("index record has wrong length: " + std::to_string(bytes.size()));
  IndexRecord record;
  record.file_size_bytes = 0;
  for (int i = 0; i < 8; ++i)
    record.file_size_bytes |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[i]))
                              << (8 * i);
  uint32_t age_bits = 0;
  for (int i = 0; i < 4; ++i)
    age_bits |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  std::memcpy(&record.age_years, &age_bits, 4);
  unsigned char s = static_cast<unsigned char>(bytes[12]);
  if (s > 1) throw ValidationError("index record has invalid sex byte");
  record.sex = static_cast<Sex>(s);
  return record;
}

void SubsetPredicate::validate() const {
  if (age_range && !(age_range->first < age_range->second))
    throw ValidationError("age range needs min < max");
}

bool SubsetPredicate::matches(const IndexRecord& record) const {
  if (sex && record.sex != *sex) return false;
  if (age_range) {
    double age = static_cast<double>(record.age_years);
    // (min, max]
    if (!(age > age_range->first && age <= age_range->second)) return false;
  }
  return true;
}

std::string to_string(SchemeMode mode) {
  return mode == SchemeMode::kProposed ? "proposed" : "naive";
}

SchemeMode scheme_mode_from_string(const std::string& name) {
  if (name == "proposed") return SchemeMode::kProposed;
  if (name == "naive") return SchemeMode::kNaive;
  throw ValidationError("unknown scheme mode: " + name);
}

SchemeLayout SchemeLayout::for_mode(SchemeMode mode) {
  SchemeLayout layout;
  if (mode == SchemeMode::kProposed) {
    layout.index = FamilyQualifier{"index", "meta"};
    layout.image = FamilyQualifier{"image", "data"};
  } else {
    layout.index = FamilyQualifier{"all", "meta"};
    layout.image = FamilyQualifier{"all", "data"};
  }
  return layout;
}

TableSchema scheme_table_schema(const std::string& table_name, SchemeMode mode) {
  SchemeLayout layout = SchemeLayout::for_mode(mode);
  TableSchema schema;
  schema.name = table_name;
  if (mode == SchemeMode::kProposed) {
    schema.families.push_back(ColumnFamily{layout.image.family, {layout.image.qualifier}});
    schema.families.push_back(ColumnFamily{layout.index.family, {layout.index.qualifier}});
  } else {
    schema.families.push_back(
        ColumnFamily{layout.image.family, {layout.image.qualifier, layout.index.qualifier}});
  }
  return schema;
}

namespace {

SchemeLayout resolve_layout(SchemeMode mode, const SchemeLayout& layout) {
  if (layout.index.family.empty() && layout.image.family.empty())
    return SchemeLayout::for_mode(mode);
  return layout;
}

}  // namespace

void validate_scheme(const Table& table, SchemeMode mode, const SchemeLayout& layout) {
  const TableSchema& schema = table.schema();
  if (!schema.has_column(layout.index.family, layout.index.qualifier) ||
      !schema.has_column(layout.image.family, layout.image.qualifier))
    throw ValidationError("table " + schema.name + " does not hold the " + to_string(mode) +
                          " scheme columns");
  bool same_family = layout.index.family == layout.image.family;
  if (mode == SchemeMode::kProposed && same_family)
    throw ValidationError("proposed scheme needs index and image in separate column families");
  if (mode == SchemeMode::kNaive && !same_family)
    throw ValidationError("naive scheme stores index and image in one column family");
}

PlanResult plan_subset(const Table& table, const SubsetPredicate& predicate, SchemeMode mode,
                       const SchemeLayout& layout_in) {
  predicate.validate();
  SchemeLayout layout = resolve_layout(mode, layout_in);
  validate_scheme(table, mode, layout);

  ScanOptions options;
  options.selector = Selector::whole_column();
  options.family = layout.index.family;
  options.qualifier = layout.index.qualifier;
  options.materialize_row_family = mode == SchemeMode::kNaive;

  PlanResult result;
  ScanReport report = table.scan(options, [&](const RowKey& row, const std::string& value) {
    IndexRecord record;
    try {
      record = IndexRecord::decode(value);
    } catch (const std::exception& e) {
      throw ValidationError("bad index record at rowkey " + row + ": " + e.what());
    }
    if (predicate.matches(record)) result.keys.push_back(row);
  });
  result.bytes_scanned = std::move(report.bytes_read);
  result.rows_visited = report.rows_visited;
  return result;
}

ExistsResult exists_check(const Table& table, const RowKey& key, SchemeMode mode,
                          const SchemeLayout& layout_in) {
  SchemeLayout layout = resolve_layout(mode, layout_in);
  validate_scheme(table, mode, layout);

  ScanOptions options;
  options.selector = Selector::single(key);
  options.family = layout.index.family;
  options.qualifier = layout.index.qualifier;
  options.materialize_row_family = mode == SchemeMode::kNaive;

  ExistsResult result;
  ScanReport report =
      table.scan(options, [&](const RowKey&, const std::string&) { result.exists = true; });
  result.bytes_scanned = std::move(report.bytes_read);
  return result;
}

SubsetAverageResult subset_average(Store& store, const std::string& source_table,
                                   const SubsetPredicate& predicate, SchemeMode mode, uint64_t eta,
                                   const std::vector<NodeProfile>& profiles,
                                   const std::string& target_table,
                                   const FamilyQualifier& target_column, const std::string& job_id,
                                   EngineConfig config, const SchemeLayout& layout_in) {
  SchemeLayout layout = resolve_layout(mode, layout_in);
  auto source = store.open_table(source_table);

  PlanResult plan = plan_subset(*source, predicate, mode, layout);
  if (plan.keys.empty()) throw NotFoundError("predicate selects no rows in " + source_table);

  // All rowkeys the index holds, in order; non-matching ones become skips so
  // map scans never materialize them.
  std::vector<RowKey> all_keys =
      source->list_keys(Selector::whole_column(), layout.index.family, layout.index.qualifier);
  std::set<RowKey> matching(plan.keys.begin(), plan.keys.end());
  std::set<RowKey> skip;
  for (const auto& k : all_keys)
    if (matching.count(k) == 0) skip.insert(k);

  JobTemplate job;
  job.source_table = source_table;
  job.target_table = target_table;
  job.query = layout.index;
  job.data = layout.image;
  job.target = target_column;
  job.level = AnalysisLevel::kLargeDataset;
  job.job_id = job_id;
  job.tasks = plan_map_tasks(all_keys, eta, skip);

  config.materialize_row_family = mode == SchemeMode::kNaive;
  JobResult job_result = run_job(store, job, profiles, config);

  SubsetAverageResult result;
  result.result_rowkey = job_result.result_rowkey;
  result.keys = std::move(plan.keys);
  result.metrics = std::move(job_result.metrics);
  result.planning_bytes = std::move(plan.bytes_scanned);
  auto target = store.open_table(target_table);
  auto [blob, report] =
      target->retrieve_one(result.result_rowkey, target_column.family, target_column.qualifier);
  result.mean = ImageBlob::decode(blob);
  return result;
}

}  // namespace cogrid
