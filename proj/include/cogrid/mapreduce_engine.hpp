#ifndef COGRID_MAPREDUCE_ENGINE_HPP
#define COGRID_MAPREDUCE_ENGINE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogrid/grid_topology.hpp"
#include "cogrid/image_blob.hpp"
#include "cogrid/region_store.hpp"

namespace cogrid {

struct FamilyQualifier {
  std::string family;
  std::string qualifier;
};

// One unit of map work: a half-open rowkey range plus the keys to skip.
struct MapTaskSpec {
  RowKey start_key;  // inclusive
  RowKey stop_key;   // exclusive
  std::set<RowKey> skip_keys;
  FamilyQualifier data;   // image bytes
  FamilyQualifier index;  // query metadata

  void validate() const;
};

enum class AnalysisLevel { kImageBased, kDatasetBased, kLargeDataset };

std::string to_string(AnalysisLevel level);
AnalysisLevel analysis_level_from_string(const std::string& name);

struct JobTemplate {
  std::string source_table;
  std::string target_table;
  FamilyQualifier query;   // data-query column
  FamilyQualifier data;    // image column
  FamilyQualifier target;  // result column in the target table
  std::vector<MapTaskSpec> tasks;
  AnalysisLevel level = AnalysisLevel::kLargeDataset;
  std::string job_id = "job";

  void validate() const;
};

// Running sums for a chunk of images. Sums are f64 even though blobs carry
// f32 voxels, so the result is stable across chunkings.
struct PartialAverage {
  std::vector<double> voxel_sum;
  uint64_t count = 0;
  std::vector<uint32_t> dims;

  void accumulate(const ImageBlob& image, const RowKey& rowkey);
  uint64_t serialized_bytes() const { return 16 + 4 * dims.size() + 8 * voxel_sum.size(); }
};

struct TaskMetric {
  size_t task_id = 0;
  std::string node;
  bool local = true;
  int wave = 0;
  uint64_t bytes_index = 0;
  uint64_t bytes_image = 0;
  double duration_s = 0.0;  // simulated from bytes, node speeds and delay
};

struct JobMetrics {
  std::vector<TaskMetric> tasks;
  double map_wall_s = 0.0;
  double shuffle_s = 0.0;
  double reduce_s = 0.0;
  double total_resource_s = 0.0;
  double rack_local_fraction = 0.0;  // (local tasks) / (total tasks)

  uint64_t bytes_index_total() const;
  uint64_t bytes_image_total() const;
};

// CSV columns: task_id,node,local,bytes_index,bytes_image,duration_s
void write_job_metrics_csv(const std::filesystem::path& path, const JobMetrics& metrics);

// Chunks the surviving keys into runs of exactly `eta` (the last chunk may be
// smaller). Keys must be ascending and deduplicated.
std::vector<MapTaskSpec> plan_map_tasks(const std::vector<RowKey>& rowkeys, uint64_t eta,
                                        const std::set<RowKey>& skip_keys = {});

// Task-pair file: one `start_key<TAB>stop_key` per line.
std::vector<MapTaskSpec> parse_task_pair_file(const std::filesystem::path& path);

struct TaskAssignment {
  std::string node;
  int wave = 0;
  bool local = true;
};

// Wave-based locality scheduler: a task runs on the node hosting the region
// containing its start key when that node has spare capacity this wave,
// otherwise on the node with the most spare capacity (flagged non-local).
// A new wave starts when every node is at its core count.
std::vector<TaskAssignment> schedule(const std::vector<MapTaskSpec>& tasks,
                                     const std::vector<RegionInfo>& regions,
                                     const std::vector<NodeProfile>& profiles);

// Engine-wide knobs; all simulated-time inputs are deterministic.
struct EngineConfig {
  double task_delay_s = 0.0;       // artificial per-task processing time at 1000 MIPS
  double bandwidth_mb_s = 70.0;    // network speed for non-local reads and shuffle
  bool materialize_row_family = false;  // single-family table cost semantics
  // Per-row operation for the image-based level; default is zlib compression.
  std::function<std::string(const RowKey&, const std::string&)> row_transform;
};

// Reads the task's image cells and accumulates their voxel sums.
PartialAverage map_partial_average(const MapTaskSpec& task, const Table& table,
                                   ScanReport* report = nullptr,
                                   bool materialize_row_family = false);

// Merges partials into the mean image. All partials are collected on one
// reducer; dims must agree and the total count must be positive.
ImageBlob reduce_average(const std::vector<PartialAverage>& partials);

struct JobResult {
  RowKey result_rowkey;  // empty for the image-based level
  JobMetrics metrics;
};

// Runs the templated job. Map tasks execute in parallel bounded per node by
// core counts; all partials route to a single reducer. A failing task aborts
// the job with no target-table writes.
JobResult run_job(Store& store, const JobTemplate& job, const std::vector<NodeProfile>& profiles,
                  const EngineConfig& config = {});

// Deterministic zlib compression; the shipped image-based row operation.
std::string compress_bytes(const std::string& bytes);

}  // namespace cogrid

#endif  // COGRID_MAPREDUCE_ENGINE_HPP
