#include "cogrid/mapreduce_engine.hpp"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "cogrid/error.hpp"

namespace cogrid {

void MapTaskSpec::validate() const {
  if (!(start_key < stop_key)) throw ValidationError("map task needs start_key < stop_key");
  for (const auto& k : skip_keys) {
    if (k < start_key || k >= stop_key)
      throw ValidationError("map task skip key outside [start, stop): " + k);
  }
}

std::string to_string(AnalysisLevel level) {
  switch (level) {
    case AnalysisLevel::kImageBased:
      return "image-based";
    case AnalysisLevel::kDatasetBased:
      return "dataset-based";
    case AnalysisLevel::kLargeDataset:
      return "large-dataset";
  }
  return "?";
}

AnalysisLevel analysis_level_from_string(const std::string& name) {
  if (name == "image-based" || name == "image") return AnalysisLevel::kImageBased;
  if (name == "dataset-based" || name == "dataset") return AnalysisLevel::kDatasetBased;
  if (name == "large-dataset" || name == "large") return AnalysisLevel::kLargeDataset;
  throw ValidationError("unknown analysis level: " + name);
}

void JobTemplate::validate() const {
  if (source_table.empty() || target_table.empty())
    throw ValidationError("job needs source and target table names");
  if (query.family.empty() || data.family.empty() || target.family.empty() ||
      query.qualifier.empty() || data.qualifier.empty() || target.qualifier.empty())
    throw ValidationError("job needs all three family/qualifier slots");
  if (tasks.empty()) throw ValidationError("job has no map tasks");
  if (job_id.empty()) throw ValidationError("job_id must be nonempty");
  if (level == AnalysisLevel::kDatasetBased && tasks.size() != 1)
    throw ValidationError("dataset-based level uses a single map task");
  for (const auto& t : tasks) t.validate();
}

void PartialAverage::accumulate(const ImageBlob& image, const RowKey& rowkey) {
  if (dims.empty()) {
    dims = image.dims;
    voxel_sum.assign(image.voxels.size(), 0.0);
  } else if (dims != image.dims) {
    throw ValidationError("image dims mismatch at rowkey " + rowkey);
  }
  for (size_t i = 0; i < image.voxels.size(); ++i)
    voxel_sum[i] += static_cast<double>(image.voxels[i]);
  ++count;
}

uint64_t JobMetrics::bytes_index_total() const {
  uint64_t sum = 0;
  for (const auto& t : tasks) sum += t.bytes_index;
  return sum;
}

uint64_t JobMetrics::bytes_image_total() const {
  uint64_t sum = 0;
  for (const auto& t : tasks) sum += t.bytes_image;
  return sum;
}

void write_job_metrics_csv(const std::filesystem::path& path, const JobMetrics& metrics) {
  std::ostringstream out;
  out << "task_id,node,local,bytes_index,bytes_image,duration_s\n";
  char buf[64];
  for (const auto& t : metrics.tasks) {
    std::snprintf(buf, sizeof(buf), "%.6f", t.duration_s);
    out << t.task_id << "," << t.node << "," << (t.local ? 1 : 0) << "," << t.bytes_index << ","
        << t.bytes_image << "," << buf << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<MapTaskSpec> plan_map_tasks(const std::vector<RowKey>& rowkeys, uint64_t eta,
                                        const std::set<RowKey>& skip_keys) {
  if (rowkeys.empty()) throw ValidationError("plan_map_tasks needs a nonempty key list");
  if (eta == 0) throw ValidationError("eta must be >= 1");
  for (size_t i = 1; i < rowkeys.size(); ++i) {
    if (!(rowkeys[i - 1] < rowkeys[i]))
      throw ValidationError("rowkeys must be ascending and deduplicated");
  }
  std::vector<RowKey> survivors;
  survivors.reserve(rowkeys.size());
  for (const auto& k : rowkeys)
    if (skip_keys.count(k) == 0) survivors.push_back(k);

  std::vector<MapTaskSpec> tasks;
  for (size_t i = 0; i < survivors.size(); i += eta) {
    size_t end = std::min(survivors.size(), i + static_cast<size_t>(eta));
    MapTaskSpec task;
    task.start_key = survivors[i];
    task.stop_key = end < survivors.size() ? survivors[end] : key_successor(survivors.back());
    for (auto it = skip_keys.lower_bound(task.start_key);
         it != skip_keys.end() && *it < task.stop_key; ++it)
      task.skip_keys.insert(*it);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<MapTaskSpec> parse_task_pair_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open task pair file: " + path.string());
  std::vector<MapTaskSpec> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ValidationError("task pair line needs `start<TAB>stop`: " + line);
    MapTaskSpec task;
    task.start_key = line.substr(0, tab);
    task.stop_key = line.substr(tab + 1);
    task.validate();
    tasks.push_back(std::move(task));
  }
  if (tasks.empty()) throw ValidationError("task pair file is empty: " + path.string());
  return tasks;
}

std::vector<TaskAssignment> schedule(const std::vector<MapTaskSpec>& tasks,
                                     const std::vector<RegionInfo>& regions,
                                     const std::vector<NodeProfile>& profiles) {
  if (profiles.empty()) throw ValidationError("schedule needs at least one node profile");
  std::map<std::string, int> capacity;
  for (const auto& p : profiles) {
    p.validate();
    capacity[p.node_id] = p.cores;
  }
  auto home_of = [&](const RowKey& key) -> std::string {
    for (const auto& r : regions)
      if (r.contains(key)) return r.node;
    return {};
  };

  std::vector<TaskAssignment> assignments(tasks.size());
  std::map<std::string, int> load;
  for (const auto& [node, cores] : capacity) load[node] = 0;
  int wave = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    std::string home = home_of(tasks[i].start_key);
    while (true) {
      if (!home.empty() && capacity.count(home) != 0 && load[home] < capacity[home]) {
        ++load[home];
        assignments[i] = TaskAssignment{home, wave, true};
        break;
      }
      // Most spare capacity; map order breaks ties toward the smaller node_id.
      std::string best;
      int best_spare = 0;
      for (const auto& [node, cores] : capacity) {
        int spare = cores - load[node];
        if (spare > best_spare) {
          best = node;
          best_spare = spare;
        }
      }
      if (!best.empty()) {
        ++load[best];
        assignments[i] = TaskAssignment{best, wave, best == home};
        break;
      }
      ++wave;
      for (auto& [node, l] : load) l = 0;
    }
  }
  return assignments;
}

PartialAverage map_partial_average(const MapTaskSpec& task, const Table& table,
                                   ScanReport* report, bool materialize_row_family) {
  task.validate();
  ScanOptions options;
  options.selector = Selector::range(task.start_key, task.stop_key);
  options.family = task.data.family;
  options.qualifier = task.data.qualifier;
  options.skip_keys = task.skip_keys;
  options.materialize_row_family = materialize_row_family;
  PartialAverage partial;
  ScanReport scan_report = table.scan(options, [&](const RowKey& row, const std::string& value) {
    ImageBlob image;
    try {
      image = ImageBlob::decode(value);
    } catch (const std::exception& e) {
      throw ValidationError("undecodable image at rowkey " + row + ": " + e.what());
    }
    partial.accumulate(image, row);
  });
  if (report != nullptr) *report = std::move(scan_report);
  return partial;
}

ImageBlob reduce_average(const std::vector<PartialAverage>& partials) {
  if (partials.empty()) throw ValidationError("reduce_average needs at least one partial");
  std::vector<uint32_t> dims;
  std::vector<double> sum;
  uint64_t count = 0;
  for (const auto& p : partials) {
    if (p.count == 0) continue;
    if (dims.empty()) {
      dims = p.dims;
      sum.assign(p.voxel_sum.size(), 0.0);
    } else if (dims != p.dims) {
      throw ValidationError("partial dims mismatch in reduce");
    }
    for (size_t i = 0; i < p.voxel_sum.size(); ++i) sum[i] += p.voxel_sum[i];
    count += p.count;
  }
  if (count == 0) throw ValidationError("reduce_average has zero total image count");
  ImageBlob mean;
  mean.dims = dims;
  mean.voxels.resize(sum.size());
  double inv = 1.0 / static_cast<double>(count);
  for (size_t i = 0; i < sum.size(); ++i)
    mean.voxels[i] = static_cast<float>(sum[i] * inv);
  return mean;
}

std::string compress_bytes(const std::string& bytes) {
  uLongf bound = compressBound(static_cast<uLong>(bytes.size()));
  std::string out(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uLong>(bytes.size()),
                6) != Z_OK)
    throw IntegrityError("zlib compression failed");
  out.resize(bound);
  return out;
}

namespace {

const NodeProfile* find_profile(const std::vector<NodeProfile>& profiles,
                                const std::string& node_id) {
  for (const auto& p : profiles)
    if (p.node_id == node_id) return &p;
  return nullptr;
}

// Reducer runs on the highest-weight node; ties toward the smaller node_id.
const NodeProfile& reducer_node(const std::vector<NodeProfile>& profiles) {
  const NodeProfile* best = &profiles.front();
  for (const auto& p : profiles) {
    if (p.weight() > best->weight() || (p.weight() == best->weight() && p.node_id < best->node_id))
      best = &p;
  }
  return *best;
}

constexpr double kBytesPerMb = 1e6;
constexpr double kReferenceMips = 1000.0;  // task_delay_s is calibrated at this speed

}  // namespace

JobResult run_job(Store& store, const JobTemplate& job, const std::vector<NodeProfile>& profiles,
                  const EngineConfig& config) {
  job.validate();
  if (profiles.empty()) throw ValidationError("run_job needs node profiles");
  StoreLock lock(store.root(), StoreLock::Mode::kShared);

  auto source = store.open_table(job.source_table);
  // Target creation waits until commit so a failed job leaves no trace; an
  // existing target is only validated here.
  std::shared_ptr<Table> target;
  if (store.table_exists(job.target_table)) {
    target = store.open_table(job.target_table);
    if (!target->schema().has_column(job.target.family, job.target.qualifier))
      throw ValidationError("target table lacks column " + job.target.family + ":" +
                            job.target.qualifier);
  }

  std::vector<MapTaskSpec> tasks = job.tasks;
  for (auto& t : tasks) {
    t.data = job.data;
    t.index = job.query;
  }
  std::vector<TaskAssignment> assignments = schedule(tasks, source->regions(), profiles);

  const size_t n = tasks.size();
  std::vector<PartialAverage> partials(n);
  std::vector<ScanReport> reports(n);
  std::vector<std::vector<CellUpdate>> staged(n);
  std::vector<std::string> task_errors(n);
  std::atomic<bool> failed{false};

  auto row_transform = config.row_transform
                           ? config.row_transform
                           : [](const RowKey&, const std::string& v) { return compress_bytes(v); };

  auto run_task = [&](size_t i) {
    try {
      if (job.level == AnalysisLevel::kImageBased) {
        ScanOptions options;
        options.selector = Selector::range(tasks[i].start_key, tasks[i].stop_key);
        options.family = tasks[i].data.family;
        options.qualifier = tasks[i].data.qualifier;
        options.skip_keys = tasks[i].skip_keys;
        options.materialize_row_family = config.materialize_row_family;
        reports[i] = source->scan(options, [&](const RowKey& row, const std::string& value) {
          staged[i].push_back(
              CellUpdate{row, job.target.family, job.target.qualifier, row_transform(row, value)});
        });
      } else {
        partials[i] =
            map_partial_average(tasks[i], *source, &reports[i], config.materialize_row_family);
      }
    } catch (const std::exception& e) {
      task_errors[i] = e.what();
      failed = true;
    }
  };

  size_t worker_count = std::max<unsigned>(1, std::thread::hardware_concurrency());
  worker_count = std::min(worker_count, n);
  std::atomic<size_t> next_task{0};
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (size_t w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      while (true) {
        size_t i = next_task.fetch_add(1);
        if (i >= n) break;
        run_task(i);
      }
    });
  }
  for (auto& t : workers) t.join();

  if (failed) {
    for (size_t i = 0; i < n; ++i)
      if (!task_errors[i].empty())
        throw ValidationError("map task " + std::to_string(i) + " failed: " + task_errors[i]);
  }

  // Simulated per-task time: local disk read, network when non-local, the
  // artificial processing delay scaled by node speed, and the output write.
  JobResult result;
  JobMetrics& metrics = result.metrics;
  metrics.tasks.resize(n);
  int max_wave = 0;
  for (size_t i = 0; i < n; ++i) {
    const TaskAssignment& asg = assignments[i];
    const NodeProfile* prof = find_profile(profiles, asg.node);
    TaskMetric& m = metrics.tasks[i];
    m.task_id = i;
    m.node = asg.node;
    m.local = asg.local;
    m.wave = asg.wave;
    m.bytes_index = reports[i].bytes_read.column_total(job.query.family, job.query.qualifier);
    m.bytes_image = reports[i].bytes_read.column_total(job.data.family, job.data.qualifier);
    double in_mb = static_cast<double>(reports[i].bytes_read.total()) / kBytesPerMb;
    uint64_t out_bytes = 0;
    if (job.level == AnalysisLevel::kImageBased) {
      for (const auto& cell : staged[i]) out_bytes += cell.value.size();
    } else {
      out_bytes = partials[i].serialized_bytes();
    }
    double out_mb = static_cast<double>(out_bytes) / kBytesPerMb;
    m.duration_s = in_mb / prof->disk_read_mb_s + (asg.local ? 0.0 : in_mb / config.bandwidth_mb_s) +
                   config.task_delay_s * (kReferenceMips / prof->mips) +
                   out_mb / prof->disk_write_mb_s;
    max_wave = std::max(max_wave, asg.wave);
  }
  for (int w = 0; w <= max_wave; ++w) {
    double longest = 0.0;
    for (const auto& m : metrics.tasks)
      if (m.wave == w) longest = std::max(longest, m.duration_s);
    metrics.map_wall_s += longest;
  }
  double map_resource = 0.0;
  for (const auto& m : metrics.tasks) map_resource += m.duration_s;
  size_t local_count = 0;
  for (const auto& m : metrics.tasks) local_count += m.local ? 1 : 0;
  metrics.rack_local_fraction = static_cast<double>(local_count) / static_cast<double>(n);

  std::vector<CellUpdate> commits;
  for (auto& batch : staged)
    for (auto& cell : batch) commits.push_back(std::move(cell));

  if (job.level != AnalysisLevel::kImageBased) {
    ImageBlob mean = reduce_average(partials);
    const NodeProfile& reducer = reducer_node(profiles);
    double mean_mb = static_cast<double>(mean.encoded_size()) / kBytesPerMb;
    for (size_t i = 0; i < n; ++i) {
      double partial_mb = static_cast<double>(partials[i].serialized_bytes()) / kBytesPerMb;
      if (assignments[i].node != reducer.node_id)
        metrics.shuffle_s += partial_mb / config.bandwidth_mb_s;
      metrics.shuffle_s += partial_mb / reducer.disk_write_mb_s;
      metrics.reduce_s += partial_mb / reducer.disk_read_mb_s;
    }
    metrics.reduce_s += mean_mb / reducer.disk_write_mb_s;
    result.result_rowkey = job.job_id + "/mean";
    commits.push_back(
        CellUpdate{result.result_rowkey, job.target.family, job.target.qualifier, mean.encode()});
  }
  metrics.total_resource_s = map_resource + metrics.shuffle_s + metrics.reduce_s;

  if (!target) {
    TableSchema schema;
    schema.name = job.target_table;
    schema.families.push_back(ColumnFamily{job.target.family, {job.target.qualifier}});
    target = store.create_table(schema);
  }
  target->put_cells(commits, /*overwrite=*/true);
  return result;
}

}  // namespace cogrid
