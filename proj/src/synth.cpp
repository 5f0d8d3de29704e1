#include "cogrid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "cogrid/error.hpp"
#include "cogrid/region_store.hpp"

namespace cogrid {

void SyntheticDatasetSpec::validate() const {
  if (image_count == 0) throw ValidationError("image_count must be positive");
  if (dims.empty()) throw ValidationError("dims must be nonempty");
  uint64_t product = 1;
  for (uint32_t d : dims) product *= d;
  if (product == 0) throw ValidationError("dims product must be positive");
  if (last_dim_jitter) {
    if (last_dim_jitter->first == 0 || last_dim_jitter->first > last_dim_jitter->second)
      throw ValidationError("last_dim_jitter needs 0 < lo <= hi");
  }
  if (key_prefix.empty()) throw ValidationError("key_prefix must be nonempty");
}

std::vector<uint64_t> apportion(uint64_t total, const std::vector<double>& weights) {
  double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weight_sum <= 0) throw ValidationError("apportion needs positive total weight");
  std::vector<uint64_t> counts(weights.size(), 0);
  std::vector<std::pair<double, size_t>> remainders;
  uint64_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    double ideal = static_cast<double>(total) * weights[i] / weight_sum;
    counts[i] = static_cast<uint64_t>(std::floor(ideal));
    assigned += counts[i];
    remainders.emplace_back(ideal - std::floor(ideal), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

std::vector<SyntheticRecord> generate_records(const SyntheticDatasetSpec& spec, uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto next_unit = [&rng]() {
    // 53-bit uniform in [0, 1)
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  };

  // One (sex, bin) slot per image, apportioned by the configured weights,
  // then shuffled so metadata does not correlate with rowkey order.
  std::vector<double> weights;
  for (double w : spec.female_bin_weights) weights.push_back(w);
  for (double w : spec.male_bin_weights) weights.push_back(w);
  std::vector<uint64_t> counts = apportion(spec.image_count, weights);
  std::vector<std::pair<Sex, size_t>> slots;
  slots.reserve(spec.image_count);
  for (size_t cell = 0; cell < counts.size(); ++cell) {
    Sex sex = cell < 4 ? Sex::kF : Sex::kM;
    size_t bin = cell % 4;
    for (uint64_t i = 0; i < counts[cell]; ++i) slots.emplace_back(sex, bin);
  }
  for (size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng() % i]);

  size_t key_width = 1;
  for (uint64_t v = spec.image_count; v >= 10; v /= 10) ++key_width;

  std::vector<SyntheticRecord> records;
  records.reserve(spec.image_count);
  for (uint64_t i = 0; i < spec.image_count; ++i) {
    SyntheticRecord record;
    std::string digits = std::to_string(i);
    record.rowkey =
        spec.key_prefix + std::string(key_width - std::min(key_width, digits.size()), '0') + digits;

    std::vector<uint32_t> dims = spec.dims;
    if (spec.last_dim_jitter) {
      uint64_t span = spec.last_dim_jitter->second - spec.last_dim_jitter->first + 1;
      dims.back() = spec.last_dim_jitter->first + static_cast<uint32_t>(rng() % span);
    }
    record.image.dims = dims;
    uint64_t voxels = 1;
    for (uint32_t d : dims) voxels *= d;
    record.image.voxels.resize(voxels);
    for (uint64_t v = 0; v < voxels; ++v)
      record.image.voxels[v] = static_cast<float>(next_unit() * 1000.0);

    auto [sex, bin] = slots[i];
    auto [lo, hi] = SyntheticDatasetSpec::kAgeBins[bin];
    // Stay off the bin boundaries so interval ends are never ambiguous.
    double age = lo + 0.5 + next_unit() * (hi - lo - 1.0);
    record.index.sex = sex;
    record.index.age_years = static_cast<float>(age);
    record.index.file_size_bytes = record.image.encoded_size();
    records.push_back(std::move(record));
  }
  return records;
}

SynthOutput generate_files(const SyntheticDatasetSpec& spec, uint64_t seed,
                           const std::filesystem::path& out_dir, SchemeMode mode) {
  std::vector<SyntheticRecord> records = generate_records(spec, seed);
  SchemeLayout layout = SchemeLayout::for_mode(mode);
  std::filesystem::create_directories(out_dir / "blobs");
  std::filesystem::create_directories(out_dir / "idx");

  std::ostringstream manifest, index_tsv, schema;
  char buf[32];
  for (const auto& record : records) {
    std::filesystem::path blob_path = out_dir / "blobs" / (record.rowkey + ".cgim");
    std::filesystem::path idx_path = out_dir / "idx" / (record.rowkey + ".idx");
    write_file_atomic(blob_path, record.image.encode());
    write_file_atomic(idx_path, record.index.encode());
    manifest << blob_path.string() << "\t" << record.rowkey << "\t" << layout.image.family << "\t"
             << layout.image.qualifier << "\n";
    manifest << idx_path.string() << "\t" << record.rowkey << "\t" << layout.index.family << "\t"
             << layout.index.qualifier << "\n";
    std::snprintf(buf, sizeof(buf), "%.3f", record.index.age_years);
    index_tsv << record.rowkey << "\t" << record.index.file_size_bytes << "\t" << buf << "\t"
              << to_string(record.index.sex) << "\n";
  }
  TableSchema table_schema = scheme_table_schema("t", mode);
  for (const auto& fam : table_schema.families)
    for (const auto& q : fam.qualifiers) schema << fam.name << "\t" << q << "\n";

  SynthOutput out;
  out.manifest_path = out_dir / "manifest.tsv";
  out.schema_path = out_dir / "schema.tsv";
  out.index_tsv_path = out_dir / "index.tsv";
  out.image_count = records.size();
  write_file_atomic(out.manifest_path, manifest.str());
  write_file_atomic(out.schema_path, schema.str());
  write_file_atomic(out.index_tsv_path, index_tsv.str());
  return out;
}

}  // namespace cogrid
