#ifndef COGRID_SYNTH_HPP
#define COGRID_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cogrid/image_blob.hpp"
#include "cogrid/query_planner.hpp"

namespace cogrid {

// Desk-scale synthetic cohort: CGIM volumes plus (size, age, sex) metadata
// with the studied population's age/sex proportions by default.
struct SyntheticDatasetSpec {
  uint64_t image_count = 512;
  std::vector<uint32_t> dims = {16, 16, 16};
  // Varies the last dimension within [lo, hi] to spread blob sizes.
  std::optional<std::pair<uint32_t, uint32_t>> last_dim_jitter;
  // Age bins (years, half-open (lo, hi]): 4-20, 20-40, 40-60, >60.
  static constexpr std::array<std::pair<double, double>, 4> kAgeBins = {
      {{4.0, 20.0}, {20.0, 40.0}, {40.0, 60.0}, {60.0, 90.0}}};
  std::array<double, 4> female_bin_weights = {1157, 651, 230, 332};
  std::array<double, 4> male_bin_weights = {698, 648, 280, 494};
  std::string key_prefix = "img_";

  void validate() const;
};

struct SyntheticRecord {
  RowKey rowkey;
  ImageBlob image;
  IndexRecord index;  // file_size_bytes = encoded image size
};

// Deterministic in `seed`: equal seeds give byte-identical records.
std::vector<SyntheticRecord> generate_records(const SyntheticDatasetSpec& spec, uint64_t seed);

struct SynthOutput {
  std::filesystem::path manifest_path;
  std::filesystem::path schema_path;
  std::filesystem::path index_tsv_path;
  uint64_t image_count = 0;
};

// Writes blobs, per-row index records, an upload manifest, the scheme's
// schema file, and a human-readable index TSV (`rowkey<TAB>size<TAB>age<TAB>sex`).
SynthOutput generate_files(const SyntheticDatasetSpec& spec, uint64_t seed,
                           const std::filesystem::path& out_dir, SchemeMode mode);

// Largest-remainder apportionment of `total` over `weights`.
std::vector<uint64_t> apportion(uint64_t total, const std::vector<double>& weights);

}  // namespace cogrid

#endif  // COGRID_SYNTH_HPP
