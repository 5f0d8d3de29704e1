#ifndef COGRID_GRID_TOPOLOGY_HPP
#define COGRID_GRID_TOPOLOGY_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cogrid/region_store.hpp"

namespace cogrid {

struct NodeProfile {
  std::string node_id;
  int cores = 1;
  double mips = 1.0;
  double mem_mb = 1.0;
  double disk_read_mb_s = 1.0;
  double disk_write_mb_s = 1.0;

  // Scheduling weight: total cores times per-core speed.
  double weight() const { return static_cast<double>(cores) * mips; }
  void validate() const;
};

// Cluster config file: one node per line,
// `node_id<TAB>cores<TAB>mips<TAB>mem_mb<TAB>disk_read_mb_s<TAB>disk_write_mb_s`.
std::vector<NodeProfile> parse_cluster_config(const std::filesystem::path& path);
std::vector<std::string> node_ids_of(const std::vector<NodeProfile>& profiles);

struct Placement {
  std::map<uint64_t, std::string> assignments;     // region_id -> node_id
  std::map<std::string, uint64_t> per_node_bytes;  // includes zero-byte nodes

  static Placement from_regions(const std::vector<RegionInfo>& regions,
                                const std::vector<NodeProfile>& profiles);
  uint64_t total_bytes() const;
};

struct Move {
  uint64_t region_id = 0;
  std::string from;
  std::string to;
};

struct MovePlan {
  std::vector<Move> moves;
  double predicted_deviation = 0.0;
};

// fraction_i = weight_i / sum_j weight_j.
std::map<std::string, double> target_fractions(const std::vector<NodeProfile>& profiles);

// Total-variation distance between the actual byte distribution and the
// weight-proportional target: (1/2) sum_i |actual_i - target_i|, in [0,1].
double placement_deviation(const Placement& placement, const std::vector<NodeProfile>& profiles);

// Offline greedy balancer: repeatedly move the largest movable region from the
// most-overloaded node to the most-underloaded node, accepting only moves that
// reduce total deviation. Deterministic; ties break toward the smaller node_id
// then the smaller region_id.
MovePlan balance(const Placement& placement, const std::vector<RegionInfo>& regions,
                 const std::vector<NodeProfile>& profiles);

// Relocates region files per the plan. Caller is expected to hold the store's
// exclusive lock; a missing region aborts without applying the failing move.
Placement apply_moves(const MovePlan& plan, Table& table,
                      const std::vector<NodeProfile>& profiles);

void write_move_plan_csv(const std::filesystem::path& path, const MovePlan& plan);

}  // namespace cogrid

#endif  // COGRID_GRID_TOPOLOGY_HPP
