#include "cogrid/grid_topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cogrid/error.hpp"

namespace cogrid {

void NodeProfile::validate() const {
  if (node_id.empty()) throw ValidationError("node_id must be nonempty");
  if (cores <= 0 || mips <= 0 || mem_mb <= 0 || disk_read_mb_s <= 0 || disk_write_mb_s <= 0)
    throw ValidationError("node " + node_id + " has a non-positive profile field");
}

std::vector<NodeProfile> parse_cluster_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open cluster config: " + path.string());
  std::vector<NodeProfile> profiles;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    NodeProfile p;
    if (!(fields >> p.node_id >> p.cores >> p.mips >> p.mem_mb >> p.disk_read_mb_s >>
          p.disk_write_mb_s))
      throw ValidationError("bad cluster config line: " + line);
    p.validate();
    profiles.push_back(std::move(p));
  }
  if (profiles.empty()) throw ValidationError("cluster config lists no nodes: " + path.string());
  return profiles;
}

std::vector<std::string> node_ids_of(const std::vector<NodeProfile>& profiles) {
  std::vector<std::string> ids;
  ids.reserve(profiles.size());
  for (const auto& p : profiles) ids.push_back(p.node_id);
  return ids;
}

Placement Placement::from_regions(const std::vector<RegionInfo>& regions,
                                  const std::vector<NodeProfile>& profiles) {
  Placement placement;
  for (const auto& p : profiles) placement.per_node_bytes[p.node_id] = 0;
  for (const auto& r : regions) {
    placement.assignments[r.region_id] = r.node;
    placement.per_node_bytes[r.node] += r.byte_size;
  }
  return placement;
}

uint64_t Placement::total_bytes() const {
  uint64_t total = 0;
  for (const auto& [node, bytes] : per_node_bytes) total += bytes;
  return total;
}

std::map<std::string, double> target_fractions(const std::vector<NodeProfile>& profiles) {
  if (profiles.empty()) throw ValidationError("target_fractions needs at least one node");
  double total = 0.0;
  for (const auto& p : profiles) {
    p.validate();
    total += p.weight();
  }
  std::map<std::string, double> fractions;
  for (const auto& p : profiles) {
    if (fractions.count(p.node_id) != 0)
      throw ValidationError("duplicate node_id in profiles: " + p.node_id);
    fractions[p.node_id] = p.weight() / total;
  }
  return fractions;
}

namespace {

double deviation_of(const std::map<std::string, uint64_t>& per_node_bytes,
                    const std::map<std::string, double>& targets, uint64_t total_bytes) {
  double dev = 0.0;
  // Union of target nodes and byte-holding nodes; either side may have
  // entries the other lacks.
  for (const auto& [node, target] : targets) {
    auto it = per_node_bytes.find(node);
    double actual =
        it == per_node_bytes.end() || total_bytes == 0
            ? 0.0
            : static_cast<double>(it->second) / static_cast<double>(total_bytes);
    dev += std::abs(actual - target);
  }
  for (const auto& [node, bytes] : per_node_bytes) {
    if (targets.count(node) != 0) continue;
    if (total_bytes != 0) dev += static_cast<double>(bytes) / static_cast<double>(total_bytes);
  }
  return dev / 2.0;
}

}  // namespace

double placement_deviation(const Placement& placement, const std::vector<NodeProfile>& profiles) {
  return deviation_of(placement.per_node_bytes, target_fractions(profiles),
                      placement.total_bytes());
}

MovePlan balance(const Placement& placement, const std::vector<RegionInfo>& regions,
                 const std::vector<NodeProfile>& profiles) {
  auto targets = target_fractions(profiles);
  uint64_t total_bytes = placement.total_bytes();
  if (total_bytes == 0) throw ValidationError("balance requires total bytes > 0");
  for (const auto& r : regions) {
    auto it = placement.assignments.find(r.region_id);
    if (it == placement.assignments.end() || it->second != r.node)
      throw ValidationError("placement is inconsistent with the region list");
  }

  std::map<std::string, uint64_t> node_bytes = placement.per_node_bytes;
  for (const auto& r : regions)
    if (node_bytes.count(r.node) == 0) node_bytes[r.node] = 0;
  std::map<std::string, std::vector<const RegionInfo*>> node_regions;
  for (const auto& [node, bytes] : node_bytes) node_regions[node];
  std::map<uint64_t, std::string> location;
  for (const auto& r : regions) {
    node_regions[r.node].push_back(&r);
    location[r.region_id] = r.node;
  }
  // Largest first; region_id breaks ties.
  auto region_order = [](const RegionInfo* a, const RegionInfo* b) {
    if (a->byte_size != b->byte_size) return a->byte_size > b->byte_size;
    return a->region_id < b->region_id;
  };
  for (auto& [node, list] : node_regions) std::sort(list.begin(), list.end(), region_order);

  auto fraction = [&](const std::string& node) {
    return static_cast<double>(node_bytes[node]) / static_cast<double>(total_bytes);
  };
  auto target_of = [&](const std::string& node) {
    auto it = targets.find(node);
    return it == targets.end() ? 0.0 : it->second;
  };
  auto total_deviation = [&]() { return deviation_of(node_bytes, targets, total_bytes); };

  constexpr double kEps = 1e-12;
  MovePlan plan;
  double current = total_deviation();
  while (true) {
    std::string over, under;
    double over_dev = 0.0, under_dev = 0.0;
    for (const auto& [node, bytes] : node_bytes) {
      double d = fraction(node) - target_of(node);
      if (over.empty() || d > over_dev + kEps) {
        over = node;
        over_dev = d;
      }
    }
    for (const auto& [node, target] : targets) {
      double d = (node_bytes.count(node) != 0 ? fraction(node) : 0.0) - target;
      if (under.empty() || d < under_dev - kEps) {
        under = node;
        under_dev = d;
      }
    }
    if (over.empty() || under.empty() || over == under || over_dev <= kEps) break;

    auto& candidates = node_regions[over];
    const RegionInfo* chosen = nullptr;
    double chosen_dev = current;
    for (const RegionInfo* r : candidates) {
      double s = static_cast<double>(r->byte_size) / static_cast<double>(total_bytes);
      double new_over = std::abs(over_dev - s);
      double new_under = std::abs(under_dev + s);
      double new_dev = current - (std::abs(over_dev) + std::abs(under_dev)) / 2.0 +
                       (new_over + new_under) / 2.0;
      if (new_dev < current - kEps) {
        chosen = r;
        chosen_dev = new_dev;
        break;  // candidates are largest-first
      }
    }
    if (chosen == nullptr) break;

    node_bytes[over] -= chosen->byte_size;
    node_bytes[under] += chosen->byte_size;
    candidates.erase(std::find(candidates.begin(), candidates.end(), chosen));
    auto& dst = node_regions[under];
    dst.insert(std::upper_bound(dst.begin(), dst.end(), chosen, region_order), chosen);
    location[chosen->region_id] = under;
    plan.moves.push_back(Move{chosen->region_id, over, under});
    current = chosen_dev;
  }
  plan.predicted_deviation = current;
  return plan;
}

Placement apply_moves(const MovePlan& plan, Table& table,
                      const std::vector<NodeProfile>& profiles) {
  for (const auto& move : plan.moves) {
    if (move.from == move.to)
      throw ValidationError("move plan contains a no-op move for region " +
                            std::to_string(move.region_id));
    table.move_region(move.region_id, move.to);
  }
  return Placement::from_regions(table.regions(), profiles);
}

void write_move_plan_csv(const std::filesystem::path& path, const MovePlan& plan) {
  std::ostringstream out;
  out << "region_id,from,to\n";
  for (const auto& move : plan.moves)
    out << move.region_id << "," << move.from << "," << move.to << "\n";
  write_file_atomic(path, out.str());
}

}  // namespace cogrid
