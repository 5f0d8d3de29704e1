#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cogrid/error.hpp"
#include "cogrid/grid_topology.hpp"
#include "test_util.hpp"

using namespace cogrid;
using cogrid::test::TempDir;

namespace {

NodeProfile node(const std::string& id, int cores, double mips) {
  NodeProfile p;
  p.node_id = id;
  p.cores = cores;
  p.mips = mips;
  p.mem_mb = 4096;
  p.disk_read_mb_s = 100;
  p.disk_write_mb_s = 65;
  return p;
}

RegionInfo region(uint64_t id, uint64_t bytes, const std::string& node_id) {
  RegionInfo r;
  r.region_id = id;
  r.byte_size = bytes;
  r.node = node_id;
  return r;
}

// Independent total-variation oracle straight from the raw region list.
double deviation_oracle(const std::vector<RegionInfo>& regions,
                        const std::vector<NodeProfile>& profiles) {
  double weight_sum = 0;
  for (const auto& p : profiles) weight_sum += p.weight();
  double total = 0;
  for (const auto& r : regions) total += static_cast<double>(r.byte_size);
  double dev = 0;
  for (const auto& p : profiles) {
    double actual = 0;
    for (const auto& r : regions)
      if (r.node == p.node_id) actual += static_cast<double>(r.byte_size);
    dev += std::abs(actual / total - p.weight() / weight_sum);
  }
  return dev / 2.0;
}

}  // namespace

TEST_CASE("target_fractions") {
  SUBCASE("homogeneous nodes split evenly") {
    std::vector<NodeProfile> profiles;
    for (int i = 0; i < 4; ++i) profiles.push_back(node("n" + std::to_string(i), 8, 1200));
    auto fractions = target_fractions(profiles);
    double sum = 0;
    for (const auto& [id, f] : fractions) {
      CHECK(f == doctest::Approx(0.25).epsilon(1e-12));
      sum += f;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  SUBCASE("weights follow cores x mips") {
    auto fractions = target_fractions({node("a", 12, 1000), node("b", 32, 1500)});
    CHECK(fractions["a"] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(fractions["b"] == doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("paper-shaped cluster: fast nodes get strictly larger fractions") {
    std::vector<NodeProfile> profiles;
    for (int i = 0; i < 8; ++i) profiles.push_back(node("slow" + std::to_string(i), 12, 1000));
    for (int i = 0; i < 4; ++i) profiles.push_back(node("fast" + std::to_string(i), 32, 1500));
    auto fractions = target_fractions(profiles);
    for (int s = 0; s < 8; ++s)
      for (int f = 0; f < 4; ++f)
        CHECK(fractions["fast" + std::to_string(f)] > fractions["slow" + std::to_string(s)]);
  }

  SUBCASE("empty profile list is rejected") {
    CHECK_THROWS_AS(target_fractions({}), ValidationError);
  }
}

TEST_CASE("placement_deviation") {
  std::vector<NodeProfile> profiles = {node("a", 1, 1000), node("b", 1, 1000)};

  SUBCASE("perfect match is zero") {
    std::vector<RegionInfo> regions = {region(0, 100, "a"), region(1, 100, "b")};
    Placement placement = Placement::from_regions(regions, profiles);
    CHECK(placement_deviation(placement, profiles) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("everything on one of two equal nodes is 0.5") {
    std::vector<RegionInfo> regions = {region(0, 100, "a"), region(1, 100, "a")};
    Placement placement = Placement::from_regions(regions, profiles);
    CHECK(placement_deviation(placement, profiles) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("random instances match the independent summation oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      size_t node_count = 2 + rng() % 4;
      std::vector<NodeProfile> ps;
      for (size_t i = 0; i < node_count; ++i)
        ps.push_back(node("n" + std::to_string(i), 1 + static_cast<int>(rng() % 32),
                          100.0 + static_cast<double>(rng() % 2000)));
      std::vector<RegionInfo> regions;
      size_t region_count = 1 + rng() % 12;
      for (size_t r = 0; r < region_count; ++r)
        regions.push_back(region(r, 1 + rng() % 10000, "n" + std::to_string(rng() % node_count)));
      Placement placement = Placement::from_regions(regions, ps);
      CHECK(std::abs(placement_deviation(placement, ps) - deviation_oracle(regions, ps)) < 1e-12);
    }
  }
}

TEST_CASE("balance plans") {
  SUBCASE("already balanced homogeneous placement yields an empty plan") {
    std::vector<NodeProfile> profiles = {node("a", 4, 1000), node("b", 4, 1000)};
    std::vector<RegionInfo> regions = {region(0, 500, "a"), region(1, 500, "b")};
    MovePlan plan = balance(Placement::from_regions(regions, profiles), regions, profiles);
    CHECK(plan.moves.empty());
    CHECK(plan.predicted_deviation == doctest::Approx(0.0));
  }

  SUBCASE("0.2/0.8 targets with ten equal regions on the small node moves eight") {
    std::vector<NodeProfile> profiles = {node("n1", 12, 1000), node("n2", 32, 1500)};
    std::vector<RegionInfo> regions;
    for (uint64_t i = 0; i < 10; ++i) regions.push_back(region(i, 1000, "n1"));
    MovePlan plan = balance(Placement::from_regions(regions, profiles), regions, profiles);
    CHECK(plan.moves.size() == 8);
    for (const auto& move : plan.moves) {
      CHECK(move.from == "n1");
      CHECK(move.to == "n2");
    }
    CHECK(plan.predicted_deviation == doctest::Approx(0.0).epsilon(1e-9));

    // oracle: deviation as a function of k moved regions is minimized at k=8
    auto dev_after = [](int k) {
      double on1 = (10.0 - k) / 10.0, on2 = k / 10.0;
      return (std::abs(on1 - 0.2) + std::abs(on2 - 0.8)) / 2.0;
    };
    for (int k = 0; k <= 10; ++k)
      if (k != 8) CHECK(dev_after(8) < dev_after(k));
  }

  SUBCASE("deterministic given identical inputs") {
    std::mt19937_64 rng(5);
    std::vector<NodeProfile> profiles = {node("a", 2, 900), node("b", 6, 1100),
                                         node("c", 3, 1500)};
    std::vector<RegionInfo> regions;
    for (uint64_t i = 0; i < 9; ++i)
      regions.push_back(region(i, 100 + rng() % 900, i % 2 == 0 ? "a" : "b"));
    Placement placement = Placement::from_regions(regions, profiles);
    MovePlan first = balance(placement, regions, profiles);
    MovePlan second = balance(placement, regions, profiles);
    REQUIRE(first.moves.size() == second.moves.size());
    for (size_t i = 0; i < first.moves.size(); ++i) {
      CHECK(first.moves[i].region_id == second.moves[i].region_id);
      CHECK(first.moves[i].from == second.moves[i].from);
      CHECK(first.moves[i].to == second.moves[i].to);
    }
  }
}

// Random small instances vs an exhaustive assignment search: the greedy end
// state is per-node within one largest-region fraction of target, every move
// strictly reduces deviation, and the move count stays under regions x nodes.
TEST_CASE("balance bound and monotonicity on random instances") {
  std::mt19937_64 rng(424242);
  for (int trial = 0; trial < 120; ++trial) {
    size_t node_count = 2 + rng() % 4;  // 2..5
    size_t max_regions = node_count >= 5 ? 8 : (node_count == 4 ? 9 : 12);
    size_t region_count = 2 + rng() % (max_regions - 1);

    std::vector<NodeProfile> profiles;
    for (size_t i = 0; i < node_count; ++i)
      profiles.push_back(node("n" + std::to_string(i), 1 + static_cast<int>(rng() % 32),
                              500.0 + static_cast<double>(rng() % 1500)));
    std::vector<RegionInfo> regions;
    uint64_t total = 0, largest = 0;
    for (size_t r = 0; r < region_count; ++r) {
      uint64_t bytes = 1 + rng() % 1000;
      total += bytes;
      largest = std::max(largest, bytes);
      regions.push_back(region(r, bytes, "n" + std::to_string(rng() % node_count)));
    }

    Placement placement = Placement::from_regions(regions, profiles);
    MovePlan plan = balance(placement, regions, profiles);
    CHECK(plan.moves.size() <= region_count * node_count);

    // replay the plan, checking strict decrease per move
    std::vector<RegionInfo> state = regions;
    double prev = deviation_oracle(state, profiles);
    CHECK(plan.predicted_deviation <= prev + 1e-12);
    for (const auto& move : plan.moves) {
      for (auto& r : state) {
        if (r.region_id == move.region_id) {
          CHECK(r.node == move.from);
          r.node = move.to;
        }
      }
      double next = deviation_oracle(state, profiles);
      CHECK(next < prev - 1e-12);
      prev = next;
    }
    CHECK(prev == doctest::Approx(plan.predicted_deviation).epsilon(1e-9));

    // per-node granularity bound at the end state
    auto fractions = target_fractions(profiles);
    double largest_fraction = static_cast<double>(largest) / static_cast<double>(total);
    for (const auto& p : profiles) {
      double actual = 0;
      for (const auto& r : state)
        if (r.node == p.node_id) actual += static_cast<double>(r.byte_size);
      actual /= static_cast<double>(total);
      CHECK(std::abs(actual - fractions[p.node_id]) <= largest_fraction + 1e-9);
    }

    // exhaustive assignment search: greedy cannot beat the optimum
    double best = 1.0;
    size_t combos = 1;
    for (size_t r = 0; r < region_count; ++r) combos *= node_count;
    std::vector<RegionInfo> assignment = regions;
    for (size_t code = 0; code < combos; ++code) {
      size_t c = code;
      for (size_t r = 0; r < region_count; ++r) {
        assignment[r].node = "n" + std::to_string(c % node_count);
        c /= node_count;
      }
      best = std::min(best, deviation_oracle(assignment, profiles));
    }
    CHECK(plan.predicted_deviation >= best - 1e-12);
  }
}

TEST_CASE("apply_moves relocates region data without changing content") {
  TempDir dir("apply");
  Store store(dir.path, {"n1", "n2"});
  TableSchema schema;
  schema.name = "t";
  schema.families = {ColumnFamily{"image", {"data"}}};
  schema.split_policy = SplitPolicy::kPreSplitOnly;
  std::vector<RowKey> presplit;
  for (int i = 1; i < 10; ++i) presplit.push_back("k" + std::to_string(i));
  auto table = store.create_table(schema, presplit);

  std::vector<CellUpdate> updates;
  for (int i = 0; i < 10; ++i)
    updates.push_back(CellUpdate{"k" + std::to_string(i), "image", "data",
                                 std::string(1000, char('a' + i))});
  table->put_cells(updates, false);
  uint64_t digest_before = table->digest();

  std::vector<NodeProfile> profiles = {node("n1", 12, 1000), node("n2", 32, 1500)};

  SUBCASE("empty plan leaves the placement unchanged") {
    Placement before = Placement::from_regions(table->regions(), profiles);
    Placement after = apply_moves(MovePlan{}, *table, profiles);
    CHECK(before.assignments == after.assignments);
    CHECK(before.per_node_bytes == after.per_node_bytes);
  }

  SUBCASE("single move changes only the node attribute") {
    RegionInfo target_region = table->region_for_key("k3");
    std::string other = target_region.node == "n1" ? "n2" : "n1";
    MovePlan plan;
    plan.moves.push_back(Move{target_region.region_id, target_region.node, other});
    apply_moves(plan, *table, profiles);
    RegionInfo moved = table->region_for_key("k3");
    CHECK(moved.region_id == target_region.region_id);
    CHECK(moved.node == other);
    CHECK(moved.start_key == target_region.start_key);
    CHECK(table->digest() == digest_before);
  }

  SUBCASE("full plan preserves every retrievable byte") {
    MovePlan plan = balance(Placement::from_regions(table->regions(), profiles),
                            table->regions(), profiles);
    Placement after = apply_moves(plan, *table, profiles);
    CHECK(table->digest() == digest_before);
    CHECK(placement_deviation(after, profiles) == doctest::Approx(plan.predicted_deviation));
    for (int i = 0; i < 10; ++i) {
      auto [value, report] = table->retrieve_one("k" + std::to_string(i), "image", "data");
      CHECK(value == std::string(1000, char('a' + i)));
    }
  }

  SUBCASE("missing region data aborts without applying the failing move") {
    RegionInfo victim = table->region_for_key("k5");
    std::filesystem::path file =
        dir.path / "nodes" / victim.node / "t" / ("region_" + std::to_string(victim.region_id) + ".dat");
    REQUIRE(std::filesystem::exists(file));
    // force reload from disk by reopening the store, then break the file
    std::filesystem::remove(file);
    Store fresh(dir.path, {"n1", "n2"});
    auto reopened = fresh.open_table("t");
    MovePlan plan;
    plan.moves.push_back(Move{victim.region_id, victim.node,
                              victim.node == "n1" ? "n2" : "n1"});
    CHECK_THROWS_AS(apply_moves(plan, *reopened, profiles), IntegrityError);
    CHECK(reopened->region_for_key("k5").node == victim.node);
  }
}
