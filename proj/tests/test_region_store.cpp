#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "cogrid/error.hpp"
#include "cogrid/region_store.hpp"
#include "test_util.hpp"

using namespace cogrid;
using cogrid::test::TempDir;

namespace {

TableSchema basic_schema(const std::string& name, uint64_t threshold = 64ull << 20) {
  TableSchema schema;
  schema.name = name;
  schema.families = {ColumnFamily{"image", {"data"}}, ColumnFamily{"index", {"meta"}}};
  schema.split_threshold_bytes = threshold;
  return schema;
}

std::string padded_key(const std::string& prefix, int i, int width = 3) {
  std::string digits = std::to_string(i);
  return prefix + std::string(width - std::min<size_t>(width, digits.size()), '0') + digits;
}

// Independent membership oracle: count regions containing the key.
size_t regions_containing(const std::vector<RegionInfo>& regions, const RowKey& key) {
  size_t hits = 0;
  for (const auto& r : regions)
    if (r.contains(key)) ++hits;
  return hits;
}

}  // namespace

TEST_CASE("create_table presplit semantics") {
  TempDir dir("create");
  Store store(dir.path);

  SUBCASE("no split points gives one unbounded region") {
    auto table = store.create_table(basic_schema("t"), {});
    auto regions = table->regions();
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].start_key.empty());
    CHECK(!regions[0].stop_key.has_value());
  }

  SUBCASE("one split point forces two regions; start keys are inclusive") {
    auto table = store.create_table(basic_schema("t2"), {"m"});
    auto regions = table->regions();
    REQUIRE(regions.size() == 2);
    CHECK(regions[0].start_key.empty());
    CHECK(*regions[0].stop_key == "m");
    CHECK(regions[1].start_key == "m");
    CHECK(table->region_for_key("a").region_id == regions[0].region_id);
    CHECK(table->region_for_key("m").region_id == regions[1].region_id);
    CHECK(table->region_for_key("z").region_id == regions[1].region_id);
  }

  SUBCASE("99 evenly spaced split points give a 100-region disjoint cover") {
    std::vector<RowKey> presplit;
    for (int i = 1; i <= 99; ++i) presplit.push_back(padded_key("k", i * 10, 4));
    auto table = store.create_table(basic_schema("t3"), presplit);
    auto regions = table->regions();
    REQUIRE(regions.size() == 100);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
      RowKey key = padded_key("k", static_cast<int>(rng() % 1100), 4);
      CHECK(regions_containing(regions, key) == 1);
      // binary search agrees with the linear-scan oracle
      RegionInfo found = table->region_for_key(key);
      for (const auto& r : regions)
        if (r.contains(key)) CHECK(r.region_id == found.region_id);
    }
  }

  SUBCASE("idempotent re-create and schema conflicts") {
    auto first = store.create_table(basic_schema("t4"), {});
    auto again = store.create_table(basic_schema("t4"), {});
    CHECK(first.get() == again.get());
    TableSchema other = basic_schema("t4");
    other.families[0].qualifiers.push_back("extra");
    CHECK_THROWS_AS(store.create_table(other, {}), ConflictError);
  }

  SUBCASE("non-increasing presplit keys are rejected") {
    CHECK_THROWS_AS(store.create_table(basic_schema("t5"), {"b", "b"}), ValidationError);
    CHECK_THROWS_AS(store.create_table(basic_schema("t6"), {"c", "a"}), ValidationError);
  }
}

TEST_CASE("upload stores, skips duplicates, and collects per-entry errors") {
  TempDir dir("upload");
  Store store(dir.path / "store");
  auto table = store.create_table(basic_schema("t"), {});

  std::filesystem::path src = dir.path / "src";
  std::filesystem::create_directories(src);
  UploadManifest manifest;
  for (int i = 0; i < 10; ++i) {
    std::string name = padded_key("img_", i);
    write_file_atomic(src / name, "payload-" + std::to_string(i));
    manifest.entries.push_back(ManifestEntry{(src / name).string(), name, "image", "data"});
  }

  UploadReport first = table->upload(manifest);
  CHECK(first.stored == 10);
  CHECK(first.skipped == 0);
  CHECK(first.overwritten == 0);
  CHECK(first.ok());

  UploadReport second = table->upload(manifest);
  CHECK(second.stored == 0);
  CHECK(second.skipped == 10);
  CHECK(second.overwritten == 0);

  manifest.overwrite = true;
  UploadReport third = table->upload(manifest);
  CHECK(third.stored == 0);
  CHECK(third.overwritten == 10);

  SUBCASE("missing source file is a per-entry error, others proceed") {
    UploadManifest partial;
    partial.entries.push_back(ManifestEntry{(src / "nope").string(), "img_x", "image", "data"});
    write_file_atomic(src / "ok", "ok-bytes");
    partial.entries.push_back(ManifestEntry{(src / "ok").string(), "img_y", "image", "data"});
    UploadReport report = table->upload(partial);
    CHECK(report.stored == 1);
    REQUIRE(report.entry_errors.size() == 1);
    CHECK(report.entry_errors[0].first == "img_x");
    CHECK(table->cell_exists("img_y", "image", "data"));
  }

  SUBCASE("unknown family fails validation before any write") {
    uint64_t before = table->digest();
    UploadManifest bad;
    write_file_atomic(src / "f", "bytes");
    bad.entries.push_back(ManifestEntry{(src / "f").string(), "img_ok2", "image", "data"});
    bad.entries.push_back(ManifestEntry{(src / "f").string(), "img_bad", "nosuch", "data"});
    CHECK_THROWS_AS(table->upload(bad), ValidationError);
    CHECK(table->digest() == before);
  }
}

TEST_CASE("size-threshold splitting bounds region sizes") {
  TempDir dir("split");
  Store store(dir.path / "store");
  constexpr uint64_t kThreshold = 64ull << 20;
  auto table = store.create_table(basic_schema("t", kThreshold), {});

  // 200 entries of 1 MB each against a 64 MB threshold.
  std::vector<CellUpdate> updates;
  std::string mb(1 << 20, '\0');
  for (int i = 0; i < 200; ++i) {
    for (size_t j = 0; j < mb.size(); ++j) mb[j] = static_cast<char>((i + j) & 0xff);
    updates.push_back(CellUpdate{padded_key("img_", i), "image", "data", mb});
  }
  UploadReport report = table->put_cells(updates, false);
  CHECK(report.stored == 200);

  auto regions = table->regions();
  CHECK(regions.size() >= 4);  // ceil(200 MB / 64 MB)
  uint64_t total = 0;
  for (const auto& r : regions) {
    CHECK(r.byte_size <= 2 * kThreshold);
    total += r.byte_size;
  }
  CHECK(total == 200ull << 20);

  // cover/disjointness after splits
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial)
    CHECK(regions_containing(regions, padded_key("img_", static_cast<int>(rng() % 220))) == 1);

  // conservation: every entry still reads back byte-identical
  for (int i = 0; i < 200; i += 17) {
    auto [value, scan_report] = table->retrieve_one(padded_key("img_", i), "image", "data");
    REQUIRE(value.size() == mb.size());
    bool same = true;
    for (size_t j = 0; j < value.size(); ++j)
      same = same && value[j] == static_cast<char>((i + j) & 0xff);
    CHECK(same);
  }
}

TEST_CASE("retrieve semantics") {
  TempDir dir("retrieve");
  Store store(dir.path / "store");
  auto table = store.create_table(basic_schema("t"), {"img_050"});

  std::mt19937_64 rng(11);
  std::map<RowKey, std::string> expected;
  std::vector<CellUpdate> updates;
  for (int i = 0; i < 100; ++i) {
    std::string value(1 + rng() % 64, '\0');
    for (auto& c : value) c = static_cast<char>(rng() & 0xff);
    RowKey key = padded_key("img_", i);
    expected[key] = value;
    updates.push_back(CellUpdate{key, "image", "data", value});
  }
  table->put_cells(updates, false);

  SUBCASE("roundtrip is bit-identical") {
    auto [value, report] = table->retrieve_one("img_007", "image", "data");
    CHECK(value == expected["img_007"]);
    CHECK(report.bytes_read.family_total("image") == expected["img_007"].size());
  }

  SUBCASE("empty range is success with zero rows") {
    ScanOptions options;
    options.selector = Selector::range("a", "a");
    options.family = "image";
    options.qualifier = "data";
    size_t rows = 0;
    ScanReport report = table->scan(options, [&](const RowKey&, const std::string&) { ++rows; });
    CHECK(rows == 0);
    CHECK(report.rows_visited == 0);
  }

  SUBCASE("single-rowkey miss is a distinct not-found signal") {
    CHECK_THROWS_AS(table->retrieve_one("missing", "image", "data"), NotFoundError);
  }

  SUBCASE("range scan with skips matches a brute-force filter and stays ordered") {
    ScanOptions options;
    options.selector = Selector::range("img_000", "img_100");
    options.family = "image";
    options.qualifier = "data";
    for (int i = 1; i < 100; i += 2) options.skip_keys.insert(padded_key("img_", i));

    std::vector<RowKey> oracle;
    for (const auto& [key, value] : expected)
      if (key >= "img_000" && key < "img_100" && options.skip_keys.count(key) == 0)
        oracle.push_back(key);

    std::vector<RowKey> seen;
    uint64_t seen_bytes = 0;
    ScanReport report = table->scan(options, [&](const RowKey& key, const std::string& value) {
      seen.push_back(key);
      seen_bytes += value.size();
    });
    CHECK(seen.size() == 50);
    CHECK(seen == oracle);
    CHECK(std::is_sorted(seen.begin(), seen.end()));
    // accounting: reported bytes equal materialized bytes exactly
    CHECK(report.bytes_read.family_total("image") == seen_bytes);
  }
}

TEST_CASE("delete semantics") {
  TempDir dir("delete");
  Store store(dir.path / "store");
  auto table = store.create_table(basic_schema("t"), {});
  std::vector<CellUpdate> updates;
  for (int i = 0; i < 100; ++i)
    updates.push_back(CellUpdate{padded_key("img_", i), "image", "data", "v" + std::to_string(i)});
  table->put_cells(updates, false);

  SUBCASE("single delete then retrieve misses") {
    ScanOptions options;
    options.selector = Selector::single("img_007");
    options.family = "image";
    options.qualifier = "data";
    DeleteReport report = table->erase(options);
    CHECK(report.deleted == 1);
    CHECK_THROWS_AS(table->retrieve_one("img_007", "image", "data"), NotFoundError);
    CHECK_THROWS_AS(table->erase(options), NotFoundError);
  }

  SUBCASE("empty range deletes nothing and succeeds") {
    ScanOptions options;
    options.selector = Selector::range("zzz", "zzz");
    options.family = "image";
    options.qualifier = "data";
    CHECK(table->erase(options).deleted == 0);
  }

  SUBCASE("range delete with a 30-key skip set removes the set difference") {
    ScanOptions options;
    options.selector = Selector::range("img_000", key_successor("img_099"));
    options.family = "image";
    options.qualifier = "data";
    for (int i = 0; i < 30; ++i) options.skip_keys.insert(padded_key("img_", i * 3));
    DeleteReport report = table->erase(options);
    CHECK(report.deleted == 70);
    for (int i = 0; i < 30; ++i)
      CHECK(table->cell_exists(padded_key("img_", i * 3), "image", "data"));
    std::vector<RowKey> remaining =
        table->list_keys(Selector::whole_column(), "image", "data");
    CHECK(remaining.size() == 30);
  }
}

// Model-based property sweep: random upload/delete interleavings against an
// in-memory shadow map, with splits forced by a small threshold.
TEST_CASE("store properties under random operation sequences") {
  std::mt19937_64 rng(20260810);
  for (int round = 0; round < 60; ++round) {
    TempDir dir("prop" + std::to_string(round));
    Store store(dir.path);
    auto table = store.create_table(basic_schema("t", /*threshold=*/2048), {});
    std::map<std::tuple<RowKey, std::string, std::string>, std::string> model;

    int ops = 4 + static_cast<int>(rng() % 8);
    for (int op = 0; op < ops; ++op) {
      if (rng() % 3 != 0) {
        bool overwrite = rng() % 2 == 0;
        std::vector<CellUpdate> updates;
        int count = 1 + static_cast<int>(rng() % 12);
        std::set<std::pair<RowKey, std::string>> used;
        for (int i = 0; i < count; ++i) {
          RowKey key = padded_key("k", static_cast<int>(rng() % 40));
          std::string family = rng() % 2 == 0 ? "image" : "index";
          std::string qualifier = family == "image" ? "data" : "meta";
          if (!used.insert({key, family}).second) continue;
          std::string value(rng() % 400, '\0');
          for (auto& c : value) c = static_cast<char>(rng() & 0xff);
          updates.push_back(CellUpdate{key, family, qualifier, value});
          auto coord = std::make_tuple(key, family, qualifier);
          if (model.count(coord) == 0 || overwrite) model[coord] = value;
        }
        table->put_cells(updates, overwrite);
      } else {
        RowKey lo = padded_key("k", static_cast<int>(rng() % 40));
        RowKey hi = padded_key("k", static_cast<int>(rng() % 40));
        if (hi < lo) std::swap(lo, hi);
        ScanOptions options;
        options.selector = Selector::range(lo, hi);
        options.family = "image";
        options.qualifier = "data";
        table->erase(options);
        for (auto it = model.begin(); it != model.end();) {
          const auto& [key, family, qualifier] = it->first;
          if (family == "image" && key >= lo && key < hi)
            it = model.erase(it);
          else
            ++it;
        }
      }

      // keyspace cover and disjointness
      auto regions = table->regions();
      CHECK(regions[0].start_key.empty());
      CHECK(!regions.back().stop_key.has_value());
      for (size_t i = 1; i < regions.size(); ++i)
        CHECK(*regions[i - 1].stop_key == regions[i].start_key);

      // conservation + order + exact byte accounting, per family
      for (const std::string& family : {std::string("image"), std::string("index")}) {
        std::string qualifier = family == "image" ? "data" : "meta";
        ScanOptions options;
        options.family = family;
        options.qualifier = qualifier;
        std::vector<std::pair<RowKey, std::string>> seen;
        uint64_t seen_bytes = 0;
        ScanReport report = table->scan(options, [&](const RowKey& k, const std::string& v) {
          seen.emplace_back(k, v);
          seen_bytes += v.size();
        });
        std::vector<std::pair<RowKey, std::string>> want;
        for (const auto& [coord, value] : model)
          if (std::get<1>(coord) == family) want.emplace_back(std::get<0>(coord), value);
        CHECK(seen == want);
        CHECK(std::is_sorted(seen.begin(), seen.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; }));
        CHECK(report.bytes_read.family_total(family) == seen_bytes);
      }
    }
  }
}

TEST_CASE("handles are shareable: concurrent readers with region writers") {
  TempDir dir("conc");
  Store store(dir.path);
  auto table = store.create_table(basic_schema("t", /*threshold=*/1 << 16), {"m"});

  std::vector<CellUpdate> seed_updates;
  for (int i = 0; i < 50; ++i)
    seed_updates.push_back(CellUpdate{padded_key("a", i), "image", "data", std::string(100, 'x')});
  table->put_cells(seed_updates, false);

  std::atomic<bool> stop{false};
  std::atomic<int> failures{0};
  std::thread writer([&] {
    for (int i = 0; i < 40; ++i) {
      std::vector<CellUpdate> updates;
      updates.push_back(CellUpdate{padded_key("z", i), "image", "data", std::string(200, 'y')});
      table->put_cells(updates, true);
    }
    stop = true;
  });
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&] {
      while (!stop) {
        ScanOptions options;
        options.selector = Selector::range("a", "b");
        options.family = "image";
        options.qualifier = "data";
        size_t rows = 0;
        table->scan(options, [&](const RowKey&, const std::string&) { ++rows; });
        if (rows != 50) failures.fetch_add(1);
      }
    });
  }
  writer.join();
  for (auto& t : readers) t.join();
  CHECK(failures.load() == 0);
  CHECK(table->list_keys(Selector::whole_column(), "image", "data").size() == 90);
}

TEST_CASE("store reopens from disk with identical content") {
  TempDir dir("reopen");
  uint64_t digest_before;
  {
    Store store(dir.path);
    auto table = store.create_table(basic_schema("t", 4096), {});
    std::vector<CellUpdate> updates;
    for (int i = 0; i < 64; ++i)
      updates.push_back(
          CellUpdate{padded_key("img_", i), "image", "data", std::string(300, char('a' + i % 26))});
    table->put_cells(updates, false);
    digest_before = table->digest();
    CHECK(table->regions().size() > 1);  // threshold forced splits
  }
  Store reopened(dir.path);
  auto table = reopened.open_table("t");
  CHECK(table->digest() == digest_before);
  CHECK(table->schema().split_threshold_bytes == 4096);
  auto [value, report] = table->retrieve_one("img_001", "image", "data");
  CHECK(value == std::string(300, 'b'));
}
