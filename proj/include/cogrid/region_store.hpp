#ifndef COGRID_REGION_STORE_HPP
#define COGRID_REGION_STORE_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "cogrid/keys.hpp"
#include "cogrid/table_schema.hpp"

namespace cogrid {

// Metadata snapshot of one region: a contiguous rowkey range, the unit of
// placement, splitting and balancer moves.
struct RegionInfo {
  uint64_t region_id = 0;
  RowKey start_key;                // inclusive; empty string sorts below every rowkey
  std::optional<RowKey> stop_key;  // exclusive; nullopt = unbounded
  uint64_t byte_size = 0;          // sum of stored cell value lengths
  std::string node;

  bool contains(const RowKey& key) const {
    return start_key <= key && (!stop_key || key < *stop_key);
  }
};

struct UploadReport {
  uint64_t stored = 0;
  uint64_t skipped = 0;
  uint64_t overwritten = 0;
  std::vector<std::pair<std::string, std::string>> entry_errors;  // (unique_name, message)
  bool ok() const { return entry_errors.empty(); }
};

struct DeleteReport {
  uint64_t deleted = 0;
  uint64_t rows_visited = 0;
};

struct Selector {
  enum class Kind { kSingleKey, kRange, kWholeColumn };
  Kind kind = Kind::kWholeColumn;
  RowKey key;
  RowKey start;
  RowKey stop;

  static Selector single(RowKey k) {
    Selector s;
    s.kind = Kind::kSingleKey;
    s.key = std::move(k);
    return s;
  }
  static Selector range(RowKey start, RowKey stop) {
    Selector s;
    s.kind = Kind::kRange;
    s.start = std::move(start);
    s.stop = std::move(stop);
    return s;
  }
  static Selector whole_column() { return Selector{}; }
};

// Value bytes materialized during an operation, keyed by (family, qualifier).
struct ByteAccount {
  std::map<std::pair<std::string, std::string>, uint64_t> by_column;

  void add(const std::string& family, const std::string& qualifier, uint64_t n) {
    by_column[{family, qualifier}] += n;
  }
  uint64_t family_total(const std::string& family) const;
  uint64_t column_total(const std::string& family, const std::string& qualifier) const;
  uint64_t total() const;
  ByteAccount& operator+=(const ByteAccount& other);
};

struct ScanOptions {
  Selector selector;
  std::string family;
  std::string qualifier;
  std::set<RowKey> skip_keys;
  // When set, visiting a row materializes (and accounts for) every qualifier
  // the row stores in `family`, not just the requested one. This is the cost
  // semantics of scanning a single-family table layout.
  bool materialize_row_family = false;
};

struct ScanReport {
  uint64_t rows_visited = 0;
  ByteAccount bytes_read;
};

struct CellUpdate {
  RowKey rowkey;
  std::string family;
  std::string qualifier;
  std::string value;
};

class Store;

// Handle to one table. Safe to share across threads: concurrent readers are
// permitted on any region, at most one writer mutates a region at a time, and
// writers to different regions proceed in parallel.
class Table {
 public:
  const TableSchema& schema() const { return schema_; }
  const std::string& name() const { return schema_.name; }

  std::vector<RegionInfo> regions() const;
  RegionInfo region_for_key(const RowKey& key) const;

  // Stores manifest entries read from disk; rowkey = unique name. Missing
  // source files become per-entry errors, everything else proceeds.
  UploadReport upload(const UploadManifest& manifest);

  // Raw cell ingest (upload minus the file reads). Size-threshold splits run
  // after the batch is applied.
  UploadReport put_cells(const std::vector<CellUpdate>& updates, bool overwrite);

  using EmitFn = std::function<void(const RowKey&, const std::string&)>;
  ScanReport scan(const ScanOptions& options, const EmitFn& emit) const;

  // Single-cell read; throws NotFoundError on miss (distinct from an empty
  // range scan, which succeeds with zero rows).
  std::pair<std::string, ScanReport> retrieve_one(const RowKey& key, const std::string& family,
                                                  const std::string& qualifier) const;

  std::vector<RowKey> list_keys(const Selector& selector, const std::string& family,
                                const std::string& qualifier,
                                const std::set<RowKey>& skip_keys = {}) const;
  bool cell_exists(const RowKey& key, const std::string& family,
                   const std::string& qualifier) const;

  DeleteReport erase(const ScanOptions& options);

  // Relocates a region's file to another node directory. Throws
  // IntegrityError (before touching anything) if the region data is missing.
  void move_region(uint64_t region_id, const std::string& to_node);

  // Order-independent digest over the full (rowkey, family, qualifier, value)
  // content; used for conservation checks.
  uint64_t digest() const;

 private:
  friend class Store;

  struct CellKey {
    RowKey row;
    std::string family;
    std::string qualifier;
    auto operator<=>(const CellKey&) const = default;
  };

  struct Region {
    RegionInfo info;  // byte_size mirrored in `bytes`
    std::atomic<uint64_t> bytes{0};
    mutable std::shared_mutex data_mutex;
    bool loaded = false;
    std::map<CellKey, std::string> cells;
  };
  using RegionPtr = std::shared_ptr<Region>;

  Table(Store* store, TableSchema schema);

  std::filesystem::path region_file(const Region& region) const;
  std::filesystem::path region_file(uint64_t region_id, const std::string& node) const;
  void load_region_locked(Region& region) const;
  void flush_region_locked(const Region& region) const;
  void persist_meta() const;
  void split_oversized_regions();
  size_t region_index_for_key_locked(const RowKey& key) const;
  std::vector<RegionPtr> snapshot_regions() const;

  Store* store_;
  TableSchema schema_;
  mutable std::shared_mutex regions_mutex_;  // guards regions_ and next_region_id_
  std::vector<RegionPtr> regions_;           // sorted by start_key
  uint64_t next_region_id_ = 0;
  mutable std::mutex meta_mutex_;
};

// Embedded, region-partitioned column-family store rooted at a directory.
// Layout: tables/<name>/meta.tsv holds schema and region metadata;
// nodes/<node>/<table>/region_<id>.dat holds one region's sorted log.
class Store {
 public:
  // `node_ids` are the placement targets for newly created regions
  // (round-robin, in order). Defaults to a single node "n0".
  explicit Store(std::filesystem::path root, std::vector<std::string> node_ids = {});

  // Creates the table (with optional pre-split points) or returns the
  // existing handle when the schema matches exactly.
  std::shared_ptr<Table> create_table(const TableSchema& schema,
                                      const std::vector<RowKey>& presplit_keys = {});
  std::shared_ptr<Table> open_table(const std::string& name);
  bool table_exists(const std::string& name) const;
  std::vector<std::string> table_names() const;

  const std::filesystem::path& root() const { return root_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }

  uint64_t digest();

 private:
  friend class Table;

  std::filesystem::path root_;
  std::vector<std::string> node_ids_;
  std::mutex tables_mutex_;
  std::map<std::string, std::shared_ptr<Table>> tables_;
};

// Advisory whole-store lock (flock on <root>/.lock). Jobs and ingest hold it
// shared; the balancer's apply step takes it exclusive and reports BusyError
// instead of waiting.
class StoreLock {
 public:
  enum class Mode { kShared, kExclusive };
  StoreLock(const std::filesystem::path& store_root, Mode mode);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

// Atomic file replace: writes to a temp sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace cogrid

#endif  // COGRID_REGION_STORE_HPP
