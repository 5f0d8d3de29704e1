#include "cogrid/region_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "cogrid/error.hpp"

namespace cogrid {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// file helpers

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IntegrityError("cannot write file: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IntegrityError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// ByteAccount

uint64_t ByteAccount::family_total(const std::string& family) const {
  uint64_t sum = 0;
  for (const auto& [col, n] : by_column)
    if (col.first == family) sum += n;
  return sum;
}

uint64_t ByteAccount::column_total(const std::string& family, const std::string& qualifier) const {
  auto it = by_column.find({family, qualifier});
  return it == by_column.end() ? 0 : it->second;
}

uint64_t ByteAccount::total() const {
  uint64_t sum = 0;
  for (const auto& [col, n] : by_column) sum += n;
  return sum;
}

ByteAccount& ByteAccount::operator+=(const ByteAccount& other) {
  for (const auto& [col, n] : other.by_column) by_column[col] += n;
  return *this;
}

// ---------------------------------------------------------------------------
// region file format: sorted log of records followed by an offset index.
//   "CGRG" u32 version u64 count
//   records: u32 row_len, u32 fam_len, u32 qual_len, u64 val_len, payloads
//   index:   count x u64 record offset
//   footer:  u64 index_offset, "CGRX"

namespace {

constexpr char kRegionMagic[4] = {'C', 'G', 'R', 'G'};
constexpr char kIndexMagic[4] = {'C', 'G', 'R', 'X'};
constexpr uint32_t kRegionVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  uint32_t u32() {
    check(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    check(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }
  std::string bytes(uint64_t n) {
    check(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }

 private:
  unsigned char byte() { return static_cast<unsigned char>(buf_[pos_++]); }
  void check(uint64_t n) const {
    if (pos_ + n > buf_.size()) throw IntegrityError("region file truncated");
  }
  const std::string& buf_;
  size_t pos_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Table

Table::Table(Store* store, TableSchema schema) : store_(store), schema_(std::move(schema)) {}

fs::path Table::region_file(uint64_t region_id, const std::string& node) const {
  return store_->root() / "nodes" / node / schema_.name /
         ("region_" + std::to_string(region_id) + ".dat");
}

fs::path Table::region_file(const Region& region) const {
  return region_file(region.info.region_id, region.info.node);
}

void Table::load_region_locked(Region& region) const {
  fs::path path = region_file(region);
  region.cells.clear();
  uint64_t total = 0;
  if (fs::exists(path)) {
    std::string buf = read_file(path);
    Reader r(buf);
    if (r.bytes(4) != std::string(kRegionMagic, 4))
      throw IntegrityError("bad region file magic: " + path.string());
    if (r.u32() != kRegionVersion)
      throw IntegrityError("unsupported region file version: " + path.string());
    uint64_t count = r.u64();
    for (uint64_t i = 0; i < count; ++i) {
      uint32_t row_len = r.u32();
      uint32_t fam_len = r.u32();
      uint32_t qual_len = r.u32();
      uint64_t val_len = r.u64();
      CellKey key;
      key.row = r.bytes(row_len);
      key.family = r.bytes(fam_len);
      key.qualifier = r.bytes(qual_len);
      std::string value = r.bytes(val_len);
      total += value.size();
      region.cells.emplace_hint(region.cells.end(), std::move(key), std::move(value));
    }
  }
  if (total != region.bytes.load())
    throw IntegrityError("region " + std::to_string(region.info.region_id) +
                         " content bytes disagree with metadata");
  region.loaded = true;
}

void Table::flush_region_locked(const Region& region) const {
  fs::path path = region_file(region);
  if (region.cells.empty()) {
    std::error_code ec;
    fs::remove(path, ec);
    return;
  }
  std::string out;
  out.append(kRegionMagic, 4);
  put_u32(out, kRegionVersion);
  put_u64(out, region.cells.size());
  std::vector<uint64_t> offsets;
  offsets.reserve(region.cells.size());
  for (const auto& [key, value] : region.cells) {
    offsets.push_back(out.size());
    put_u32(out, static_cast<uint32_t>(key.row.size()));
    put_u32(out, static_cast<uint32_t>(key.family.size()));
    put_u32(out, static_cast<uint32_t>(key.qualifier.size()));
    put_u64(out, value.size());
    out += key.row;
    out += key.family;
    out += key.qualifier;
    out += value;
  }
  uint64_t index_offset = out.size();
  for (uint64_t off : offsets) put_u64(out, off);
  put_u64(out, index_offset);
  out.append(kIndexMagic, 4);
  write_file_atomic(path, out);
}

namespace {

std::string encode_key_field(const RowKey& key) {
  return key.empty() ? "-" : "k" + hex_encode(key);
}

RowKey decode_key_field(const std::string& field) {
  if (field == "-") return {};
  if (field.empty() || field[0] != 'k') throw IntegrityError("bad key field in table meta");
  return hex_decode(field.substr(1));
}

}  // namespace

void Table::persist_meta() const {
  std::vector<RegionInfo> snapshot;
  uint64_t next_id;
  {
    std::shared_lock lock(regions_mutex_);
    for (const auto& r : regions_) {
      RegionInfo info = r->info;
      info.byte_size = r->bytes.load();
      snapshot.push_back(std::move(info));
    }
    next_id = next_region_id_;
  }
  std::ostringstream out;
  out << "cogrid-table\tv1\n";
  out << "name\t" << schema_.name << "\n";
  out << "split_policy\t" << to_string(schema_.split_policy) << "\n";
  out << "split_threshold\t" << schema_.split_threshold_bytes << "\n";
  out << "next_region_id\t" << next_id << "\n";
  for (const auto& fam : schema_.families) {
    out << "family\t" << fam.name;
    for (const auto& q : fam.qualifiers) out << "\t" << q;
    out << "\n";
  }
  for (const auto& info : snapshot) {
    out << "region\t" << info.region_id << "\t" << encode_key_field(info.start_key) << "\t"
        << (info.stop_key ? "k" + hex_encode(*info.stop_key) : "inf") << "\t" << info.node << "\t"
        << info.byte_size << "\n";
  }
  std::lock_guard meta_lock(meta_mutex_);
  write_file_atomic(store_->root() / "tables" / schema_.name / "meta.tsv", out.str());
}

std::vector<Table::RegionPtr> Table::snapshot_regions() const {
  std::shared_lock lock(regions_mutex_);
  return regions_;
}

size_t Table::region_index_for_key_locked(const RowKey& key) const {
  // Last region whose start_key <= key. Regions cover the keyspace, so the
  // first region always starts at the empty key.
  size_t lo = 0, hi = regions_.size();
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (regions_[mid]->info.start_key <= key)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

std::vector<RegionInfo> Table::regions() const {
  std::shared_lock lock(regions_mutex_);
  std::vector<RegionInfo> out;
  out.reserve(regions_.size());
  for (const auto& r : regions_) {
    RegionInfo info = r->info;
    info.byte_size = r->bytes.load();
    out.push_back(std::move(info));
  }
  return out;
}

RegionInfo Table::region_for_key(const RowKey& key) const {
  std::shared_lock lock(regions_mutex_);
  const auto& r = regions_[region_index_for_key_locked(key)];
  RegionInfo info = r->info;
  info.byte_size = r->bytes.load();
  return info;
}

UploadReport Table::upload(const UploadManifest& manifest) {
  manifest.validate();
  for (const auto& entry : manifest.entries) {
    if (!schema_.has_column(entry.family, entry.qualifier))
      throw ValidationError("unknown column " + entry.family + ":" + entry.qualifier +
                            " in table " + schema_.name);
  }
  UploadReport report;
  std::vector<CellUpdate> updates;
  updates.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    try {
      updates.push_back(
          CellUpdate{entry.unique_name, entry.family, entry.qualifier, read_file(entry.source_path)});
    } catch (const std::exception& e) {
      report.entry_errors.emplace_back(entry.unique_name, e.what());
    }
  }
  UploadReport stored = put_cells(updates, manifest.overwrite);
  report.stored = stored.stored;
  report.skipped = stored.skipped;
  report.overwritten = stored.overwritten;
  return report;
}

UploadReport Table::put_cells(const std::vector<CellUpdate>& updates, bool overwrite) {
  for (const auto& u : updates) {
    if (u.rowkey.empty()) throw ValidationError("rowkey must be nonempty");
    if (!schema_.has_column(u.family, u.qualifier))
      throw ValidationError("unknown column " + u.family + ":" + u.qualifier + " in table " +
                            schema_.name);
  }
  UploadReport report;
  {
    std::shared_lock lock(regions_mutex_);
    // Group updates per region, then apply region batches in key order with
    // exactly one writer per region.
    std::map<size_t, std::vector<const CellUpdate*>> by_region;
    for (const auto& u : updates) by_region[region_index_for_key_locked(u.rowkey)].push_back(&u);
    for (auto& [idx, batch] : by_region) {
      Region& region = *regions_[idx];
      std::unique_lock data_lock(region.data_mutex);
      if (!region.loaded) load_region_locked(region);
      for (const CellUpdate* u : batch) {
        CellKey key{u->rowkey, u->family, u->qualifier};
        auto it = region.cells.find(key);
        if (it != region.cells.end()) {
          if (!overwrite) {
            ++report.skipped;
            continue;
          }
          region.bytes -= it->second.size();
          it->second = u->value;
          region.bytes += u->value.size();
          ++report.overwritten;
        } else {
          region.cells.emplace(std::move(key), u->value);
          region.bytes += u->value.size();
          ++report.stored;
        }
      }
      flush_region_locked(region);
    }
  }
  if (schema_.split_policy == SplitPolicy::kSizeThreshold) split_oversized_regions();
  persist_meta();
  return report;
}

void Table::split_oversized_regions() {
  std::unique_lock lock(regions_mutex_);
  std::set<uint64_t> unsplittable;
  while (true) {
    size_t target = regions_.size();
    for (size_t i = 0; i < regions_.size(); ++i) {
      if (regions_[i]->bytes.load() > schema_.split_threshold_bytes &&
          unsplittable.count(regions_[i]->info.region_id) == 0) {
        target = i;
        break;
      }
    }
    if (target == regions_.size()) break;
    RegionPtr parent = regions_[target];
    std::unique_lock data_lock(parent->data_mutex);
    if (!parent->loaded) load_region_locked(*parent);

    // Per-row byte totals; split points sit on row boundaries.
    std::vector<std::pair<RowKey, uint64_t>> rows;
    for (const auto& [key, value] : parent->cells) {
      if (rows.empty() || rows.back().first != key.row) rows.emplace_back(key.row, 0);
      rows.back().second += value.size();
    }
    if (rows.size() < 2) {
      unsplittable.insert(parent->info.region_id);
      continue;
    }
    // Median by bytes: pick the boundary minimizing |left - right|, ties
    // toward the lexicographically smaller key.
    uint64_t total = parent->bytes.load();
    uint64_t prefix = 0;
    size_t best_idx = 1;
    uint64_t best_diff = UINT64_MAX;
    for (size_t i = 1; i < rows.size(); ++i) {
      prefix += rows[i - 1].second;
      uint64_t right = total - prefix;
      uint64_t diff = prefix > right ? prefix - right : right - prefix;
      if (diff < best_diff) {
        best_diff = diff;
        best_idx = i;
      }
    }
    const RowKey& split_key = rows[best_idx].first;

    auto left = std::make_shared<Region>();
    auto right = std::make_shared<Region>();
    left->info = RegionInfo{next_region_id_++, parent->info.start_key, split_key, 0,
                            parent->info.node};
    right->info =
        RegionInfo{next_region_id_++, split_key, parent->info.stop_key, 0, parent->info.node};
    auto boundary = parent->cells.lower_bound(CellKey{split_key, "", ""});
    uint64_t left_bytes = 0;
    for (auto it = parent->cells.begin(); it != boundary; ++it) {
      left_bytes += it->second.size();
      left->cells.insert(left->cells.end(), *it);
    }
    for (auto it = boundary; it != parent->cells.end(); ++it)
      right->cells.insert(right->cells.end(), *it);
    left->bytes = left_bytes;
    right->bytes = total - left_bytes;
    left->loaded = right->loaded = true;

    flush_region_locked(*left);
    flush_region_locked(*right);
    std::error_code ec;
    fs::remove(region_file(*parent), ec);
    data_lock.unlock();

    regions_[target] = left;
    regions_.insert(regions_.begin() + static_cast<long>(target) + 1, right);
  }
}

namespace {

struct ScanRange {
  RowKey lo;
  std::optional<RowKey> hi;  // exclusive
  bool empty = false;
};

ScanRange selector_range(const Selector& sel) {
  ScanRange r;
  switch (sel.kind) {
    case Selector::Kind::kSingleKey:
      r.lo = sel.key;
      r.hi = key_successor(sel.key);
      break;
    case Selector::Kind::kRange:
      r.lo = sel.start;
      r.hi = sel.stop;
      r.empty = !(sel.start < sel.stop);
      break;
    case Selector::Kind::kWholeColumn:
      break;
  }
  return r;
}

}  // namespace

ScanReport Table::scan(const ScanOptions& options, const EmitFn& emit) const {
  if (!schema_.has_column(options.family, options.qualifier))
    throw ValidationError("unknown column " + options.family + ":" + options.qualifier +
                          " in table " + schema_.name);
  ScanReport report;
  ScanRange range = selector_range(options.selector);
  if (range.empty) return report;

  for (const RegionPtr& region : snapshot_regions()) {
    if (range.hi && region->info.start_key >= *range.hi) break;
    if (region->info.stop_key && *region->info.stop_key <= range.lo) continue;

    auto visit = [&](const Region& r) {
      auto it = r.cells.lower_bound(CellKey{range.lo, "", ""});
      while (it != r.cells.end()) {
        const RowKey row = it->first.row;
        if (range.hi && row >= *range.hi) break;
        if (options.skip_keys.count(row) != 0) {
          while (it != r.cells.end() && it->first.row == row) ++it;
          continue;
        }
        bool visited = false;
        for (; it != r.cells.end() && it->first.row == row; ++it) {
          if (it->first.family != options.family) continue;
          if (options.materialize_row_family) {
            report.bytes_read.add(it->first.family, it->first.qualifier, it->second.size());
            visited = true;
            if (it->first.qualifier == options.qualifier && emit) emit(row, it->second);
          } else if (it->first.qualifier == options.qualifier) {
            report.bytes_read.add(it->first.family, it->first.qualifier, it->second.size());
            visited = true;
            if (emit) emit(row, it->second);
          }
        }
        if (visited) ++report.rows_visited;
      }
    };

    {
      std::shared_lock data_lock(region->data_mutex);
      if (region->loaded) {
        visit(*region);
        continue;
      }
    }
    std::unique_lock data_lock(region->data_mutex);
    if (!region->loaded) load_region_locked(*region);
    visit(*region);
  }
  return report;
}

std::pair<std::string, ScanReport> Table::retrieve_one(const RowKey& key,
                                                       const std::string& family,
                                                       const std::string& qualifier) const {
  ScanOptions options;
  options.selector = Selector::single(key);
  options.family = family;
  options.qualifier = qualifier;
  std::string value;
  bool found = false;
  ScanReport report = scan(options, [&](const RowKey&, const std::string& v) {
    value = v;
    found = true;
  });
  if (!found)
    throw NotFoundError("no cell at (" + schema_.name + ", " + key + ", " + family + ":" +
                        qualifier + ")");
  return {std::move(value), std::move(report)};
}

std::vector<RowKey> Table::list_keys(const Selector& selector, const std::string& family,
                                     const std::string& qualifier,
                                     const std::set<RowKey>& skip_keys) const {
  if (!schema_.has_column(family, qualifier))
    throw ValidationError("unknown column " + family + ":" + qualifier);
  std::vector<RowKey> keys;
  ScanRange range = selector_range(selector);
  if (range.empty) return keys;
  for (const RegionPtr& region : snapshot_regions()) {
    if (range.hi && region->info.start_key >= *range.hi) break;
    if (region->info.stop_key && *region->info.stop_key <= range.lo) continue;
    auto visit = [&](const Region& r) {
      auto it = r.cells.lower_bound(CellKey{range.lo, "", ""});
      for (; it != r.cells.end(); ++it) {
        if (range.hi && it->first.row >= *range.hi) break;
        if (it->first.family != family || it->first.qualifier != qualifier) continue;
        if (skip_keys.count(it->first.row) != 0) continue;
        keys.push_back(it->first.row);
      }
    };
    {
      std::shared_lock data_lock(region->data_mutex);
      if (region->loaded) {
        visit(*region);
        continue;
      }
    }
    std::unique_lock data_lock(region->data_mutex);
    if (!region->loaded) load_region_locked(*region);
    visit(*region);
  }
  return keys;
}

bool Table::cell_exists(const RowKey& key, const std::string& family,
                        const std::string& qualifier) const {
  ScanOptions options;
  options.selector = Selector::single(key);
  options.family = family;
  options.qualifier = qualifier;
  bool found = false;
  scan(options, [&](const RowKey&, const std::string&) { found = true; });
  return found;
}

DeleteReport Table::erase(const ScanOptions& options) {
  if (!schema_.has_column(options.family, options.qualifier))
    throw ValidationError("unknown column " + options.family + ":" + options.qualifier +
                          " in table " + schema_.name);
  DeleteReport report;
  ScanRange range = selector_range(options.selector);
  if (!range.empty) {
    std::shared_lock lock(regions_mutex_);
    for (const RegionPtr& region : regions_) {
      if (range.hi && region->info.start_key >= *range.hi) break;
      if (region->info.stop_key && *region->info.stop_key <= range.lo) continue;
      std::unique_lock data_lock(region->data_mutex);
      if (!region->loaded) load_region_locked(*region);
      auto it = region->cells.lower_bound(CellKey{range.lo, "", ""});
      bool touched = false;
      while (it != region->cells.end()) {
        if (range.hi && it->first.row >= *range.hi) break;
        if (it->first.family == options.family && it->first.qualifier == options.qualifier &&
            options.skip_keys.count(it->first.row) == 0) {
          region->bytes -= it->second.size();
          ++report.deleted;
          ++report.rows_visited;
          touched = true;
          it = region->cells.erase(it);
        } else {
          ++it;
        }
      }
      if (touched) flush_region_locked(*region);
    }
  }
  if (options.selector.kind == Selector::Kind::kSingleKey && report.deleted == 0)
    throw NotFoundError("no cell at (" + schema_.name + ", " + options.selector.key + ", " +
                        options.family + ":" + options.qualifier + ")");
  persist_meta();
  return report;
}

void Table::move_region(uint64_t region_id, const std::string& to_node) {
  std::unique_lock lock(regions_mutex_);
  RegionPtr region;
  for (const auto& r : regions_)
    if (r->info.region_id == region_id) region = r;
  if (!region) throw IntegrityError("unknown region id " + std::to_string(region_id));
  std::unique_lock data_lock(region->data_mutex);
  fs::path from = region_file(*region);
  fs::path to = region_file(region_id, to_node);
  if (region->bytes.load() > 0 && !fs::exists(from))
    throw IntegrityError("region " + std::to_string(region_id) + " data missing at " +
                         from.string());
  if (fs::exists(from)) {
    fs::create_directories(to.parent_path());
    fs::rename(from, to);
  }
  region->info.node = to_node;
  data_lock.unlock();
  lock.unlock();
  persist_meta();
}

uint64_t Table::digest() const {
  Fnv1a hash;
  auto fold = [&hash](const std::string& part) {
    uint64_t len = part.size();
    hash.update(&len, sizeof(len));
    hash.update(part);
  };
  for (const RegionPtr& region : snapshot_regions()) {
    auto visit = [&](const Region& r) {
      for (const auto& [key, value] : r.cells) {
        fold(key.row);
        fold(key.family);
        fold(key.qualifier);
        fold(value);
      }
    };
    {
      std::shared_lock data_lock(region->data_mutex);
      if (region->loaded) {
        visit(*region);
        continue;
      }
    }
    std::unique_lock data_lock(region->data_mutex);
    if (!region->loaded) load_region_locked(*region);
    visit(*region);
  }
  return hash.value();
}

// ---------------------------------------------------------------------------
// Store

Store::Store(fs::path root, std::vector<std::string> node_ids)
    : root_(std::move(root)), node_ids_(std::move(node_ids)) {
  if (node_ids_.empty()) node_ids_.push_back("n0");
  fs::create_directories(root_ / "tables");
  fs::create_directories(root_ / "nodes");
}

std::shared_ptr<Table> Store::create_table(const TableSchema& schema,
                                           const std::vector<RowKey>& presplit_keys) {
  schema.validate();
  for (size_t i = 0; i < presplit_keys.size(); ++i) {
    if (presplit_keys[i].empty()) throw ValidationError("presplit key must be nonempty");
    if (i > 0 && !(presplit_keys[i - 1] < presplit_keys[i]))
      throw ValidationError("presplit keys must be strictly increasing");
  }
  if (table_exists(schema.name)) {
    auto existing = open_table(schema.name);
    if (!existing->schema().same_shape(schema))
      throw ConflictError("table " + schema.name + " exists with a different schema");
    return existing;
  }
  std::lock_guard lock(tables_mutex_);
  auto table = std::shared_ptr<Table>(new Table(this, schema));
  std::vector<RowKey> bounds;
  bounds.emplace_back();  // empty start key
  for (const auto& k : presplit_keys) bounds.push_back(k);
  for (size_t i = 0; i < bounds.size(); ++i) {
    auto region = std::make_shared<Table::Region>();
    region->info.region_id = table->next_region_id_++;
    region->info.start_key = bounds[i];
    if (i + 1 < bounds.size()) region->info.stop_key = bounds[i + 1];
    region->info.node = node_ids_[i % node_ids_.size()];
    region->loaded = true;
    table->regions_.push_back(std::move(region));
  }
  table->persist_meta();
  tables_[schema.name] = table;
  return table;
}

bool Store::table_exists(const std::string& name) const {
  return fs::exists(root_ / "tables" / name / "meta.tsv");
}

std::vector<std::string> Store::table_names() const {
  std::vector<std::string> names;
  fs::path dir = root_ / "tables";
  if (!fs::exists(dir)) return names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.tsv"))
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::shared_ptr<Table> Store::open_table(const std::string& name) {
  std::lock_guard lock(tables_mutex_);
  auto it = tables_.find(name);
  if (it != tables_.end()) return it->second;

  fs::path meta_path = root_ / "tables" / name / "meta.tsv";
  if (!fs::exists(meta_path)) throw NotFoundError("table not found: " + name);
  std::istringstream in(read_file(meta_path));
  std::string line;
  TableSchema schema;
  schema.name = name;
  std::vector<RegionInfo> region_infos;
  uint64_t next_region_id = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    const std::string& tag = fields[0];
    if (tag == "cogrid-table") {
      if (fields.size() != 2 || fields[1] != "v1")
        throw IntegrityError("unsupported table meta version in " + meta_path.string());
    } else if (tag == "name") {
      if (fields.size() != 2 || fields[1] != name)
        throw IntegrityError("table meta name mismatch in " + meta_path.string());
    } else if (tag == "split_policy") {
      schema.split_policy = split_policy_from_string(fields.at(1));
    } else if (tag == "split_threshold") {
      schema.split_threshold_bytes = std::stoull(fields.at(1));
    } else if (tag == "next_region_id") {
      next_region_id = std::stoull(fields.at(1));
    } else if (tag == "family") {
      ColumnFamily fam;
      fam.name = fields.at(1);
      for (size_t i = 2; i < fields.size(); ++i) fam.qualifiers.push_back(fields[i]);
      schema.families.push_back(std::move(fam));
    } else if (tag == "region") {
      RegionInfo info;
      info.region_id = std::stoull(fields.at(1));
      info.start_key = decode_key_field(fields.at(2));
      if (fields.at(3) != "inf") info.stop_key = decode_key_field(fields.at(3));
      info.node = fields.at(4);
      info.byte_size = std::stoull(fields.at(5));
      region_infos.push_back(std::move(info));
    } else {
      throw IntegrityError("unknown tag `" + tag + "` in " + meta_path.string());
    }
  }
  if (region_infos.empty()) throw IntegrityError("table meta lists no regions: " + name);
  std::sort(region_infos.begin(), region_infos.end(),
            [](const RegionInfo& a, const RegionInfo& b) { return a.start_key < b.start_key; });

  auto table = std::shared_ptr<Table>(new Table(this, schema));
  table->next_region_id_ = next_region_id;
  for (auto& info : region_infos) {
    auto region = std::make_shared<Table::Region>();
    region->bytes = info.byte_size;
    region->info = std::move(info);
    table->regions_.push_back(std::move(region));
  }
  tables_[name] = table;
  return table;
}

uint64_t Store::digest() {
  Fnv1a hash;
  for (const auto& name : table_names()) {
    hash.update(name);
    uint64_t d = open_table(name)->digest();
    hash.update(&d, sizeof(d));
  }
  return hash.value();
}

// ---------------------------------------------------------------------------
// StoreLock

StoreLock::StoreLock(const fs::path& store_root, Mode mode) {
  fs::create_directories(store_root);
  fs::path lock_path = store_root / ".lock";
  fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw IntegrityError("cannot open store lock: " + lock_path.string());
  int op = (mode == Mode::kExclusive ? LOCK_EX : LOCK_SH) | LOCK_NB;
  if (::flock(fd_, op) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw BusyError("store is busy: " + store_root.string());
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace cogrid
