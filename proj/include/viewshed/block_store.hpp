#pragma once

#include <cstdint>
#include <list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace viewshed {

struct IoStats {
  std::uint64_t block_loads = 0;      // disk -> cache transfers
  std::uint64_t block_evictions = 0;  // dirty cache -> disk write-backs
  std::uint64_t logical_reads = 0;
  std::uint64_t logical_writes = 0;

  IoStats& operator+=(const IoStats& o) {
    block_loads += o.block_loads;
    block_evictions += o.block_evictions;
    logical_reads += o.logical_reads;
    logical_writes += o.logical_writes;
    return *this;
  }
};

// Simulated external memory: a flat value array divided into blocks of B
// values, accessed through a strict-LRU cache of M_blocks blocks. Values
// live in `backing` throughout; the cache tracks only which blocks are
// resident, so wrapping an algorithm changes its I/O statistics and nothing
// else. Writes allocate (an uncached block is loaded first) and write back
// (an eviction of a dirty block counts one transfer; clean evictions are
// free).
template <typename T>
class BlockStore {
 public:
  BlockStore(std::size_t n_values, std::size_t block_values,
             std::size_t cache_blocks)
      : backing_(n_values), block_(block_values), capacity_(cache_blocks) {
    if (block_ < 1 || capacity_ < 1)
      throw config_error("block store needs B >= 1 and M_blocks >= 1");
  }

  BlockStore(std::vector<T> initial, std::size_t block_values,
             std::size_t cache_blocks)
      : backing_(std::move(initial)), block_(block_values),
        capacity_(cache_blocks) {
    if (block_ < 1 || capacity_ < 1)
      throw config_error("block store needs B >= 1 and M_blocks >= 1");
  }

  std::size_t size() const { return backing_.size(); }
  std::size_t block_values() const { return block_; }
  std::size_t cache_blocks() const { return capacity_; }

  // Grows the addressable range (new values are zero-initialized "disk").
  void resize(std::size_t n_values) {
    if (n_values < backing_.size())
      throw config_error("block store cannot shrink");
    backing_.resize(n_values);
  }

  T read(std::size_t index) {
    if (index >= backing_.size())
      throw invariant_error("block store read out of range");
    ++stats_.logical_reads;
    touch(index / block_, false);
    return backing_[index];
  }

  void write(std::size_t index, T value) {
    if (index >= backing_.size())
      throw invariant_error("block store write out of range");
    ++stats_.logical_writes;
    touch(index / block_, true);
    backing_[index] = value;
  }

  // Writes back every dirty resident block (one transfer each) and empties
  // the cache. Ends a simulated run.
  void flush() {
    for (const Resident& r : lru_)
      if (r.dirty) ++stats_.block_evictions;
    lru_.clear();
    where_.clear();
  }

  const IoStats& stats() const { return stats_; }
  void reset_stats() { stats_ = IoStats{}; }

  const std::vector<T>& values() const { return backing_; }
  std::vector<T>& values() { return backing_; }

 private:
  struct Resident {
    std::size_t id;
    bool dirty;
  };

  void touch(std::size_t block_id, bool dirty) {
    auto it = where_.find(block_id);
    if (it != where_.end()) {
      it->second->dirty |= dirty;
      lru_.splice(lru_.begin(), lru_, it->second);
      return;
    }
    if (lru_.size() == capacity_) {
      const Resident& victim = lru_.back();
      if (victim.dirty) ++stats_.block_evictions;
      where_.erase(victim.id);
      lru_.pop_back();
    }
    ++stats_.block_loads;
    lru_.push_front(Resident{block_id, dirty});
    where_[block_id] = lru_.begin();
  }

  std::vector<T> backing_;
  std::size_t block_;
  std::size_t capacity_;
  std::list<Resident> lru_;
  std::unordered_map<std::size_t, typename std::list<Resident>::iterator> where_;
  IoStats stats_;
};

// Per-run I/O accounting shared by the algorithms when --simulate-io is on.
// Algorithms read B/M here, build their scratch stores with them, and report
// per-store stats into the ledger.
struct SimulatedIo {
  std::size_t block_values = 1;
  std::size_t cache_blocks = 1;
  std::vector<std::pair<std::string, IoStats>> ledger;

  SimulatedIo() = default;
  SimulatedIo(std::size_t b, std::size_t m) : block_values(b), cache_blocks(m) {
    if (b < 1 || m < 1) throw config_error("simulated I/O needs B >= 1, M >= 1");
  }

  void report(const std::string& store_name, const IoStats& s) {
    for (auto& row : ledger)
      if (row.first == store_name) {
        row.second += s;
        return;
      }
    ledger.emplace_back(store_name, s);
  }

  IoStats total() const {
    IoStats t;
    for (const auto& row : ledger) t += row.second;
    return t;
  }

  std::uint64_t stat_of(const std::string& store_name,
                        std::uint64_t IoStats::*field) const {
    for (const auto& row : ledger)
      if (row.first == store_name) return row.second.*field;
    return 0;
  }
};

inline std::string io_csv(const SimulatedIo& sim) {
  std::string out =
      "store_name,block_loads,block_evictions,logical_reads,logical_writes\n";
  for (const auto& [name, s] : sim.ledger) {
    out += name;
    out += ',' + std::to_string(s.block_loads);
    out += ',' + std::to_string(s.block_evictions);
    out += ',' + std::to_string(s.logical_reads);
    out += ',' + std::to_string(s.logical_writes);
    out += '\n';
  }
  return out;
}

}  // namespace viewshed
