#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace smd::maint {

// k seeded hashes: index_i = mix(mix(key ^ s1) + i * s2) mod m. Plain double
// hashing (h1 + i*h2) correlates probes enough to lift the false-positive rate
// about 15x at m = 8192.
class HashFamily {
 public:
  HashFamily(std::uint32_t m, int k, std::uint64_t seed);
  std::uint32_t index(std::uint64_t key, int i) const;
  std::uint32_t m() const { return m_; }
  int k() const { return k_; }

 private:
  std::uint32_t m_;
  int k_;
  std::uint64_t s1_, s2_;
};

std::uint64_t mix64(std::uint64_t x);

class BloomFilter {
 public:
  BloomFilter(std::uint32_t m = 8192, int k = 6, std::uint64_t seed = 1);
  void insert(std::uint64_t key);
  bool query(std::uint64_t key) const;
  void clear();
  std::size_t popcount() const;
  std::uint32_t bits() const { return hash_.m(); }
  int hashes() const { return hash_.k(); }

 private:
  HashFamily hash_;
  std::vector<std::uint64_t> words_;
};

// Analytic false-positive rate (1 - e^{-kn/m})^k.
double bloom_fp_rate(double m, double k, double n);

// Counting Bloom filter with saturating 16-bit counters.
class CountingBloomFilter {
 public:
  CountingBloomFilter(std::uint32_t m = 8192, int k = 6, std::uint64_t seed = 1);
  void insert(std::uint64_t key);
  std::uint32_t estimate(std::uint64_t key) const;
  void clear();

 private:
  HashFamily hash_;
  std::vector<std::uint16_t> counters_;
};

// Two CBFs with active/passive roles. Every half window the active filter is
// cleared and the roles swap, so the active filter always covers between half
// and a full window of history.
class CbfPair {
 public:
  CbfPair(std::uint32_t m, int k, std::uint64_t seed, std::int64_t half_window);
  // Advances the role timer to now, then inserts into both filters.
  void insert(std::uint64_t key, std::int64_t now);
  std::uint32_t estimate(std::uint64_t key, std::int64_t now);
  void advance(std::int64_t now);
  int active_index() const { return active_; }
  std::int64_t last_clear() const { return last_clear_[active_]; }

 private:
  CountingBloomFilter f_[2];
  int active_ = 0;
  std::int64_t half_window_;
  std::int64_t next_swap_;
  std::int64_t last_clear_[2] = {0, 0};
};

// Misra-Gries counter table with a spillover counter.
class CounterTable {
 public:
  explicit CounterTable(int entries);
  // Records one activation; returns the incremented estimate of row, or 0 when
  // the activation went to the spillover counter.
  std::uint32_t record(std::int64_t row);
  // Estimate of row if tracked, else 0.
  std::uint32_t estimate(std::int64_t row) const;
  std::uint32_t spillover() const { return sp_; }
  void reset();
  int entries() const { return static_cast<int>(rows_.size()); }

 private:
  std::vector<std::int64_t> rows_;
  std::vector<std::uint32_t> counts_;
  std::uint32_t sp_ = 0;
};

// Smallest N with N > act_trefw / act_max - 1.
std::int64_t drp_table_size(std::int64_t act_trefw, std::int64_t act_max);

}  // namespace smd::maint
