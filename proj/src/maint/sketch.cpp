#include "smd/maint/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace smd::maint {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

HashFamily::HashFamily(std::uint32_t m, int k, std::uint64_t seed)
    : m_(m), k_(k), s1_(mix64(seed)), s2_(mix64(seed ^ 0x5bd1e9955bd1e995ULL)) {
  if (m == 0 || k <= 0) throw std::invalid_argument("hash family needs m > 0 and k > 0");
}

std::uint32_t HashFamily::index(std::uint64_t key, int i) const {
  std::uint64_t h = mix64(key ^ s1_) + static_cast<std::uint64_t>(i) * s2_;
  return static_cast<std::uint32_t>(mix64(h) % m_);
}

BloomFilter::BloomFilter(std::uint32_t m, int k, std::uint64_t seed)
    : hash_(m, k, seed), words_((m + 63) / 64, 0) {}

void BloomFilter::insert(std::uint64_t key) {
  for (int i = 0; i < hash_.k(); ++i) {
    auto b = hash_.index(key, i);
    words_[b >> 6] |= 1ULL << (b & 63);
  }
}

bool BloomFilter::query(std::uint64_t key) const {
  for (int i = 0; i < hash_.k(); ++i) {
    auto b = hash_.index(key, i);
    if (!(words_[b >> 6] & (1ULL << (b & 63)))) return false;
  }
  return true;
}

void BloomFilter::clear() { std::fill(words_.begin(), words_.end(), 0); }

std::size_t BloomFilter::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

double bloom_fp_rate(double m, double k, double n) {
  return std::pow(1.0 - std::exp(-k * n / m), k);
}

CountingBloomFilter::CountingBloomFilter(std::uint32_t m, int k, std::uint64_t seed)
    : hash_(m, k, seed), counters_(m, 0) {}

void CountingBloomFilter::insert(std::uint64_t key) {
  for (int i = 0; i < hash_.k(); ++i) {
    auto& c = counters_[hash_.index(key, i)];
    if (c != 0xffff) ++c;
  }
}

std::uint32_t CountingBloomFilter::estimate(std::uint64_t key) const {
  std::uint32_t est = 0xffff;
  for (int i = 0; i < hash_.k(); ++i) est = std::min<std::uint32_t>(est, counters_[hash_.index(key, i)]);
  return est;
}

void CountingBloomFilter::clear() { std::fill(counters_.begin(), counters_.end(), 0); }

CbfPair::CbfPair(std::uint32_t m, int k, std::uint64_t seed, std::int64_t half_window)
    : f_{CountingBloomFilter(m, k, seed), CountingBloomFilter(m, k, seed)},
      half_window_(half_window),
      next_swap_(half_window) {
  if (half_window <= 0) throw std::invalid_argument("CBF half window must be positive");
}

void CbfPair::advance(std::int64_t now) {
  while (now >= next_swap_) {
    f_[active_].clear();
    last_clear_[active_] = next_swap_;
    active_ ^= 1;
    next_swap_ += half_window_;
  }
}

void CbfPair::insert(std::uint64_t key, std::int64_t now) {
  advance(now);
  f_[0].insert(key);
  f_[1].insert(key);
}

std::uint32_t CbfPair::estimate(std::uint64_t key, std::int64_t now) {
  advance(now);
  return f_[active_].estimate(key);
}

CounterTable::CounterTable(int entries) : rows_(entries, -1), counts_(entries, 0) {
  if (entries <= 0) throw std::invalid_argument("counter table needs at least one entry");
}

std::uint32_t CounterTable::record(std::int64_t row) {
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (rows_[i] == row) return ++counts_[i];
  auto it = std::min_element(counts_.begin(), counts_.end());
  if (sp_ == *it) {
    std::size_t i = static_cast<std::size_t>(it - counts_.begin());
    rows_[i] = row;
    return ++counts_[i];
  }
  ++sp_;
  return 0;
}

std::uint32_t CounterTable::estimate(std::int64_t row) const {
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (rows_[i] == row) return counts_[i];
  return 0;
}

void CounterTable::reset() {
  std::fill(rows_.begin(), rows_.end(), -1);
  std::fill(counts_.begin(), counts_.end(), 0);
  sp_ = 0;
}

std::int64_t drp_table_size(std::int64_t act_trefw, std::int64_t act_max) {
  if (act_trefw <= 0 || act_max <= 0) throw std::invalid_argument("drp_table_size needs positive inputs");
  // N > A/M - 1  <=>  N*M > A - M  <=>  N >= floor((A - M)/M) + 1
  std::int64_t num = act_trefw - act_max;
  if (num < 0) return 0;
  return num / act_max + 1;
}

}  // namespace smd::maint
