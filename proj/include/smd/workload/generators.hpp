#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smd/dram/geometry.hpp"
#include "smd/workload/trace.hpp"

namespace smd::workload {

struct AccessShape {
  std::int64_t bubbles = 0;  // non-memory instructions before each access
  double write_frac = 0.0;
};

Trace gen_stream(std::size_t len, std::uint64_t stride, std::uint64_t start, AccessShape shape = {},
                 std::uint64_t seed = 1);
// Cacheline-aligned uniform addresses in [base, base + footprint).
Trace gen_random(std::size_t len, std::uint64_t seed, std::uint64_t footprint, AccessShape shape = {},
                 std::uint64_t base = 0, std::uint64_t line = 64);
// Interleaves streaming runs and random accesses; stream_frac is the share of streaming accesses.
Trace gen_mix(std::size_t len, std::uint64_t seed, std::uint64_t footprint, double stream_frac,
              std::uint64_t stride, AccessShape shape = {}, std::uint64_t base = 0);

enum class HammerPattern { Single, Double, Many };
HammerPattern parse_hammer_pattern(const std::string& s);

struct HammerSpec {
  HammerPattern pattern = HammerPattern::Double;
  int channel = 0;
  int rank = 0;
  int bank = 0;  // flat bank
  int victim = 1024;  // centre row; aggressors are placed around it
  int aggressors = 8;  // used by Many
  std::size_t accesses = 100000;
  std::int64_t bubbles = 0;
};
// Aggressor rows of a spec, in the order they are visited.
std::vector<int> hammer_rows(const HammerSpec& s, const dram::Geometry& g);
Trace gen_hammer(const HammerSpec& s, const dram::Geometry& g, const dram::AddressMapper& m);

// floor(fraction * rows_per_bank) distinct rows, sorted.
std::vector<int> gen_weak_rows(std::uint64_t seed, double fraction, int rows_per_bank);

// count distinct (bank,row,codeword) faults.
std::vector<FaultEntry> gen_faults(std::uint64_t seed, std::size_t count, int banks, int rows_per_bank,
                                   int codewords);

}  // namespace smd::workload
