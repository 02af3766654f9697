#include "smd/workload/generators.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

namespace smd::workload {

namespace {

// Uniform integer in [0, n) without depending on library distribution internals.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % n;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Trace gen_stream(std::size_t len, std::uint64_t stride, std::uint64_t start, AccessShape shape,
                 std::uint64_t seed) {
  if (len == 0 || stride == 0) throw ConfigError("gen_stream: len and stride must be positive");
  std::mt19937_64 rng(seed);
  Trace t(len);
  for (std::size_t i = 0; i < len; ++i) {
    t[i].bubbles = shape.bubbles;
    t[i].addr = start + i * stride;
    t[i].write = shape.write_frac > 0 && unit(rng) < shape.write_frac;
  }
  return t;
}

Trace gen_random(std::size_t len, std::uint64_t seed, std::uint64_t footprint, AccessShape shape,
                 std::uint64_t base, std::uint64_t line) {
  if (len == 0 || footprint < line) throw ConfigError("gen_random: len and footprint must be positive");
  std::mt19937_64 rng(seed);
  Trace t(len);
  std::uint64_t lines = footprint / line;
  for (auto& e : t) {
    e.bubbles = shape.bubbles;
    e.addr = base + below(rng, lines) * line;
    e.write = shape.write_frac > 0 && unit(rng) < shape.write_frac;
  }
  return t;
}

Trace gen_mix(std::size_t len, std::uint64_t seed, std::uint64_t footprint, double stream_frac,
              std::uint64_t stride, AccessShape shape, std::uint64_t base) {
  if (len == 0 || footprint < 64 || stride == 0) throw ConfigError("gen_mix: positive sizes required");
  std::mt19937_64 rng(seed);
  Trace t;
  t.reserve(len);
  std::uint64_t lines = footprint / 64;
  std::uint64_t cursor = base;
  while (t.size() < len) {
    bool stream = unit(rng) < stream_frac;
    std::size_t run = stream ? 16 : 1;
    if (stream) cursor = base + below(rng, lines) * 64;
    for (std::size_t k = 0; k < run && t.size() < len; ++k) {
      TraceEntry e;
      e.bubbles = shape.bubbles;
      e.write = shape.write_frac > 0 && unit(rng) < shape.write_frac;
      if (stream) {
        e.addr = base + (cursor - base) % footprint;
        cursor += stride;
      } else {
        e.addr = base + below(rng, lines) * 64;
      }
      t.push_back(e);
    }
  }
  return t;
}

HammerPattern parse_hammer_pattern(const std::string& s) {
  if (s == "single") return HammerPattern::Single;
  if (s == "double" || s == "double-sided") return HammerPattern::Double;
  if (s == "many" || s == "many-sided") return HammerPattern::Many;
  throw ConfigError("unknown hammer pattern '" + s + "'");
}

std::vector<int> hammer_rows(const HammerSpec& s, const dram::Geometry& g) {
  int rows = g.rows_per_bank;
  auto wrap = [rows](long r) { return static_cast<int>(((r % rows) + rows) % rows); };
  switch (s.pattern) {
    case HammerPattern::Single:
      // The second row only forces a row conflict; it sits far from the victim.
      return {wrap(s.victim - 1), wrap(s.victim - 1 + rows / 2)};
    case HammerPattern::Double:
      return {wrap(s.victim - 1), wrap(s.victim + 1)};
    case HammerPattern::Many: {
      if (s.aggressors < 2) throw ConfigError("many-sided hammer needs >= 2 aggressors");
      std::vector<int> r;
      for (int i = 0; i < s.aggressors; ++i) r.push_back(wrap(s.victim - 1 + 2L * i));
      return r;
    }
  }
  return {};
}

Trace gen_hammer(const HammerSpec& s, const dram::Geometry& g, const dram::AddressMapper& m) {
  auto rows = hammer_rows(s, g);
  Trace t;
  t.reserve(s.accesses);
  int cols = g.columns();
  for (std::size_t i = 0; i < s.accesses; ++i) {
    dram::DramAddress a;
    a.channel = s.channel;
    a.rank = s.rank;
    a.bankgroup = dram::bankgroup_of(g, s.bank);
    a.bank = s.bank % g.banks_per_group;
    a.row = rows[i % rows.size()];
    a.column = static_cast<int>((i / rows.size()) % cols);
    t.push_back(TraceEntry{s.bubbles, false, m.encode(a)});
  }
  return t;
}

std::vector<int> gen_weak_rows(std::uint64_t seed, double fraction, int rows_per_bank) {
  if (fraction < 0 || fraction > 1) throw ConfigError("weak-row fraction must be in [0,1]");
  std::size_t n = static_cast<std::size_t>(fraction * rows_per_bank);
  std::mt19937_64 rng(seed);
  // Floyd's sampling: n distinct values out of rows_per_bank.
  std::set<int> pick;
  for (std::size_t j = rows_per_bank - n; j < static_cast<std::size_t>(rows_per_bank); ++j) {
    int v = static_cast<int>(below(rng, j + 1));
    if (!pick.insert(v).second) pick.insert(static_cast<int>(j));
  }
  return {pick.begin(), pick.end()};
}

std::vector<FaultEntry> gen_faults(std::uint64_t seed, std::size_t count, int banks, int rows_per_bank,
                                   int codewords) {
  std::uint64_t space = static_cast<std::uint64_t>(banks) * rows_per_bank * codewords;
  if (count > space) throw ConfigError("gen_faults: more faults than codewords");
  std::mt19937_64 rng(seed);
  std::set<std::tuple<int, int, int>> seen;
  std::vector<FaultEntry> out;
  while (out.size() < count) {
    FaultEntry f;
    f.bank = static_cast<int>(below(rng, banks));
    f.row = static_cast<int>(below(rng, rows_per_bank));
    f.codeword = static_cast<int>(below(rng, codewords));
    if (seen.insert({f.bank, f.row, f.codeword}).second) out.push_back(f);
  }
  std::sort(out.begin(), out.end(), [](const FaultEntry& a, const FaultEntry& b) {
    return std::tie(a.bank, a.row, a.codeword) < std::tie(b.bank, b.row, b.codeword);
  });
  return out;
}

}  // namespace smd::workload
