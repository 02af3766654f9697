#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>
#include <tuple>

#include "smd/dram/geometry.hpp"
#include "smd/workload/core.hpp"
#include "smd/workload/generators.hpp"
#include "smd/workload/trace.hpp"

using namespace smd;
using namespace smd::workload;

namespace {

// Completes every load exactly `latency` cycles after issue. latency < 0 never completes.
struct FixedLatencyPort : MemoryPort {
  Cycle latency;
  std::vector<std::pair<Cycle, std::uint64_t>> inflight;
  std::int64_t issued = 0;
  explicit FixedLatencyPort(Cycle l) : latency(l) {}
  bool issue(int, bool write, std::uint64_t, std::uint64_t id, Cycle now) override {
    ++issued;
    if (!write && latency >= 0) inflight.push_back({now + latency, id});
    return true;
  }
  void deliver(Core& c, Cycle now) {
    for (auto it = inflight.begin(); it != inflight.end();)
      if (it->first <= now) {
        c.on_complete(it->second);
        it = inflight.erase(it);
      } else {
        ++it;
      }
  }
};

}  // namespace

TEST_SUITE("workload") {
  TEST_CASE("trace line parsing") {
    auto e = parse_trace_line("12 R 0x1f400");
    REQUIRE(e);
    CHECK(e->bubbles == 12);
    CHECK_FALSE(e->write);
    CHECK(e->addr == 0x1f400);
    CHECK_FALSE(parse_trace_line("# header"));
    CHECK_FALSE(parse_trace_line("   "));
    CHECK_THROWS_AS(parse_trace_line("R 0x10", 4), ParseError);
    CHECK_THROWS_AS(parse_trace_line("3 X 0x10"), ParseError);
    auto w = parse_trace_line("0 W 0xABC");
    REQUIRE(w);
    CHECK(w->write);
    CHECK(*parse_trace_line(format_trace_line(*w)) == *w);
  }

  TEST_CASE("trace stream round trip") {
    Trace t = gen_random(500, 3, 1 << 20, AccessShape{5, 0.3});
    std::stringstream ss;
    write_trace(ss, t);
    CHECK(read_trace(ss) == t);
  }

  TEST_CASE("pure bubbles retire at the issue width") {
    Trace t{{1000000, false, 0}};
    Core core(0, &t, CoreParams{128, 4, 8, false});
    FixedLatencyPort port(-1);
    const Cycle n = 1000;
    for (Cycle c = 0; c < n; ++c) core.tick(port, c);
    // nothing retires on the first tick; the window is empty
    CHECK(core.stats().retired == 4 * (n - 1));
    CHECK(port.issued == 0);
  }

  TEST_CASE("dependent loads with one MSHR run at 2/L") {
    // each entry is one bubble and one load; with one MSHR, one entry per latency period
    const Cycle L = 100;
    Trace t{{1, false, 0x40}};
    Core core(0, &t, CoreParams{128, 4, 1, true});
    FixedLatencyPort port(L);
    const Cycle periods = 200;
    for (Cycle c = 0; c < periods * L; ++c) {
      port.deliver(core, c);
      core.tick(port, c);
    }
    double ipc = static_cast<double>(core.stats().retired) / static_cast<double>(periods * L);
    CHECK(ipc == doctest::Approx(2.0 / L).epsilon(0.02));
  }

  TEST_CASE("MSHR bound holds the ninth load") {
    Trace t(9, TraceEntry{0, false, 0x40});
    Core core(0, &t, CoreParams{128, 4, 8, false});
    FixedLatencyPort port(-1);
    for (Cycle c = 0; c < 50; ++c) core.tick(port, c);
    CHECK(core.outstanding() == 8);
    CHECK(port.issued == 8);
    CHECK(core.blocked());
  }

  TEST_CASE("retired instructions are conserved") {
    Trace t = gen_random(300, 9, 1 << 22, AccessShape{3, 0.25});
    Core core(0, &t, CoreParams{128, 4, 8, false});
    FixedLatencyPort port(37);
    Cycle c = 0;
    for (; !core.finished() && c < 100000; ++c) {
      port.deliver(core, c);
      core.tick(port, c);
    }
    REQUIRE(core.finished());
    const auto& s = core.stats();
    CHECK(s.retired == s.bubbles + s.loads + s.stores);
    CHECK(s.loads + s.stores == 300);
    CHECK(s.bubbles == 3 * 300);
  }

  TEST_CASE("generators are deterministic") {
    CHECK(gen_random(1000, 4, 1 << 24) == gen_random(1000, 4, 1 << 24));
    CHECK(gen_random(1000, 4, 1 << 24) != gen_random(1000, 5, 1 << 24));
    CHECK(gen_mix(1000, 4, 1 << 24, 0.5, 64) == gen_mix(1000, 4, 1 << 24, 0.5, 64));
    for (const auto& e : gen_random(1000, 4, 1 << 24, {}, 1 << 24)) {
      CHECK(e.addr % 64 == 0);
      CHECK(e.addr >= (1u << 24));
      CHECK(e.addr < (2u << 24));
    }
  }

  TEST_CASE("stream stride controls row locality") {
    dram::Geometry g;
    dram::AddressMapper m(g);
    auto key = [&](std::uint64_t a) {
      auto d = m.decode(a);
      return std::make_tuple(d.channel, d.rank, d.bankgroup, d.bank, d.row);
    };
    // one step of the row field: every access lands in a new row
    std::uint64_t row_step = g.capacity() / static_cast<std::uint64_t>(g.rows_per_bank);
    Trace far = gen_stream(200, row_step, 0);
    for (std::size_t i = 1; i < far.size(); ++i) CHECK(key(far[i].addr) != key(far[i - 1].addr));
    // 64-byte stride over one row in every channel touches one row per channel
    Trace near = gen_stream(static_cast<std::size_t>(g.columns()) * g.channels, 64, 0);
    std::set<std::tuple<int, int, int, int, int>> rows;
    for (const auto& e : near) rows.insert(key(e.addr));
    CHECK(rows.size() == static_cast<std::size_t>(g.channels));
  }

  TEST_CASE("hammer patterns") {
    dram::Geometry g;
    HammerSpec s;
    s.victim = 1024;
    s.pattern = HammerPattern::Double;
    CHECK(hammer_rows(s, g) == std::vector<int>{1023, 1025});
    // one aggressor next to the victim plus a distant row that forces the re-activation
    s.pattern = HammerPattern::Single;
    auto single = hammer_rows(s, g);
    REQUIRE(single.size() == 2);
    CHECK(single[0] == 1023);
    CHECK(std::abs(single[1] - 1024) > 2);
    s.pattern = HammerPattern::Many;
    s.aggressors = 8;
    CHECK(hammer_rows(s, g).size() == 8);
    CHECK_THROWS(parse_hammer_pattern("triple"));

    dram::AddressMapper m(g);
    s.pattern = HammerPattern::Double;
    s.bank = 3;
    s.accesses = 1000;
    Trace t = gen_hammer(s, g, m);
    CHECK(t.size() == 1000);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto d = m.decode(t[i].addr);
      CHECK(dram::flat_bank(g, d) == 3);
      CHECK(d.row == (i % 2 ? 1025 : 1023));
    }
  }

  TEST_CASE("weak row sampling") {
    CHECK(gen_weak_rows(1, 0.0, 131072).empty());
    auto w = gen_weak_rows(1, 0.001, 131072);
    CHECK(w.size() == 131);
    CHECK(std::set<int>(w.begin(), w.end()).size() == 131);
    CHECK(std::is_sorted(w.begin(), w.end()));
    CHECK(gen_weak_rows(1, 0.001, 131072) == w);
  }

  TEST_CASE("fault generation") {
    auto f = gen_faults(3, 64, 16, 2048, 128);
    CHECK(f.size() == 64);
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& e : f) {
      CHECK(e.bank >= 0);
      CHECK(e.bank < 16);
      CHECK(e.codeword < 128);
      seen.insert({e.bank, e.row, e.codeword});
    }
    CHECK(seen.size() == 64);
  }
}
