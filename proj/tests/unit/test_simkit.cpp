#include <doctest.h>

#include <string>

#include "smd/simkit/audit.hpp"
#include "smd/simkit/energy.hpp"
#include "smd/simkit/report.hpp"
#include "smd/simkit/simulator.hpp"
#include "smd/simkit/sweep.hpp"

using namespace smd;
using namespace smd::simkit;
using dram::Cmd;
using dram::CommandEvent;
using dram::Origin;
using dram::Source;

namespace {

std::string small_config(const std::string& mode, const std::string& mechs, long cycles, int seed = 1) {
  std::string w;
  for (int i = 0; i < 2; ++i)
    w += std::string(i ? "," : "") + R"({"gen": "random", "len": 5000, "seed": )" + std::to_string(seed + i) +
         R"(, "footprint": 67108864, "base": )" + std::to_string(static_cast<long long>(i) << 26) + "}";
  return R"({"name": "t", "mode": ")" + mode + R"(", "mechanisms": [)" + mechs +
         R"(], "geometry": {"channels": 1, "ranks": 1, "rows_per_bank": 2048, "rows_per_subarray": 32,)"
         R"( "regions_per_bank": 16}, "timing": {"time_scale": 0.015625},)"
         R"( "run": {"cycles": )" + std::to_string(cycles) + R"(}, "workloads": [)" + w + "]}";
}

dram::Geometry small_geometry() {
  dram::Geometry g;
  g.channels = 1;
  g.ranks = 1;
  g.rows_per_bank = 2048;
  g.rows_per_subarray = 32;
  g.subarrays_per_region = 4;
  return g;
}

CommandEvent ev(Cycle c, Cmd k, int bank, int row, Source s = Source::MC) {
  return CommandEvent{c, k, 0, 0, static_cast<std::int16_t>(bank), row, Origin{s, -1, 0}};
}

}  // namespace

TEST_SUITE("simkit") {
  TEST_CASE("energy parameters from datasheet currents") {
    auto t = dram::default_timing("DDR4-3200", 32);
    EnergyParams e = energy_from_idd(IddParams{}, t);
    // V * (IDD0 - IDD3N) * tRAS, V * (IDD0 - IDD2N) * tRP, V * (IDD4x - IDD3N) * tBL, V * (IDD5B - IDD3N) * tRFC
    CHECK(e.act == doctest::Approx(1.2 * (60 - 48) * 32.5));
    CHECK(e.act == doctest::Approx(468));
    CHECK(e.pre == doctest::Approx(363));
    CHECK(e.rd == doctest::Approx(306));
    CHECK(e.wr == doctest::Approx(276));
    CHECK(e.ref == doctest::Approx(84840));
    CHECK(e.p_active == doctest::Approx(57.6));
    CHECK(e.p_precharged == doctest::Approx(45.6));
    EnergyParams bad = e;
    bad.act = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }

  TEST_CASE("energy of a log") {
    auto g = small_geometry();
    auto t = dram::default_timing("DDR4-3200", 32);
    EnergyParams p = energy_from_idd(IddParams{}, t);
    EnergyBreakdown empty;
    double idle = energy_of({}, 1000, g, t, p, &empty);
    CHECK(empty.commands() == 0);
    CHECK(idle == doctest::Approx(p.p_precharged * 1000 * t.clock_ns * g.chips_per_rank));

    std::vector<CommandEvent> log{ev(10, Cmd::ACT, 0, 5), ev(40, Cmd::RD, 0, 5), ev(80, Cmd::PRE, 0, 5),
                                  ev(200, Cmd::REF, -1, 0)};
    EnergyBreakdown one, two;
    energy_of(log, 2000, g, t, p, &one);
    EnergyParams p2 = p;
    p2.act *= 2;
    p2.pre *= 2;
    p2.rd *= 2;
    p2.wr *= 2;
    p2.ref *= 2;
    energy_of(log, 2000, g, t, p2, &two);
    CHECK(two.commands() == doctest::Approx(2 * one.commands()));
    CHECK(two.background == doctest::Approx(one.background));
  }

  TEST_CASE("weighted speedup") {
    CHECK(weighted_speedup({1.5, 0.7, 2.0}, {1.5, 0.7, 2.0}) == doctest::Approx(3.0));
    CHECK(weighted_speedup({2, 2}, {4, 4}) == doctest::Approx(1.0));
    CHECK(weighted_speedup({0, 2}, {4, 4}) == doctest::Approx(0.5));
    CHECK_THROWS(weighted_speedup({1, 1}, {1, 0}));
    CHECK_THROWS(weighted_speedup({1}, {1, 1}));
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config(R"({"mode": "ddr5"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"bogus_key": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"mode": "ddr4-baseline", "mechanisms": [{"type": "fr"}]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"mode": "smd", "mechanisms": [{"type": "fr"}, {"type": "vr"}]})"),
                    ConfigError);
  }

  TEST_CASE("run identities") {
    SimConfig c = parse_config(small_config("smd", R"({"type": "fr"})", 200000));
    Report a = run_config(c);
    Report b = run_config(c);
    CHECK(a.log_hash == b.log_hash);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.nack_rate == doctest::Approx(static_cast<double>(a.nacks) / static_cast<double>(a.acts)));
    CHECK(a.refs == 0);
    Comparison self = compare(a, a);
    CHECK(self.speedup == doctest::Approx(1.0));
    CHECK(self.energy_delta == doctest::Approx(0.0));
    CHECK(report_from_json(to_json(a)).log_hash == a.log_hash);
    std::vector<double> ipc;
    for (const auto& core : a.cores) ipc.push_back(core.ipc);
    CHECK(weighted_speedup(ipc, ipc) == doctest::Approx(static_cast<double>(a.cores.size())));
  }

  TEST_CASE("parallel sweep matches the serial reference") {
    std::vector<SimConfig> cs;
    for (int seed : {1, 5, 9})
      for (const char* mode : {"ddr4-baseline", "smd"})
        cs.push_back(parse_config(small_config(mode, std::string(mode) == "smd" ? R"({"type": "fr"})" : "",
                                               100000, seed)));
    auto serial = run_sweep_serial(cs);
    auto parallel = run_sweep(cs, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].log_hash == parallel[i].log_hash);
      CHECK(to_json(serial[i]) == to_json(parallel[i]));
    }
  }

  TEST_CASE("timing auditor catches an early read") {
    auto g = small_geometry();
    auto t = dram::default_timing("DDR4-3200", 32);
    TimingAuditor ok(g, t), bad(g, t);
    for (auto* a : {&ok, &bad}) a->on_event(ev(100, Cmd::ACT, 0, 5));
    ok.on_event(ev(100 + t.tRCD, Cmd::RD, 0, 5));
    bad.on_event(ev(100 + t.tRCD - 1, Cmd::RD, 0, 5));
    ok.finish(1000);
    bad.finish(1000);
    CHECK(ok.result().verdict == Verdict::Pass);
    CHECK(bad.result().verdict == Verdict::Fail);
  }

  TEST_CASE("refresh auditor fails when nothing refreshes") {
    auto g = small_geometry();
    auto t = dram::default_timing("DDR4-3200", 32, 2048.0 / 131072);
    RefreshAuditor a(g, t, RefreshAuditSpec{});
    a.finish(3 * t.tREFW);
    auto r = a.result();
    CHECK(r.verdict == Verdict::Fail);
    CHECK(r.violations > 0);
    RefreshAuditor short_run(g, t, RefreshAuditSpec{});
    short_run.finish(t.tREFW);
    CHECK(short_run.result().verdict == Verdict::Inconclusive);
  }

  TEST_CASE("rowhammer auditor counts accepted activations") {
    auto g = small_geometry();
    auto t = dram::default_timing("DDR4-3200", 32);
    auto hammer = [&](int acts) {
      RowHammerAuditor a(g, t, 1, 512, 1, true);
      Cycle c = 0;
      for (int i = 0; i < acts; ++i, c += t.tRC()) {
        a.on_event(ev(c, Cmd::ACT, 0, 100));
        a.on_event(ev(c + t.tRAS, Cmd::PRE, 0, 100));
      }
      a.finish(c + 100);
      return a.result().verdict;
    };
    CHECK(hammer(512) == Verdict::Pass);
    CHECK(hammer(513) == Verdict::Fail);
  }

  TEST_CASE("protocol auditor flags an ACT accepted inside a maintenance span") {
    auto g = small_geometry();
    auto t = dram::default_timing("DDR4-3200", 32);
    ProtocolAuditor a(g, t, 1, true, 1);
    a.on_event(ev(100, Cmd::MAINT_ACT, 0, 10, Source::FR));
    a.on_event(ev(110, Cmd::ACT, 0, 12));
    a.on_event(ev(100 + t.tRAS, Cmd::MAINT_PRE, 0, 10, Source::FR));
    a.finish(1000);
    CHECK(a.result().verdict == Verdict::Fail);

    ProtocolAuditor clean(g, t, 1, true, 1);
    clean.on_event(ev(100, Cmd::MAINT_ACT, 0, 10, Source::FR));
    clean.on_event(ev(110, Cmd::ACT, 0, 12));
    CommandEvent nack = ev(110 + t.tNACK, Cmd::NACK, 0, 12, Source::CHIPS);
    nack.origin.aux = 0xff;
    clean.on_event(nack);
    clean.on_event(ev(100 + t.tRAS, Cmd::MAINT_PRE, 0, 10, Source::FR));
    clean.finish(1000);
    CHECK(clean.result().verdict == Verdict::Pass);
  }
}
