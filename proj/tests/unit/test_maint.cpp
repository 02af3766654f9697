#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "smd/maint/mechanisms.hpp"
#include "smd/maint/sketch.hpp"

using namespace smd;
using namespace smd::maint;

TEST_SUITE("maint") {
  TEST_CASE("victim sets") {
    CHECK(victims_of(100, 1, 2048) == std::vector<int>{99, 101});
    auto v2 = victims_of(100, 2, 2048);
    CHECK(v2.size() == 4);
    CHECK(std::set<int>(v2.begin(), v2.end()) == std::set<int>{98, 99, 101, 102});
    CHECK(victims_of(0, 1, 2048) == std::vector<int>{1});
    CHECK(victims_of(2047, 1, 2048) == std::vector<int>{2046});
  }

  TEST_CASE("bloom filter basics") {
    BloomFilter f(8192, 6, 1);
    CHECK_FALSE(f.query(42));
    f.insert(42);
    CHECK(f.query(42));
    f.clear();
    CHECK(f.popcount() == 0);
    CHECK(bloom_fp_rate(8192, 6, 131) == doctest::Approx(5.9e-7).epsilon(0.01));
  }

  TEST_CASE("bloom filter has no false negatives") {
    BloomFilter f(8192, 6, 3);
    std::mt19937_64 rng(11);
    std::vector<std::uint64_t> keys;
    for (int i = 0; i < 131; ++i) keys.push_back(rng() % 131072);
    for (auto k : keys) f.insert(k);
    for (auto k : keys) CHECK(f.query(k));
  }

  TEST_CASE("counting bloom filter never under-counts") {
    CountingBloomFilter cbf(1024, 4, 9);
    std::map<std::uint64_t, std::uint32_t> exact;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20000; ++i) {
      std::uint64_t k = rng() % 3000;
      cbf.insert(k);
      ++exact[k];
    }
    for (const auto& [k, n] : exact) REQUIRE(cbf.estimate(k) >= n);
  }

  TEST_CASE("CBF pair swaps roles every half window") {
    CbfPair p(1024, 4, 1, 1000);
    p.insert(7, 10);
    CHECK(p.estimate(7, 10) >= 1);
    int before = p.active_index();
    p.advance(1000);
    CHECK(p.active_index() != before);
    // the now-active filter saw the insert too
    CHECK(p.estimate(7, 1000) >= 1);
    p.advance(2000);
    CHECK(p.estimate(7, 2000) == 0);
  }

  TEST_CASE("counter table") {
    CounterTable ct(4);
    CHECK(ct.record(10) == 1);
    CHECK(ct.estimate(10) == 1);
    for (int i = 1; i < 512; ++i) ct.record(10);
    CHECK(ct.estimate(10) == 512);
    CHECK(ct.estimate(99) == 0);
    ct.reset();
    CHECK(ct.estimate(10) == 0);
    CHECK(ct.spillover() == 0);
  }

  TEST_CASE("counter table keeps the Misra-Gries bound") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      CounterTable ct(8);
      std::map<std::int64_t, std::uint32_t> exact;
      int universe = 4 + static_cast<int>(rng() % 60);
      for (int i = 0; i < 2000; ++i) {
        std::int64_t r = static_cast<std::int64_t>(rng() % universe);
        ct.record(r);
        ++exact[r];
      }
      for (const auto& [r, n] : exact) REQUIRE(n <= ct.estimate(r) + ct.spillover());
    }
  }

  TEST_CASE("DRP table sizing") {
    CHECK(drp_table_size(1024, 512) == 2);
    // tREFW / tRC with default timing
    CHECK(drp_table_size(691891, 512) == 1351);
  }

  TEST_CASE("VR refresh decision") {
    BloomFilter f(8192, 6, 1);
    f.insert(5);
    auto at4 = vr_should_refresh({5, 6}, 4, f, 4);
    auto at5 = vr_should_refresh({5, 6}, 5, f, 4);
    CHECK(at4 == std::vector<bool>{true, true});
    CHECK(at5 == std::vector<bool>{true, false});
    BloomFilter empty(8192, 6, 1);
    auto all = vr_should_refresh({1, 2, 3}, 0, empty, 4);
    CHECK(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));
  }

  TEST_CASE("marked rows table keeps the first mark") {
    MarkedRowsTable mrt(16, 128);
    CHECK(mrt.first_valid() < 0);
    CHECK(mrt.mark(130));
    CHECK_FALSE(mrt.mark(140));
    CHECK(mrt.valid(1));
    CHECK(mrt.row(1) == 130);
    mrt.clear(1);
    CHECK_FALSE(mrt.valid(1));
    CHECK(mrt.address_bits() == 7);
  }

  TEST_CASE("scrub row cost") {
    auto t = dram::default_timing("DDR4-3200", 32);
    // tRCD + 128 reads at tBL + tRP
    CHECK(scrub_row_cycles(t, 128, 0, 4) == 22 + 128 * 4 + 22);
    CHECK(scrub_row_cycles(t, 128, 0, 4) * t.clock_ns == doctest::Approx(347.5));
    CHECK(scrub_row_cycles(t, 128, 2, 4) == 556 + 8);
  }

  TEST_CASE("scrub tick from a five minute period") {
    dram::Geometry g;
    auto t = dram::default_timing("DDR4-3200", 32);
    Cycle tick = scrub_tick_from_period(300.0, g, t);
    CHECK(tick * t.clock_ns * 1e-6 == doctest::Approx(300.0 / 131072 * 1e3).epsilon(0.001));
  }
}
