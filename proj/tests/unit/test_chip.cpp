#include <doctest.h>

#include "smd/chip/smd_chip.hpp"

using namespace smd;
using namespace smd::chip;

TEST_SUITE("chip") {
  TEST_CASE("blocked subarrays follow the bitline rule") {
    dram::Geometry g;
    auto interior = blocked_subarrays(1, g, Bitline::Open);
    REQUIRE(interior.size() == 18);
    CHECK(interior.front() == 15);
    CHECK(interior.back() == 32);
    auto edge = blocked_subarrays(0, g, Bitline::Open);
    REQUIRE(edge.size() == 17);
    CHECK(edge.front() == 0);
    CHECK(edge.back() == 16);
    auto last = blocked_subarrays(15, g, Bitline::Open);
    CHECK(last.size() == 17);
    CHECK(last.back() == 255);
    auto folded = blocked_subarrays(3, g, Bitline::Folded);
    REQUIRE(folded.size() == 16);
    CHECK(folded.front() == 48);
    CHECK(folded.back() == 63);
  }

  TEST_CASE("lock region table") {
    LockRegionTable lrt(16, 16);
    CHECK(lrt.bits_per_bank() == 16);
    CHECK_FALSE(lrt.held(0, 3));
    lrt.lock(0, 1u << 3, 2, 1000);
    CHECK(lrt.held(0, 3));
    CHECK(lrt.holder(0, 3) == 2);
    CHECK_THROWS_AS(lrt.lock(0, 1u << 3, 1, 1000), InvariantError);
    CHECK_THROWS_AS(lrt.release(0, 1u << 3, 1), InvariantError);
    lrt.release(0, 1u << 3, 2);
    CHECK(lrt.held_mask(0) == 0);
    CHECK_THROWS_AS(lrt.release(0, 1u << 4, 2), InvariantError);
  }

  TEST_CASE("whole-bank hold clears every bit on release") {
    LockRegionTable lrt(2, 16);
    lrt.lock(1, 0xffff, 0, 50);
    for (int r = 0; r < 16; ++r) CHECK(lrt.held(1, r));
    lrt.release(1, 0xffff, 0);
    CHECK(lrt.held_mask(1) == 0);
    CHECK(lrt.held_mask(0) == 0);
  }

  TEST_CASE("ARI gate") {
    AriGate gate(2, 256, 100);
    CHECK(gate.ok(0, 15, 32, 0));
    gate.stamp(0, 15, 32, 1000);
    CHECK_FALSE(gate.ok(0, 15, 32, 1099));
    CHECK(gate.ok(0, 15, 32, 1100));
    // overlapping span is gated, a disjoint one is not
    CHECK_FALSE(gate.ok(0, 32, 48, 1050));
    CHECK(gate.ok(0, 33, 48, 1050));
    CHECK(gate.ok(1, 15, 32, 1050));
  }

  TEST_CASE("lockstep rank accepts ACTs when idle") {
    dram::Geometry g;
    g.channels = 1;
    g.ranks = 1;
    auto t = dram::default_timing("DDR4-3200", 32);
    SmdRank rank(g, t, ChipConfig{}, true, 0, 0, nullptr);
    CHECK(rank.chip_instances() == 1);
    CHECK(rank.on_act(0, 100, 10) == 0);
    CHECK_FALSE(rank.nacks_pending());
  }

  TEST_CASE("divergent rank models one chip per device") {
    dram::Geometry g;
    g.channels = 1;
    g.ranks = 1;
    g.chips_per_rank = 16;
    auto t = dram::default_timing("DDR4-3200", 32);
    SmdRank rank(g, t, ChipConfig{}, false, 0, 0, nullptr);
    CHECK(rank.chip_instances() == 16);
    CHECK(rank.all_chips_mask() == 0xffffu);
  }
}

namespace {

// Locks region 1 of bank 0 for `rows` rows at the first tick.
class OneShotLock : public maint::Mechanism {
 public:
  explicit OneShotLock(int rows) : rows_(rows) {}
  dram::Source source() const override { return dram::Source::ADV; }
  maint::Priority priority() const override { return maint::Priority::Refresh; }
  Cycle tick(int bank, Cycle now, maint::MaintContext& ctx) override {
    if (bank != 0 || done_) return kNever;
    maint::OpRequest op;
    op.bank = 0;
    op.region_mask = 1u << 1;
    int base = ctx.geometry().region_rows();
    for (int i = 0; i < rows_; ++i) op.rows.push_back(maint::RowJob{base + i, false, {}});
    done_ = ctx.try_lock(slot(), priority(), op, now);
    return done_ ? kNever : now + 1;
  }
  void on_op_done(const maint::OpRequest&, Cycle now, maint::MaintContext&) override { released = now; }
  void on_op_paused(const maint::OpRequest&, std::size_t, Cycle) override {}
  Cycle released = -1;

 private:
  int rows_;
  bool done_ = false;
};

}  // namespace

TEST_SUITE("chip") {
  TEST_CASE("partial NACK when only some chips hold the lock") {
    dram::Geometry g;
    g.channels = 1;
    g.ranks = 1;
    g.chips_per_rank = 16;
    auto t = dram::default_timing("DDR4-3200", 32);
    SmdRank rank(g, t, ChipConfig{}, false, 0, 0, nullptr);
    rank.chip(0).add_mechanism(std::make_unique<OneShotLock>(8));
    rank.chip(1).add_mechanism(std::make_unique<OneShotLock>(8));
    for (Cycle c = 0; c <= 10; ++c) rank.step(c);
    int row = g.region_rows() + 100;
    CHECK(rank.chip(0).blocked(0, row));
    CHECK_FALSE(rank.chip(2).blocked(0, row));
    std::uint32_t mask = rank.on_act(0, row, 1000);
    CHECK(mask == 0x3u);
    NackNotice n;
    CHECK_FALSE(rank.pop_nack(1000 + t.tNACK - 1, n));
    REQUIRE(rank.pop_nack(1000 + t.tNACK, n));
    CHECK(n.cycle == 1000 + t.tNACK);
    CHECK(n.chips == 0x3u);
    CHECK(n.act_cycle == 1000);
    // a row outside the blocked span is accepted everywhere
    CHECK(rank.on_act(1, row, 1001) == 0);
  }

  TEST_CASE("op duration of an RG=8 refresh") {
    dram::Geometry g;
    auto t = dram::default_timing("DDR4-3200", 32);
    SmdChip chip(g, t, ChipConfig{}, 0, 0, 0, nullptr);
    maint::OpRequest op;
    for (int i = 0; i < 8; ++i) op.rows.push_back(maint::RowJob{i, false, {}});
    CHECK(chip.op_duration(op) == 8 * t.tRC());
    CHECK(chip.op_duration(op) == 592);
  }
}
