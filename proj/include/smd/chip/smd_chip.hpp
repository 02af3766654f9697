#pragma once

#include <deque>
#include <memory>
#include <vector>

#include "smd/dram/command.hpp"
#include "smd/maint/mechanism.hpp"

namespace smd::chip {

using dram::Geometry;
using dram::TimingParams;

enum class Bitline { Open, Folded };

// Subarrays an op in `region` makes unavailable to the controller. With open
// bitlines the sense amplifiers are shared with the neighbouring subarray on
// each side, so those are blocked as well (clipped at the bank edges).
std::vector<int> blocked_subarrays(int region, const Geometry& g, Bitline mode);

class LockRegionTable {
 public:
  LockRegionTable(int banks, int regions);
  bool held(int bank, int region) const { return (bits_[bank] >> region) & 1ULL; }
  std::uint64_t held_mask(int bank) const { return bits_[bank]; }
  int holder(int bank, int region) const { return holder_[bank * regions_ + region]; }
  Cycle deadline(int bank, int region) const { return deadline_[bank * regions_ + region]; }
  // Throws InvariantError if any region in mask is already held.
  void lock(int bank, std::uint64_t mask, int holder, Cycle deadline);
  // Throws InvariantError when `holder` does not hold every region in mask.
  void release(int bank, std::uint64_t mask, int holder);
  int bits_per_bank() const { return regions_; }

 private:
  int regions_;
  std::vector<std::uint64_t> bits_;
  std::vector<int> holder_;
  std::vector<Cycle> deadline_;
};

class AriGate {
 public:
  // Tracked per subarray: a release stamps every subarray the lock blocked, and a
  // new lock must find ARI elapsed on every subarray it would block.
  AriGate(int banks, int subarrays, Cycle ari);
  bool ok(int bank, int first_sa, int last_sa, Cycle now) const;
  void stamp(int bank, int first_sa, int last_sa, Cycle now);
  Cycle last_release(int bank, int subarray) const { return last_[bank * subarrays_ + subarray]; }

 private:
  int subarrays_;
  Cycle ari_;
  std::vector<Cycle> last_;
};

struct ChipConfig {
  Bitline bitline = Bitline::Open;
  bool concurrent_maintenance = false;  // several ops per bank in disjoint regions
  bool pause_policy = false;            // SMD-PMP
  Cycle scrub_wb_cycles = 4;
  int codewords_per_row = 128;
};

struct ChipStats {
  std::int64_t ops = 0;
  std::int64_t rows = 0;
  std::int64_t nacks = 0;
  std::int64_t pauses = 0;
  std::int64_t lock_wait_max = 0;
};

// Maintenance state of one DRAM chip (or of all chips of a rank in lockstep).
class SmdChip : public maint::MaintContext {
 public:
  SmdChip(const Geometry& g, const TimingParams& t, ChipConfig cfg, int chip_index, int channel,
          int rank, dram::EventSink* sink);

  void add_mechanism(std::unique_ptr<maint::Mechanism> m);
  void step(Cycle now);
  Cycle next_wake() const { return min_wake_; }

  // Controller ACT; returns true when the chip rejects it.
  bool on_act(int bank, int row, Cycle now);
  void on_pre(int bank, Cycle now);
  bool row_open(int bank, int row) const { return banks_[bank].open_row == row; }

  // MaintContext
  bool try_lock(int mech_slot, maint::Priority prio, maint::OpRequest op, Cycle now) override;
  const Geometry& geometry() const override { return g_; }
  const TimingParams& timing() const override { return t_; }
  void reserve_row(int bank, int row) override;
  void unreserve_row(int bank, int row) override;
  std::uint64_t all_regions() const override;

  const LockRegionTable& lrt() const { return lrt_; }
  const AriGate& ari() const { return ari_; }
  const ChipStats& stats() const { return stats_; }
  bool blocked(int bank, int row) const;
  const std::vector<std::unique_ptr<maint::Mechanism>>& mechanisms() const { return mechs_; }
  // Cycles an op with these rows holds its lock.
  Cycle op_duration(const maint::OpRequest& op) const;
  // Pause the op blocking (bank,row), if any. Returns true if a pause was requested.
  bool pause_request(int bank, int row, Cycle now);

 private:
  struct ActiveOp {
    int mech = 0;
    maint::OpRequest op;
    std::uint64_t mask = 0;
    std::size_t idx = 0;
    int stage = 0;
    int sub = 0;  // column/codeword counter inside a scrub row
    Cycle row_start = 0;
    Cycle next = 0;
    bool pause = false;
  };
  struct BankView {
    int open_row = -1;
    int closing_row = -1;
    Cycle free_at = 0;
    Cycle wake = 0;
    std::vector<ActiveOp> ops;
    std::uint64_t inhibit = 0;
    Cycle inhibit_at = -1;
    int inhibit_prio = 99;
    std::vector<int> reserved;
    Cycle wait_since = -1;
  };

  bool subarray_blocked_by(std::uint64_t regions, int subarray) const;
  void run_ops(int bank, Cycle now);
  // Advances op until its next event lies in the future. Returns false when finished.
  bool advance(int bank, ActiveOp& a, Cycle now);
  void emit(dram::Cmd kind, int bank, int row, dram::Source src, std::uint32_t aux, Cycle now);
  void wake(int bank, Cycle at);

  Geometry g_;
  TimingParams t_;
  ChipConfig cfg_;
  int chip_;
  int channel_;
  int rank_;
  dram::EventSink* sink_;
  LockRegionTable lrt_;
  AriGate ari_;
  std::vector<BankView> banks_;
  std::vector<std::unique_ptr<maint::Mechanism>> mechs_;
  std::vector<std::pair<int, int>> region_span_;  // blocked subarray range per region
  Cycle min_wake_ = 0;
  ChipStats stats_;
};

struct NackNotice {
  Cycle cycle = 0;  // delivery cycle = ACT + tNACK
  int bank = 0;
  int row = 0;
  std::uint32_t chips = 0;  // rejecting chips
  Cycle act_cycle = 0;
  int rank = 0;
};

// All chips of one rank. In lockstep mode one SmdChip stands for every chip.
class SmdRank {
 public:
  SmdRank(const Geometry& g, const TimingParams& t, ChipConfig cfg, bool lockstep, int channel,
          int rank, dram::EventSink* sink);

  SmdChip& chip(int i) { return *chips_[i]; }
  int chip_instances() const { return static_cast<int>(chips_.size()); }
  bool lockstep() const { return lockstep_; }
  std::uint32_t all_chips_mask() const;

  void step(Cycle now);
  Cycle next_wake() const;
  // Returns the mask of chips that reject; a notice is queued for delivery.
  std::uint32_t on_act(int bank, int row, Cycle now);
  void on_pre(int bank, Cycle now);
  // Chips that currently have (bank,row) open.
  std::uint32_t open_mask(int bank, int row) const;
  bool pop_nack(Cycle now, NackNotice& out);
  bool nacks_pending() const { return !nacks_.empty(); }

 private:
  Geometry g_;
  TimingParams t_;
  bool lockstep_;
  int rank_;
  std::vector<std::unique_ptr<SmdChip>> chips_;
  std::deque<NackNotice> nacks_;
};

}  // namespace smd::chip
