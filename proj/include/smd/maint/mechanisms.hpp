#pragma once

#include <map>
#include <memory>
#include <random>
#include <vector>

#include "smd/maint/mechanism.hpp"
#include "smd/maint/sketch.hpp"

namespace smd::maint {

// ---- SMD-FR / SMD-VR ------------------------------------------------------

struct RefreshParams {
  int rg = 8;
  int max_pending = 8;
  Cycle first_delay = 0;  // per-chip divergence offset
  int initial_lrc = 0;
  // VR only
  bool variable = false;
  int vr_factor = 4;
  std::uint32_t bloom_bits = 8192;
  int bloom_hashes = 6;
  std::uint64_t bloom_seed = 1;
};

// Interval between pending-counter ticks so that one sweep of the bank fits a window.
Cycle refresh_op_interval_num(const dram::TimingParams& t, const dram::Geometry& g, int rg);

// Per-row decision for SMD-VR: refresh iff the filter reports the row weak or the
// refresh-cycle counter is a multiple of vr_factor.
std::vector<bool> vr_should_refresh(const std::vector<int>& rows, std::int64_t cycle_counter,
                                    const BloomFilter& filter, int vr_factor);

class RefreshMechanism : public Mechanism {
 public:
  // weak_rows: per bank (only used by VR)
  RefreshMechanism(const dram::Geometry& g, const dram::TimingParams& t, RefreshParams p,
                   const std::vector<std::vector<int>>& weak_rows = {});

  Source source() const override { return p_.variable ? Source::VR : Source::FR; }
  Priority priority() const override { return Priority::Refresh; }
  Cycle tick(int bank, Cycle now, MaintContext& ctx) override;
  void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) override;
  void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) override;

  struct BankState {
    int pending = 0;
    std::int64_t deferred = 0;
    std::int64_t ticks = 0;
    Cycle next_tick = 0;
    int lrc = 0;
    int rac = 0;
    std::int64_t cycle_counter = 0;
    bool busy = false;
    bool has_resume = false;
    OpRequest resume;
  };
  const BankState& state(int bank) const { return banks_[bank]; }
  const BloomFilter& filter(int bank) const { return filters_[bank]; }
  std::int64_t rows_refreshed() const { return rows_refreshed_; }

 private:
  Cycle tick_time(int bank, std::int64_t k) const;
  void advance_counters(BankState& b);
  OpRequest build(int bank, const BankState& b) const;

  dram::Geometry g_;
  dram::TimingParams t_;
  RefreshParams p_;
  Cycle interval_num_;  // ticks happen at offset + k*interval_num_/interval_den_
  Cycle interval_den_;
  std::vector<BankState> banks_;
  std::vector<BloomFilter> filters_;
  std::int64_t rows_refreshed_ = 0;
};

// ---- Marked Rows Table shared by PRP and PRP+ --------------------------------

class MarkedRowsTable {
 public:
  MarkedRowsTable(int regions, int region_rows);
  // First-marked wins: returns false when the region's entry is already valid.
  bool mark(int row);
  bool valid(int region) const { return entries_[region] >= 0; }
  int row(int region) const;
  void clear(int region) { entries_[region] = -1; }
  int first_valid() const;
  int address_bits() const { return bits_; }

 private:
  std::vector<int> entries_;  // row offset within region, -1 when invalid
  int region_rows_;
  int bits_;
};

struct VictimParams {
  double p_mark = 0.01;
  int blast = 1;
  std::uint64_t seed = 1;
  // PRP+ only
  bool plus = false;
  std::uint32_t act_max = 1024;
  Cycle l_rtw = 0;  // 0: one refresh window
  std::uint32_t cbf_counters = 8192;
  int cbf_hashes = 6;
};

// SMD-PRP and SMD-PRP+.
class PrpMechanism : public Mechanism {
 public:
  PrpMechanism(const dram::Geometry& g, const dram::TimingParams& t, VictimParams p);
  Source source() const override { return p_.plus ? Source::PRP_PLUS : Source::PRP; }
  Priority priority() const override { return Priority::Victim; }
  Cycle tick(int bank, Cycle now, MaintContext& ctx) override;
  bool on_act(int bank, int row, Cycle now, MaintContext& ctx) override;
  void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) override;
  void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) override;

  std::int64_t marks() const { return marks_; }
  const MarkedRowsTable& mrt(int bank) const { return banks_[bank].mrt; }

 private:
  struct BankState {
    MarkedRowsTable mrt;
    std::unique_ptr<CbfPair> cbf;
    bool busy = false;
    int busy_region = -1;
    bool has_resume = false;
    OpRequest resume;
  };
  dram::Geometry g_;
  dram::TimingParams t_;
  VictimParams p_;
  std::vector<BankState> banks_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution coin_;
  std::int64_t marks_ = 0;
};

struct DrpParams {
  std::uint32_t act_max = 512;
  int entries = 0;  // 0: sized automatically from the window
  int blast = 1;
};

// Automatic Counter Table size for the given timing.
int drp_auto_entries(const dram::TimingParams& t, std::uint32_t act_max);

class DrpMechanism : public Mechanism {
 public:
  DrpMechanism(const dram::Geometry& g, const dram::TimingParams& t, DrpParams p);
  Source source() const override { return Source::DRP; }
  Priority priority() const override { return Priority::Victim; }
  Cycle tick(int bank, Cycle now, MaintContext& ctx) override;
  bool on_act(int bank, int row, Cycle now, MaintContext& ctx) override;
  void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) override;
  void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) override;

  int entries() const { return p_.entries; }
  std::int64_t triggers() const { return triggers_; }
  const CounterTable& table(int bank) const { return banks_[bank].ct; }

 private:
  struct BankState {
    CounterTable ct;
    std::int64_t window = 0;
    std::vector<int> pending;
    std::vector<int> inflight;
    bool busy = false;
    bool has_resume = false;
    OpRequest resume;
    explicit BankState(int n) : ct(n) {}
  };
  void roll_window(BankState& b, Cycle now);

  dram::Geometry g_;
  dram::TimingParams t_;
  DrpParams p_;
  std::vector<BankState> banks_;
  std::int64_t triggers_ = 0;
};

// ---- SMD-MS -----------------------------------------------------------------

struct ScrubParams {
  Cycle t_scrub = 0;  // per-row tick period
  int codewords = 128;
  Cycle wb_cycles = 4;
  int max_pending = 8;
  Cycle first_delay = 0;
};

// Per-row scrub tick from a whole-memory scrub period (banks scrub in parallel).
Cycle scrub_tick_from_period(double period_seconds, const dram::Geometry& g,
                             const dram::TimingParams& t);
// Cycles a scrub of a row with `faults` faulty codewords holds the bank.
Cycle scrub_row_cycles(const dram::TimingParams& t, int codewords, int faults, Cycle wb_cycles);

using FaultMap = std::map<std::pair<int, int>, std::vector<int>>;  // (bank,row) -> codewords

class ScrubMechanism : public Mechanism {
 public:
  ScrubMechanism(const dram::Geometry& g, const dram::TimingParams& t, ScrubParams p, FaultMap faults);
  Source source() const override { return Source::MS; }
  Priority priority() const override { return Priority::Scrub; }
  Cycle tick(int bank, Cycle now, MaintContext& ctx) override;
  void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) override;
  void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) override;

  std::int64_t rows_scrubbed() const { return rows_scrubbed_; }
  std::int64_t faults_corrected() const { return corrected_; }
  std::size_t faults_remaining() const;

 private:
  struct BankState {
    int pending = 0;
    std::int64_t deferred = 0;
    std::int64_t ticks = 0;
    Cycle next_tick = 0;
    int lrc = 0;
    int rac = 0;
    bool busy = false;
  };
  dram::Geometry g_;
  dram::TimingParams t_;
  ScrubParams p_;
  FaultMap faults_;
  std::vector<BankState> banks_;
  std::int64_t rows_scrubbed_ = 0;
  std::int64_t corrected_ = 0;
};

// ---- Adversarial locker -----------------------------------------------------

// Locks regions round-robin at the highest duty the ARI gap allows. Used to
// stress forward progress and to force a region locked in protocol tests.
struct AdversaryParams {
  Cycle op_cycles = 592;
  std::vector<int> banks;    // empty: all banks
  std::vector<int> regions;  // empty: all regions, round-robin
  Cycle start = 0;
  int max_ops = -1;  // per bank, -1 unlimited
};

class AdversaryMechanism : public Mechanism {
 public:
  AdversaryMechanism(const dram::Geometry& g, const dram::TimingParams& t, AdversaryParams p);
  Source source() const override { return Source::ADV; }
  Priority priority() const override { return Priority::Background; }
  Cycle tick(int bank, Cycle now, MaintContext& ctx) override;
  void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) override;
  void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) override;
  Cycle op_length() const;

 private:
  struct BankState {
    bool enabled = false;
    std::size_t next = 0;
    int ops = 0;
    bool busy = false;
  };
  dram::Geometry g_;
  dram::TimingParams t_;
  AdversaryParams p_;
  int rows_per_op_;
  std::vector<BankState> banks_;
};

}  // namespace smd::maint
