#include "smd/maint/mechanisms.hpp"

#include <algorithm>
#include <cmath>

namespace smd::maint {

std::vector<int> victims_of(int row, int blast, int rows_per_bank) {
  std::vector<int> v;
  for (int d = blast; d >= 1; --d)
    if (row - d >= 0) v.push_back(row - d);
  for (int d = 1; d <= blast; ++d)
    if (row + d < rows_per_bank) v.push_back(row + d);
  return v;
}

namespace {

std::uint64_t regions_of(const std::vector<RowJob>& rows, const dram::Geometry& g) {
  std::uint64_t m = 0;
  for (const auto& r : rows) m |= 1ULL << g.region_of(r.row);
  return m;
}

std::vector<RowJob> refresh_jobs(const std::vector<int>& rows) {
  std::vector<RowJob> jobs;
  jobs.reserve(rows.size());
  for (int r : rows) jobs.push_back(RowJob{r, false, {}});
  return jobs;
}

OpRequest remainder(const OpRequest& op, std::size_t done_rows, const dram::Geometry& g) {
  OpRequest rest = op;
  rest.rows.erase(rest.rows.begin(), rest.rows.begin() + static_cast<std::ptrdiff_t>(done_rows));
  if (!rest.whole_bank) rest.region_mask = regions_of(rest.rows, g);
  return rest;
}

}  // namespace

// ---- FR / VR ------------------------------------------------------------------

std::vector<bool> vr_should_refresh(const std::vector<int>& rows, std::int64_t cycle_counter,
                                    const BloomFilter& filter, int vr_factor) {
  std::vector<bool> out(rows.size());
  bool full = cycle_counter % vr_factor == 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = full || filter.query(static_cast<std::uint64_t>(rows[i]));
  return out;
}

RefreshMechanism::RefreshMechanism(const dram::Geometry& g, const dram::TimingParams& t,
                                   RefreshParams p, const std::vector<std::vector<int>>& weak_rows)
    : g_(g), t_(t), p_(p) {
  if (p_.rg <= 0 || g_.region_rows() % p_.rg != 0)
    throw ConfigError("refresh: RG must divide the region row span");
  if (p_.variable && p_.vr_factor <= 0) throw ConfigError("refresh: VR factor must be positive");
  interval_num_ = t_.tREFW * p_.rg;
  interval_den_ = g_.rows_per_bank;
  if (interval_num_ / interval_den_ < 1) throw ConfigError("refresh: window too short for the bank");
  banks_.resize(g_.banks());
  for (int b = 0; b < g_.banks(); ++b) {
    auto& s = banks_[b];
    s.lrc = p_.initial_lrc % g_.regions_per_bank();
    s.next_tick = tick_time(b, 1);
  }
  if (p_.variable) {
    for (int b = 0; b < g_.banks(); ++b) {
      filters_.emplace_back(p_.bloom_bits, p_.bloom_hashes, p_.bloom_seed + static_cast<std::uint64_t>(b));
      if (b < static_cast<int>(weak_rows.size()))
        for (int r : weak_rows[b]) filters_.back().insert(static_cast<std::uint64_t>(r));
    }
  }
}

Cycle RefreshMechanism::tick_time(int bank, std::int64_t k) const {
  Cycle stagger = interval_num_ / interval_den_ * bank / g_.banks();
  return p_.first_delay + stagger + (k * interval_num_) / interval_den_;
}

void RefreshMechanism::advance_counters(BankState& b) {
  if (++b.lrc == g_.regions_per_bank()) {
    b.lrc = 0;
    if (++b.rac == g_.region_rows() / p_.rg) {
      b.rac = 0;
      ++b.cycle_counter;
    }
  }
}

OpRequest RefreshMechanism::build(int bank, const BankState& b) const {
  std::vector<int> rows;
  int base = b.lrc * g_.region_rows() + b.rac * p_.rg;
  for (int j = 0; j < p_.rg; ++j) rows.push_back(base + j);
  if (p_.variable) {
    auto keep = vr_should_refresh(rows, b.cycle_counter, filters_[bank], p_.vr_factor);
    std::vector<int> kept;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (keep[i]) kept.push_back(rows[i]);
    rows.swap(kept);
  }
  OpRequest op;
  op.bank = bank;
  op.region_mask = 1ULL << b.lrc;
  op.rows = refresh_jobs(rows);
  return op;
}

Cycle RefreshMechanism::tick(int bank, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  while (now >= b.next_tick) {
    if (b.pending < p_.max_pending) ++b.pending;
    else ++b.deferred;
    ++b.ticks;
    b.next_tick = tick_time(bank, b.ticks + 1);
  }
  while (b.deferred > 0 && b.pending < p_.max_pending) {
    --b.deferred;
    ++b.pending;
  }
  if (b.busy) return b.next_tick;
  while (b.pending > 0) {
    OpRequest op = b.has_resume ? b.resume : build(bank, b);
    if (op.rows.empty()) {
      advance_counters(b);
      --b.pending;
      continue;
    }
    if (ctx.try_lock(slot_, priority(), op, now)) {
      b.busy = true;
      return b.next_tick;
    }
    return now + 1;
  }
  return b.next_tick;
}

void RefreshMechanism::on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) {
  (void)now, (void)ctx;
  BankState& b = banks_[op.bank];
  rows_refreshed_ += static_cast<std::int64_t>(op.rows.size());
  b.busy = false;
  b.has_resume = false;
  advance_counters(b);
  --b.pending;
  if (b.deferred > 0) {
    --b.deferred;
    ++b.pending;
  }
}

void RefreshMechanism::on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) {
  (void)now;
  BankState& b = banks_[op.bank];
  rows_refreshed_ += static_cast<std::int64_t>(done_rows);
  b.busy = false;
  b.has_resume = true;
  b.resume = remainder(op, done_rows, g_);
}

// ---- MRT / PRP / PRP+ ------------------------------------------------------------

MarkedRowsTable::MarkedRowsTable(int regions, int region_rows)
    : entries_(regions, -1), region_rows_(region_rows) {
  bits_ = 0;
  while ((1 << bits_) < region_rows) ++bits_;
}

bool MarkedRowsTable::mark(int row) {
  int region = row / region_rows_;
  if (entries_[region] >= 0) return false;
  entries_[region] = row % region_rows_;
  return true;
}

int MarkedRowsTable::row(int region) const {
  return entries_[region] < 0 ? -1 : region * region_rows_ + entries_[region];
}

int MarkedRowsTable::first_valid() const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i] >= 0) return static_cast<int>(i);
  return -1;
}

PrpMechanism::PrpMechanism(const dram::Geometry& g, const dram::TimingParams& t, VictimParams p)
    : g_(g), t_(t), p_(p), rng_(p.seed), coin_(std::clamp(p.p_mark, 0.0, 1.0)) {
  if (p_.p_mark < 0 || p_.p_mark > 1) throw ConfigError("prp: p_mark must be in [0,1]");
  if (p_.blast < 1) throw ConfigError("prp: blast radius must be >= 1");
  if (p_.plus && p_.l_rtw == 0) p_.l_rtw = t_.tREFW;
  for (int b = 0; b < g_.banks(); ++b) {
    BankState s{MarkedRowsTable(g_.regions_per_bank(), g_.region_rows()), nullptr, false, -1, false, {}};
    if (p_.plus)
      s.cbf = std::make_unique<CbfPair>(p_.cbf_counters, p_.cbf_hashes, p_.seed * 131 + b,
                                        std::max<Cycle>(1, p_.l_rtw / 2));
    banks_.push_back(std::move(s));
  }
}

bool PrpMechanism::on_act(int bank, int row, Cycle now, MaintContext& ctx) {
  (void)ctx;
  BankState& b = banks_[bank];
  if (p_.plus) {
    b.cbf->insert(static_cast<std::uint64_t>(row), now);
    if (b.cbf->estimate(static_cast<std::uint64_t>(row), now) < p_.act_max) return false;
  }
  if (!coin_(rng_)) return false;
  if (b.busy && b.busy_region == g_.region_of(row)) return false;
  if (!b.mrt.mark(row)) return false;
  ++marks_;
  return true;
}

Cycle PrpMechanism::tick(int bank, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  if (b.busy) return kNever;
  OpRequest op;
  int region = -1;
  if (b.has_resume) {
    op = b.resume;
    region = b.busy_region;
  } else {
    region = b.mrt.first_valid();
    if (region < 0) return kNever;
    op.bank = bank;
    op.victim_refresh = true;
    op.rows = refresh_jobs(victims_of(b.mrt.row(region), p_.blast, g_.rows_per_bank));
    op.region_mask = regions_of(op.rows, g_);
  }
  if (ctx.try_lock(slot_, priority(), op, now)) {
    b.busy = true;
    b.busy_region = region;
    return kNever;
  }
  return now + 1;
}

void PrpMechanism::on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) {
  (void)now, (void)ctx;
  BankState& b = banks_[op.bank];
  b.mrt.clear(b.busy_region);
  b.busy = false;
  b.has_resume = false;
  b.busy_region = -1;
}

void PrpMechanism::on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) {
  (void)now;
  BankState& b = banks_[op.bank];
  b.busy = false;
  b.has_resume = true;
  b.resume = remainder(op, done_rows, g_);
}

// ---- DRP ------------------------------------------------------------------------

int drp_auto_entries(const dram::TimingParams& t, std::uint32_t act_max) {
  std::int64_t act_trefw = t.tREFW / t.tRC();
  return static_cast<int>(std::max<std::int64_t>(1, drp_table_size(act_trefw, act_max)));
}

DrpMechanism::DrpMechanism(const dram::Geometry& g, const dram::TimingParams& t, DrpParams p)
    : g_(g), t_(t), p_(p) {
  if (p_.act_max == 0) throw ConfigError("drp: ACT_max must be positive");
  if (p_.blast < 1) throw ConfigError("drp: blast radius must be >= 1");
  if (p_.entries <= 0) p_.entries = drp_auto_entries(t_, p_.act_max);
  for (int b = 0; b < g_.banks(); ++b) banks_.emplace_back(p_.entries);
}

void DrpMechanism::roll_window(BankState& b, Cycle now) {
  std::int64_t w = now / t_.tREFW;
  if (w != b.window) {
    b.ct.reset();
    b.window = w;
  }
}

bool DrpMechanism::on_act(int bank, int row, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  roll_window(b, now);
  std::uint32_t c = b.ct.record(row);
  if (c == 0 || c % p_.act_max != 0) return false;
  ++triggers_;
  b.pending.push_back(row);
  ctx.reserve_row(bank, row);
  return true;
}

Cycle DrpMechanism::tick(int bank, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  if (b.busy) return kNever;
  OpRequest op;
  std::vector<int> group;
  if (b.has_resume) {
    op = b.resume;
  } else {
    if (b.pending.empty()) return kNever;
    int region = g_.region_of(b.pending.front());
    std::vector<int> rest;
    for (int r : b.pending) (g_.region_of(r) == region ? group : rest).push_back(r);
    std::vector<int> rows;
    for (int a : group)
      for (int v : victims_of(a, p_.blast, g_.rows_per_bank))
        if (std::find(rows.begin(), rows.end(), v) == rows.end()) rows.push_back(v);
    std::sort(rows.begin(), rows.end());
    op.bank = bank;
    op.victim_refresh = true;
    op.rows = refresh_jobs(rows);
    op.region_mask = regions_of(op.rows, g_);
    if (ctx.try_lock(slot_, priority(), op, now)) {
      b.busy = true;
      b.inflight = group;
      b.pending = rest;
      return kNever;
    }
    return now + 1;
  }
  if (ctx.try_lock(slot_, priority(), op, now)) {
    b.busy = true;
    return kNever;
  }
  return now + 1;
}

void DrpMechanism::on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) {
  (void)now;
  BankState& b = banks_[op.bank];
  for (int a : b.inflight) ctx.unreserve_row(op.bank, a);
  b.inflight.clear();
  b.busy = false;
  b.has_resume = false;
}

void DrpMechanism::on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) {
  (void)now;
  BankState& b = banks_[op.bank];
  b.busy = false;
  b.has_resume = true;
  b.resume = remainder(op, done_rows, g_);
}

// ---- MS -------------------------------------------------------------------------

Cycle scrub_tick_from_period(double period_seconds, const dram::Geometry& g,
                             const dram::TimingParams& t) {
  double cycles = period_seconds * 1e9 / t.clock_ns * t.time_scale;
  return static_cast<Cycle>(std::floor(cycles / g.rows_per_bank));
}

Cycle scrub_row_cycles(const dram::TimingParams& t, int codewords, int faults, Cycle wb_cycles) {
  return t.tRCD + codewords * t.tBL + faults * wb_cycles + t.tRP;
}

ScrubMechanism::ScrubMechanism(const dram::Geometry& g, const dram::TimingParams& t, ScrubParams p,
                               FaultMap faults)
    : g_(g), t_(t), p_(p), faults_(std::move(faults)) {
  if (p_.t_scrub <= 0) throw ConfigError("scrub: tick period must be positive");
  if (p_.codewords <= 0) throw ConfigError("scrub: codewords per row must be positive");
  banks_.resize(g_.banks());
  for (int b = 0; b < g_.banks(); ++b)
    banks_[b].next_tick = p_.first_delay + p_.t_scrub * b / g_.banks() + p_.t_scrub;
}

std::size_t ScrubMechanism::faults_remaining() const {
  std::size_t n = 0;
  for (const auto& [k, v] : faults_) n += v.size();
  return n;
}

Cycle ScrubMechanism::tick(int bank, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  while (now >= b.next_tick) {
    if (b.pending < p_.max_pending) ++b.pending;
    else ++b.deferred;
    ++b.ticks;
    b.next_tick = p_.first_delay + p_.t_scrub * bank / g_.banks() + p_.t_scrub * (b.ticks + 1);
  }
  while (b.deferred > 0 && b.pending < p_.max_pending) {
    --b.deferred;
    ++b.pending;
  }
  if (b.busy || b.pending == 0) return b.next_tick;
  int row = b.lrc * g_.region_rows() + b.rac;
  OpRequest op;
  op.bank = bank;
  op.whole_bank = true;
  op.region_mask = ctx.all_regions();
  RowJob job{row, true, {}};
  auto it = faults_.find({bank, row});
  if (it != faults_.end()) {
    job.faulty_codewords = it->second;
    std::sort(job.faulty_codewords.begin(), job.faulty_codewords.end());
  }
  op.rows.push_back(std::move(job));
  if (ctx.try_lock(slot_, priority(), op, now)) {
    b.busy = true;
    return b.next_tick;
  }
  return now + 1;
}

void ScrubMechanism::on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) {
  (void)now, (void)ctx;
  BankState& b = banks_[op.bank];
  for (const auto& job : op.rows) {
    ++rows_scrubbed_;
    auto it = faults_.find({op.bank, job.row});
    if (it != faults_.end()) {
      corrected_ += static_cast<std::int64_t>(it->second.size());
      faults_.erase(it);
    }
  }
  b.busy = false;
  if (++b.lrc == g_.regions_per_bank()) {
    b.lrc = 0;
    if (++b.rac == g_.region_rows()) b.rac = 0;
  }
  --b.pending;
  if (b.deferred > 0) {
    --b.deferred;
    ++b.pending;
  }
}

void ScrubMechanism::on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) {
  // A scrub op is a single row; a pause only takes effect at its end.
  (void)done_rows, (void)now;
  banks_[op.bank].busy = false;
}

// ---- Adversary ---------------------------------------------------------------------

AdversaryMechanism::AdversaryMechanism(const dram::Geometry& g, const dram::TimingParams& t,
                                       AdversaryParams p)
    : g_(g), t_(t), p_(std::move(p)) {
  if (p_.op_cycles <= 0) throw ConfigError("adversary: op_cycles must be positive");
  rows_per_op_ = static_cast<int>((p_.op_cycles + t_.tRC() - 1) / t_.tRC());
  rows_per_op_ = std::min(rows_per_op_, g_.region_rows());
  if (p_.regions.empty())
    for (int r = 0; r < g_.regions_per_bank(); ++r) p_.regions.push_back(r);
  for (int r : p_.regions)
    if (r < 0 || r >= g_.regions_per_bank()) throw ConfigError("adversary: region out of range");
  banks_.resize(g_.banks());
  for (int b = 0; b < g_.banks(); ++b)
    banks_[b].enabled = p_.banks.empty() || std::find(p_.banks.begin(), p_.banks.end(), b) != p_.banks.end();
}

Cycle AdversaryMechanism::op_length() const { return rows_per_op_ * t_.tRC(); }

Cycle AdversaryMechanism::tick(int bank, Cycle now, MaintContext& ctx) {
  BankState& b = banks_[bank];
  if (!b.enabled || b.busy) return kNever;
  if (p_.max_ops >= 0 && b.ops >= p_.max_ops) return kNever;
  if (now < p_.start) return p_.start;
  int region = p_.regions[b.next % p_.regions.size()];
  OpRequest op;
  op.bank = bank;
  op.region_mask = 1ULL << region;
  for (int j = 0; j < rows_per_op_; ++j) op.rows.push_back(RowJob{region * g_.region_rows() + j, false, {}});
  if (ctx.try_lock(slot_, priority(), op, now)) {
    b.busy = true;
    return kNever;
  }
  return now + 1;
}

void AdversaryMechanism::on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) {
  (void)now, (void)ctx;
  BankState& b = banks_[op.bank];
  b.busy = false;
  ++b.ops;
  ++b.next;
}

void AdversaryMechanism::on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) {
  (void)done_rows, (void)now;
  BankState& b = banks_[op.bank];
  b.busy = false;
  ++b.ops;
  ++b.next;
}

}  // namespace smd::maint
