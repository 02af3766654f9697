#include "smd/chip/smd_chip.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace smd::chip {

using dram::Cmd;
using maint::OpRequest;
using maint::Priority;

std::vector<int> blocked_subarrays(int region, const Geometry& g, Bitline mode) {
  if (region < 0 || region >= g.regions_per_bank()) throw RangeError("region out of range");
  int lo = region * g.subarrays_per_region;
  int hi = lo + g.subarrays_per_region - 1;
  if (mode == Bitline::Open) {
    lo = std::max(0, lo - 1);
    hi = std::min(g.subarrays_per_bank() - 1, hi + 1);
  }
  std::vector<int> out;
  for (int s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

// ---- LockRegionTable / AriGate -------------------------------------------------

LockRegionTable::LockRegionTable(int banks, int regions)
    : regions_(regions), bits_(banks, 0), holder_(banks * regions, -1), deadline_(banks * regions, 0) {}

void LockRegionTable::lock(int bank, std::uint64_t mask, int holder, Cycle deadline) {
  if (bits_[bank] & mask) throw InvariantError("lock: region already held");
  bits_[bank] |= mask;
  for (int r = 0; r < regions_; ++r)
    if ((mask >> r) & 1ULL) {
      holder_[bank * regions_ + r] = holder;
      deadline_[bank * regions_ + r] = deadline;
    }
}

void LockRegionTable::release(int bank, std::uint64_t mask, int holder) {
  for (int r = 0; r < regions_; ++r)
    if ((mask >> r) & 1ULL) {
      if (!held(bank, r) || holder_[bank * regions_ + r] != holder)
        throw InvariantError("release: bank " + std::to_string(bank) + " region " +
                             std::to_string(r) + " not held by caller");
    }
  for (int r = 0; r < regions_; ++r)
    if ((mask >> r) & 1ULL) holder_[bank * regions_ + r] = -1;
  bits_[bank] &= ~mask;
}

AriGate::AriGate(int banks, int subarrays, Cycle ari)
    : subarrays_(subarrays), ari_(ari), last_(banks * subarrays, -ari) {}

bool AriGate::ok(int bank, int first_sa, int last_sa, Cycle now) const {
  for (int s = first_sa; s <= last_sa; ++s)
    if (now < last_[bank * subarrays_ + s] + ari_) return false;
  return true;
}

void AriGate::stamp(int bank, int first_sa, int last_sa, Cycle now) {
  for (int s = first_sa; s <= last_sa; ++s) last_[bank * subarrays_ + s] = now;
}

// ---- SmdChip -----------------------------------------------------------------------

SmdChip::SmdChip(const Geometry& g, const TimingParams& t, ChipConfig cfg, int chip_index,
                 int channel, int rank, dram::EventSink* sink)
    : g_(g),
      t_(t),
      cfg_(cfg),
      chip_(chip_index),
      channel_(channel),
      rank_(rank),
      sink_(sink),
      lrt_(g.banks(), g.regions_per_bank()),
      ari_(g.banks(), g.subarrays_per_bank(), t.ARI),
      banks_(g.banks()) {
  for (int r = 0; r < g_.regions_per_bank(); ++r) {
    auto s = blocked_subarrays(r, g_, cfg_.bitline);
    region_span_.emplace_back(s.front(), s.back());
  }
}

void SmdChip::add_mechanism(std::unique_ptr<maint::Mechanism> m) {
  mechs_.push_back(std::move(m));
  std::stable_sort(mechs_.begin(), mechs_.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a->priority()) < static_cast<int>(b->priority());
  });
  for (std::size_t i = 0; i < mechs_.size(); ++i) mechs_[i]->set_slot(static_cast<int>(i));
  for (auto& b : banks_) b.wake = 0;
  min_wake_ = 0;
}

std::uint64_t SmdChip::all_regions() const {
  int n = g_.regions_per_bank();
  return n >= 64 ? ~0ULL : ((1ULL << n) - 1);
}

bool SmdChip::subarray_blocked_by(std::uint64_t regions, int sa) const {
  while (regions) {
    int r = std::countr_zero(regions);
    regions &= regions - 1;
    if (sa >= region_span_[r].first && sa <= region_span_[r].second) return true;
  }
  return false;
}

bool SmdChip::blocked(int bank, int row) const {
  if (subarray_blocked_by(lrt_.held_mask(bank), g_.subarray_of(row))) return true;
  const auto& res = banks_[bank].reserved;
  return std::find(res.begin(), res.end(), row) != res.end();
}

Cycle SmdChip::op_duration(const OpRequest& op) const {
  Cycle d = 0;
  for (const auto& j : op.rows)
    d += j.scrub ? t_.tRCD + cfg_.codewords_per_row * t_.tBL +
                       static_cast<Cycle>(j.faulty_codewords.size()) * cfg_.scrub_wb_cycles + t_.tRP
                 : t_.tRC();
  return d;
}

void SmdChip::wake(int bank, Cycle at) {
  auto& b = banks_[bank];
  b.wake = std::min(b.wake, at);
  min_wake_ = std::min(min_wake_, at);
}

bool SmdChip::try_lock(int mech_slot, Priority prio, OpRequest op, Cycle now) {
  BankView& bv = banks_[op.bank];
  std::uint64_t mask = op.whole_bank ? all_regions() : op.region_mask;
  int p = static_cast<int>(prio);
  auto fail = [&] {
    if (bv.inhibit_at != now) {
      bv.inhibit_at = now;
      bv.inhibit = 0;
      bv.inhibit_prio = 99;
    }
    bv.inhibit |= mask;
    bv.inhibit_prio = std::min(bv.inhibit_prio, p);
    return false;
  };
  if (op.rows.empty() || mask == 0) throw InvariantError("try_lock: empty op");
  if (bv.inhibit_at == now && (bv.inhibit & mask) && p > bv.inhibit_prio) return fail();
  if (lrt_.held_mask(op.bank) & mask) return fail();
  if (!bv.ops.empty()) {
    if (!cfg_.concurrent_maintenance) return fail();
    // Disjoint blocked subarray sets only.
    for (const auto& a : bv.ops)
      for (int sa = 0; sa < g_.subarrays_per_bank(); ++sa)
        if (subarray_blocked_by(a.mask, sa) && subarray_blocked_by(mask, sa)) return fail();
  }
  for (std::uint64_t m = mask; m; m &= m - 1) {
    const auto& span = region_span_[std::countr_zero(m)];
    if (!ari_.ok(op.bank, span.first, span.second, now)) return fail();
  }
  if (bv.open_row >= 0 && subarray_blocked_by(mask, g_.subarray_of(bv.open_row))) return fail();
  if (now < bv.free_at && bv.closing_row >= 0 &&
      subarray_blocked_by(mask, g_.subarray_of(bv.closing_row)))
    return fail();

  ActiveOp a;
  a.mech = mech_slot;
  a.mask = mask;
  a.op = std::move(op);
  a.row_start = now;
  a.next = now;
  lrt_.lock(a.op.bank, mask, mech_slot, now + op_duration(a.op));
  ++stats_.ops;
  int bank = a.op.bank;
  bv.ops.push_back(std::move(a));
  advance(bank, bv.ops.back(), now);
  wake(bank, bv.ops.back().next);
  return true;
}

void SmdChip::reserve_row(int bank, int row) {
  banks_[bank].reserved.push_back(row);
}

void SmdChip::unreserve_row(int bank, int row) {
  auto& res = banks_[bank].reserved;
  auto it = std::find(res.begin(), res.end(), row);
  if (it != res.end()) res.erase(it);
}

void SmdChip::emit(Cmd kind, int bank, int row, dram::Source src, std::uint32_t aux, Cycle now) {
  if (!sink_) return;
  dram::CommandEvent e;
  e.cycle = now;
  e.kind = kind;
  e.channel = static_cast<std::int16_t>(channel_);
  e.rank = static_cast<std::int16_t>(rank_);
  e.bank = static_cast<std::int16_t>(bank);
  e.row = row;
  e.origin.source = src;
  e.origin.chip = static_cast<std::int16_t>(chip_);
  e.origin.aux = aux;
  sink_->on_event(e);
}

bool SmdChip::advance(int bank, ActiveOp& a, Cycle now) {
  const dram::Source src = mechs_[a.mech]->source();
  while (a.next <= now) {
    const maint::RowJob& job = a.op.rows[a.idx];
    if (!job.scrub) {
      switch (a.stage) {
        case 0:
          emit(Cmd::MAINT_ACT, bank, job.row, src, 0, now);
          a.stage = 1;
          a.next = a.row_start + t_.tRAS;
          break;
        case 1:
          emit(Cmd::MAINT_PRE, bank, job.row, src, 0, now);
          a.stage = 2;
          a.next = a.row_start + t_.tRC();
          break;
        default:
          goto row_end;
      }
      continue;
    }
    switch (a.stage) {
      case 0:
        emit(Cmd::MAINT_ACT, bank, job.row, src, 0, now);
        a.stage = 1;
        a.sub = 0;
        a.next = a.row_start + t_.tRCD;
        break;
      case 1:
        emit(Cmd::MAINT_RD, bank, job.row, src, 0, now);
        a.next += t_.tBL;
        if (++a.sub == cfg_.codewords_per_row) {
          a.stage = 2;
          a.sub = 0;
        }
        break;
      case 2:
        if (a.sub < static_cast<int>(job.faulty_codewords.size())) {
          emit(Cmd::MAINT_WB, bank, job.row, src,
               static_cast<std::uint32_t>(job.faulty_codewords[a.sub]) + 1, now);
          ++a.sub;
          a.next += cfg_.scrub_wb_cycles;
        } else {
          a.stage = 3;
        }
        break;
      case 3:
        emit(Cmd::MAINT_PRE, bank, job.row, src, 0, now);
        a.stage = 4;
        a.next = now + t_.tRP;
        break;
      default:
        goto row_end;
    }
    continue;
  row_end:
    ++a.idx;
    ++stats_.rows;
    if (a.idx == a.op.rows.size() || a.pause) return false;
    a.stage = 0;
    a.row_start = a.next;
  }
  return true;
}

void SmdChip::run_ops(int bank, Cycle now) {
  BankView& bv = banks_[bank];
  std::vector<ActiveOp> finished;
  for (std::size_t i = 0; i < bv.ops.size();) {
    ActiveOp& a = bv.ops[i];
    if (a.next <= now && !advance(bank, a, now)) {
      finished.push_back(std::move(a));
      bv.ops.erase(bv.ops.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  for (auto& a : finished) {
    lrt_.release(bank, a.mask, a.mech);
    for (std::uint64_t m = a.mask; m; m &= m - 1) {
      const auto& span = region_span_[std::countr_zero(m)];
      ari_.stamp(bank, span.first, span.second, now);
    }
    if (a.idx == a.op.rows.size())
      mechs_[a.mech]->on_op_done(a.op, now, *this);
    else
      mechs_[a.mech]->on_op_paused(a.op, a.idx, now);
  }
}

void SmdChip::step(Cycle now) {
  if (now < min_wake_) return;
  Cycle next_min = kNever;
  for (int b = 0; b < static_cast<int>(banks_.size()); ++b) {
    BankView& bv = banks_[b];
    if (bv.wake <= now) {
      run_ops(b, now);
      Cycle w = kNever;
      for (auto& m : mechs_) w = std::min(w, m->tick(b, now, *this));
      for (const auto& a : bv.ops) w = std::min(w, a.next);
      bv.wake = std::max(w, now + 1);
    }
    next_min = std::min(next_min, bv.wake);
  }
  min_wake_ = next_min;
}

bool SmdChip::pause_request(int bank, int row, Cycle now) {
  (void)now;
  for (auto& a : banks_[bank].ops) {
    if (subarray_blocked_by(a.mask, g_.subarray_of(row))) {
      if (!a.pause) {
        a.pause = true;
        ++stats_.pauses;
        return true;
      }
      return false;
    }
  }
  return false;
}

bool SmdChip::on_act(int bank, int row, Cycle now) {
  BankView& bv = banks_[bank];
  if (bv.open_row == row) return false;  // already open in this chip: ignore
  if (blocked(bank, row)) {
    ++stats_.nacks;
    if (cfg_.pause_policy) pause_request(bank, row, now);
    return true;
  }
  bv.open_row = row;
  bool need = false;
  for (auto& m : mechs_) need |= m->on_act(bank, row, now, *this);
  if (need) wake(bank, now + 1);
  return false;
}

void SmdChip::on_pre(int bank, Cycle now) {
  BankView& bv = banks_[bank];
  if (bv.open_row < 0) return;
  bv.closing_row = bv.open_row;
  bv.open_row = -1;
  bv.free_at = now + t_.tRP;
}

// ---- SmdRank -------------------------------------------------------------------------

SmdRank::SmdRank(const Geometry& g, const TimingParams& t, ChipConfig cfg, bool lockstep,
                 int channel, int rank, dram::EventSink* sink)
    : g_(g), t_(t), lockstep_(lockstep), rank_(rank) {
  int n = lockstep ? 1 : g.chips_per_rank;
  for (int i = 0; i < n; ++i)
    chips_.push_back(std::make_unique<SmdChip>(g, t, cfg, lockstep ? -1 : i, channel, rank, sink));
}

std::uint32_t SmdRank::all_chips_mask() const {
  return g_.chips_per_rank >= 32 ? 0xffffffffu : ((1u << g_.chips_per_rank) - 1);
}

void SmdRank::step(Cycle now) {
  for (auto& c : chips_) c->step(now);
}

Cycle SmdRank::next_wake() const {
  Cycle w = kNever;
  for (const auto& c : chips_) w = std::min(w, c->next_wake());
  return w;
}

std::uint32_t SmdRank::on_act(int bank, int row, Cycle now) {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < chips_.size(); ++i)
    if (chips_[i]->on_act(bank, row, now)) mask |= lockstep_ ? all_chips_mask() : (1u << i);
  if (mask) nacks_.push_back(NackNotice{now + t_.tNACK, bank, row, mask, now, rank_});
  return mask;
}

void SmdRank::on_pre(int bank, Cycle now) {
  for (auto& c : chips_) c->on_pre(bank, now);
}

std::uint32_t SmdRank::open_mask(int bank, int row) const {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < chips_.size(); ++i)
    if (chips_[i]->row_open(bank, row)) m |= lockstep_ ? all_chips_mask() : (1u << i);
  return m;
}

bool SmdRank::pop_nack(Cycle now, NackNotice& out) {
  if (nacks_.empty() || nacks_.front().cycle > now) return false;
  out = nacks_.front();
  nacks_.pop_front();
  return true;
}

}  // namespace smd::chip
