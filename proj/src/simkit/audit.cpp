#include "smd/simkit/audit.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace smd::simkit {

using dram::Cmd;
using dram::CommandEvent;
using dram::Source;

namespace {

constexpr std::size_t kSamples = 10;

void record(AuditResult& r, const std::string& msg) {
  ++r.violations;
  if (r.samples.size() < kSamples) r.samples.push_back(msg);
}

std::string where(const CommandEvent& e) {
  std::ostringstream s;
  s << "cycle " << e.cycle << " " << dram::cmd_name(e.kind) << " ch" << e.channel << " rank" << e.rank << " bank"
    << e.bank << " row" << e.row;
  return s.str();
}


template <typename F>
void for_bits(std::uint32_t m, F&& f) {
  while (m) {
    int b = std::countr_zero(m);
    m &= m - 1;
    f(b);
  }
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Report: return "report";
    case Verdict::Skipped: return "skipped";
  }
  return "?";
}

bool SpanRule::covers(int region, int row) const {
  int sa = row / rows_per_subarray;
  int lo = region * subarrays_per_region, hi = lo + subarrays_per_region - 1;
  if (open_bitline) {
    lo = std::max(0, lo - 1);
    hi = std::min(subarrays - 1, hi + 1);
  }
  return sa >= lo && sa <= hi;
}

SpanRule span_rule(const dram::Geometry& g, bool open_bitline) {
  return SpanRule{g.rows_per_subarray, g.subarrays_per_region, g.subarrays_per_bank(), open_bitline};
}

// ---- AcceptTracker ---------------------------------------------------------------------

AcceptTracker::AcceptTracker(const dram::Geometry& g, const dram::TimingParams& t, int chips)
    : ranks_(g.ranks), banks_(g.banks()), chips_(chips), tnack_(t.tNACK) {
  if (chips < 1 || chips > 32) throw ConfigError("audit: chip count out of range");
  all_ = chips >= 32 ? 0xffffffffu : ((1u << chips) - 1);
  open_.resize(static_cast<std::size_t>(g.channels) * ranks_ * banks_);
}

std::uint32_t AcceptTracker::chip_bits(const dram::Origin& o) const {
  if (o.chip < 0 || chips_ == 1) return all_;
  return (1u << o.chip) & all_;
}

std::uint32_t AcceptTracker::nack_bits(std::uint32_t aux) const {
  if (chips_ == 1) return aux ? 1u : 0u;
  return aux & all_;
}

void AcceptTracker::apply(const Pending& p) {
  Open& o = open_[index(p.r.channel, p.r.rank, p.r.bank)];
  std::uint32_t acc = p.want & ~p.nacked;
  if (o.row == p.r.row && o.pre < 0) {
    o.mask |= acc;
  } else if (acc) {
    o = Open{p.r.row, acc, p.r.act, -1};
  }
}

// ---- TimingAuditor -----------------------------------------------------------------------

TimingAuditor::TimingAuditor(const dram::Geometry& g, const dram::TimingParams& t) : g_(g), t_(t) {
  res_.name = "timing";
  ch_.resize(g.channels);
  for (auto& c : ch_) {
    c.ranks.resize(g.ranks);
    for (auto& r : c.ranks) {
      r.banks.resize(g.banks());
      r.saved.resize(g.banks());
      r.bg_col.assign(g.bankgroups, -kNever);
    }
  }
}

void TimingAuditor::fail(const CommandEvent& e, const std::string& why) { record(res_, where(e) + ": " + why); }

void TimingAuditor::on_event(const CommandEvent& e) {
  if (dram::is_maint(e.kind)) return;
  ++checked_;
  Channel& c = ch_[e.channel];
  Rank& r = c.ranks[e.rank];
  Cycle now = e.cycle;
  switch (e.kind) {
    case Cmd::ACT: {
      Bank& b = r.banks[e.bank];
      bool reopen = b.row >= 0 && b.partial && b.row == e.row;
      if (b.row >= 0 && !reopen) fail(e, "ACT to an open bank");
      if (now < b.pre + t_.tRP) fail(e, "tRP");
      if (now < b.act + t_.tRC()) fail(e, "tRC");
      if (now < r.act + t_.tRRD) fail(e, "tRRD");
      if (now < r.ref_until) fail(e, "tRFC");
      if (b.row < 0) {
        r.saved[e.bank] = b;
        b.opened = now;
      }
      b.row = e.row;
      b.act = now;
      b.partial = false;
      r.act = now;
      break;
    }
    case Cmd::NACK: {
      Bank& b = r.banks[e.bank];
      if (std::popcount(e.origin.aux) >= g_.chips_per_rank)
        b = r.saved[e.bank];
      else
        b.partial = true;
      break;
    }
    case Cmd::PRE: {
      Bank& b = r.banks[e.bank];
      if (b.row < 0) {
        fail(e, "PRE to a closed bank");
        break;
      }
      if (now < b.act + t_.tRAS) fail(e, "tRAS");
      if (now < b.rd + t_.tRTP) fail(e, "tRTP");
      if (now < b.wr + t_.tCWL + t_.tBL + t_.tWR) fail(e, "tWR");
      if (now - b.act > t_.max_open) fail(e, "row open longer than max_open");
      b.row = -1;
      b.partial = false;
      b.pre = now;
      break;
    }
    case Cmd::RD:
    case Cmd::WR: {
      Bank& b = r.banks[e.bank];
      int bg = dram::bankgroup_of(g_, e.bank);
      if (b.row != e.row) {
        fail(e, "column access to a row that is not open");
        break;
      }
      if (now < b.act + t_.tRCD) fail(e, "tRCD");
      if (now < r.bg_col[bg] + t_.tCCD_L) fail(e, "tCCD_L");
      if (e.kind == Cmd::RD) {
        if (now < c.rd + t_.tBL) fail(e, "data bus (RD after RD)");
        if (now < c.wr + std::max(t_.tBL, t_.tCWL + t_.tBL + 2 - t_.tCL)) fail(e, "data bus (RD after WR)");
        if (now < r.wr + t_.tCWL + t_.tBL + t_.tWTR) fail(e, "tWTR");
        b.rd = now;
        c.rd = now;
      } else {
        if (now < c.wr + t_.tBL) fail(e, "data bus (WR after WR)");
        if (now < c.rd + t_.tCL + t_.tBL + 2 - t_.tCWL) fail(e, "data bus (WR after RD)");
        b.wr = now;
        c.wr = now;
        r.wr = now;
      }
      r.bg_col[bg] = now;
      break;
    }
    case Cmd::REF: {
      for (const auto& b : r.banks) {
        if (b.row >= 0) {
          fail(e, "REF with an open bank");
          break;
        }
        if (now < b.pre + t_.tRP) {
          fail(e, "tRP before REF");
          break;
        }
        if (now < b.act + t_.tRC()) {
          fail(e, "tRC before REF");
          break;
        }
      }
      if (now < r.ref_until) fail(e, "REF during tRFC");
      r.ref_until = now + t_.tRFC;
      break;
    }
    default:
      break;
  }
}

void TimingAuditor::finish(Cycle end) {
  for (std::size_t ci = 0; ci < ch_.size(); ++ci)
    for (std::size_t ri = 0; ri < ch_[ci].ranks.size(); ++ri)
      for (std::size_t bi = 0; bi < ch_[ci].ranks[ri].banks.size(); ++bi) {
        const Bank& b = ch_[ci].ranks[ri].banks[bi];
        if (b.row >= 0 && end - b.act > t_.max_open)
          record(res_, "ch" + std::to_string(ci) + " rank" + std::to_string(ri) + " bank" + std::to_string(bi) +
                           ": row still open past max_open at end");
      }
}

AuditResult TimingAuditor::result() const {
  AuditResult r = res_;
  r.verdict = r.violations ? Verdict::Fail : Verdict::Pass;
  r.metrics["commands_checked"] = static_cast<double>(checked_);
  return r;
}

// ---- ProtocolAuditor ---------------------------------------------------------------------

ProtocolAuditor::ProtocolAuditor(const dram::Geometry& g, const dram::TimingParams& t, int chips,
                                 bool open_bitline, int blast)
    : g_(g), t_(t), span_(span_rule(g, open_bitline)), blast_(blast), tracker_(g, t, chips) {
  res_.name = "protocol";
  std::size_t slots = static_cast<std::size_t>(g.channels) * g.ranks * g.banks();
  maint_.resize(slots);
  last_maint_.assign(slots * chips * g.regions_per_bank(), -kNever);
}

std::size_t ProtocolAuditor::bank_index(int ch, int rank, int bank) const {
  return (static_cast<std::size_t>(ch) * g_.ranks + rank) * g_.banks() + bank;
}

void ProtocolAuditor::fail(Cycle c, const std::string& why) {
  record(res_, "cycle " + std::to_string(c) + ": " + why);
}

void ProtocolAuditor::check_resolved(const AcceptTracker::Resolved& r) {
  if (!r.accepted) return;
  for (const auto& m : maint_[bank_index(r.channel, r.rank, r.bank)]) {
    if (!(m.chips & r.accepted)) continue;
    if (m.since <= r.resolved_at && m.until > r.act && (m.whole_bank || span_.covers(g_.region_of(m.row), r.row))) {
      std::ostringstream s;
      s << "ACT ch" << r.channel << " rank" << r.rank << " bank" << r.bank << " row" << r.row << " at " << r.act
        << " accepted while maintenance row " << m.row << " blocks its subarray";
      fail(r.act, s.str());
      return;
    }
  }
}

void ProtocolAuditor::on_event(const CommandEvent& e) {
  bool matched = tracker_.feed(e, [this](const AcceptTracker::Resolved& r) { check_resolved(r); });
  std::size_t bi = bank_index(e.channel, e.rank, e.bank < 0 ? 0 : e.bank);
  int regions = g_.regions_per_bank();
  int chips = tracker_.chips();
  switch (e.kind) {
    case Cmd::NACK: {
      ++nacks_;
      if (!matched) {
        fail(e.cycle, where(e) + ": NACK without an ACT tNACK cycles earlier");
        break;
      }
      Cycle act = e.cycle - t_.tNACK;
      std::uint32_t unexplained = 0;
      for_bits(tracker_.nack_bits(e.origin.aux), [&](int chip) {
        bool ok = false;
        for (int reg = 0; reg < regions && !ok; ++reg) {
          if (!span_.covers(reg, e.row)) continue;
          Cycle last = last_maint_[(bi * chips + chip) * regions + reg];
          ok = last >= act - t_.tRAS;
        }
        if (!ok) unexplained |= 1u << chip;
      });
      if (unexplained) unexplained_.push_back(Unexplained{e.channel, e.rank, e.bank, e.row, unexplained, e.cycle});
      break;
    }
    case Cmd::MAINT_ACT:
    case Cmd::MAINT_RD:
    case Cmd::MAINT_WB:
    case Cmd::MAINT_PRE: {
      std::uint32_t bits = tracker_.chip_bits(e.origin);
      int reg = g_.region_of(e.row);
      bool whole = e.origin.source == Source::MS;
      int lo = reg, hi = reg;
      if (whole) {
        lo = 0;
        hi = regions - 1;
      } else if (e.origin.source == Source::DRP || e.origin.source == Source::PRP ||
                 e.origin.source == Source::PRP_PLUS) {
        // one victim-refresh lock holds the regions of every victim of the aggressor
        lo = g_.region_of(std::max(0, e.row - 2 * blast_));
        hi = g_.region_of(std::min(g_.rows_per_bank - 1, e.row + 2 * blast_));
      }
      for_bits(bits, [&](int chip) {
        for (int r = lo; r <= hi; ++r) last_maint_[(bi * chips + chip) * regions + r] = e.cycle;
      });
      auto& rows = maint_[bi];
      if (e.kind == Cmd::MAINT_ACT) {
        const auto& o = tracker_.open(e.channel, e.rank, e.bank);
        if (o.row >= 0 && (o.mask & bits) && (o.pre < 0 || e.cycle < o.pre + t_.tRP) &&
            (whole || span_.covers(reg, o.row)))
          fail(e.cycle, where(e) + ": maintenance ACT while the controller's row " + std::to_string(o.row) +
                            " is in the blocked span");
        rows.push_back(MaintRow{bits, e.row, e.cycle, kNever, whole});
        Source s = e.origin.source;
        if (s == Source::DRP || s == Source::PRP || s == Source::PRP_PLUS) {
          for (auto it = unexplained_.begin(); it != unexplained_.end();) {
            int d = std::abs(it->row - e.row);
            if (it->channel == e.channel && it->rank == e.rank && it->bank == e.bank && d >= 1 && d <= blast_ &&
                (it->chips & bits)) {
              it->chips &= ~bits;
              ++explained_late_;
            }
            it = it->chips ? it + 1 : unexplained_.erase(it);
          }
        }
      } else if (e.kind == Cmd::MAINT_PRE) {
        for (auto& m : rows)
          if (m.row == e.row && m.until == kNever && (m.chips & bits)) {
            m.until = e.cycle + t_.tRP;
            break;
          }
        Cycle horizon = e.cycle - 2 * t_.tNACK - 2;
        rows.erase(std::remove_if(rows.begin(), rows.end(), [&](const MaintRow& m) { return m.until < horizon; }),
                   rows.end());
      }
      break;
    }
    case Cmd::RD:
    case Cmd::WR: {
      const auto& o = tracker_.open(e.channel, e.rank, e.bank);
      if (o.row == e.row && o.pre < 0 && o.mask != tracker_.all())
        fail(e.cycle, where(e) + ": column access while some chips lack the open row");
      break;
    }
    default:
      break;
  }
}

void ProtocolAuditor::finish(Cycle end) {
  tracker_.flush([this](const AcceptTracker::Resolved& r) { check_resolved(r); }, end);
  for (const auto& u : unexplained_) {
    std::ostringstream s;
    s << "NACK ch" << u.channel << " rank" << u.rank << " bank" << u.bank << " row" << u.row
      << " has no maintenance activity in its blocked span";
    fail(u.nack, s.str());
  }
  unexplained_.clear();
}

AuditResult ProtocolAuditor::result() const {
  AuditResult r = res_;
  r.verdict = r.violations ? Verdict::Fail : Verdict::Pass;
  r.metrics["nacks"] = static_cast<double>(nacks_);
  r.metrics["nacks_explained_by_victim_refresh"] = static_cast<double>(explained_late_);
  return r;
}

// ---- RetryAuditor --------------------------------------------------------------------------

RetryAuditor::RetryAuditor(const dram::Geometry& g, const dram::TimingParams& t) : g_(g), t_(t) {
  res_.name = "retry";
  trains_.resize(static_cast<std::size_t>(g.channels) * g.ranks * g.banks());
}

void RetryAuditor::fail(Cycle c, const std::string& why) { record(res_, "cycle " + std::to_string(c) + ": " + why); }

void RetryAuditor::sweep(Cycle now) {
  for (std::size_t i = 0; i < live_.size();) {
    Train& t = trains_[live_[i]];
    bool end = false;
    if (t.awaiting && now > t.last + t_.tNACK) {
      end = true;
      ++trains_done_;
      longest_ = std::max(longest_, t.last - t.start);
    } else if (!t.awaiting && now > t.last + t_.ARI) {
      fail(t.last + t_.ARI, "no retry of row " + std::to_string(t.row) + " one ARI after its NACK'd ACT");
      end = true;
    }
    if (end) {
      t = Train{};
      live_[i] = live_.back();
      live_.pop_back();
    } else {
      ++i;
    }
  }
}

void RetryAuditor::on_event(const CommandEvent& e) {
  if (!live_.empty()) sweep(e.cycle);
  if (e.kind != Cmd::ACT && e.kind != Cmd::NACK) return;
  std::size_t idx = (static_cast<std::size_t>(e.channel) * g_.ranks + e.rank) * g_.banks() + e.bank;
  Train& t = trains_[idx];
  if (e.kind == Cmd::ACT) {
    if (!t.active || e.row != t.row) return;
    if (t.awaiting) return;
    if (e.cycle != t.last + t_.ARI)
      fail(e.cycle, where(e) + ": retry " + std::to_string(e.cycle - t.last) + " cycles after the previous ACT");
    t.last = e.cycle;
    t.awaiting = true;
    ++retries_;
    return;
  }
  Cycle act = e.cycle - t_.tNACK;
  if (!t.active) {
    t = Train{true, e.row, act, act, false};
    live_.push_back(idx);
  } else if (t.awaiting && act == t.last && e.row == t.row) {
    t.awaiting = false;
  }
}

void RetryAuditor::finish(Cycle end) {
  for (std::size_t idx : live_) {
    Train& t = trains_[idx];
    if (t.awaiting) {
      ++trains_done_;
      longest_ = std::max(longest_, t.last - t.start);
    } else if (end > t.last + t_.ARI) {
      fail(t.last + t_.ARI, "no retry of row " + std::to_string(t.row) + " before the end of the run");
    }
    t = Train{};
  }
  live_.clear();
}

AuditResult RetryAuditor::result() const {
  AuditResult r = res_;
  r.verdict = r.violations ? Verdict::Fail : Verdict::Pass;
  r.metrics["trains"] = static_cast<double>(trains_done_);
  r.metrics["retries"] = static_cast<double>(retries_);
  r.metrics["longest_train_cycles"] = static_cast<double>(longest_);
  return r;
}

// ---- RefreshAuditor --------------------------------------------------------------------------

RefreshAuditor::RefreshAuditor(const dram::Geometry& g, const dram::TimingParams& t, RefreshAuditSpec spec)
    : g_(g), t_(t), spec_(std::move(spec)) {
  res_.name = "refresh";
  if (spec_.chips < 1) spec_.chips = 1;
  weak_.assign(g.banks(), std::vector<char>(g.rows_per_bank, 0));
  for (std::size_t b = 0; b < spec_.weak_rows.size() && b < weak_.size(); ++b)
    for (int r : spec_.weak_rows[b])
      if (r >= 0 && r < g.rows_per_bank) weak_[b][r] = 1;
  last_.resize(static_cast<std::size_t>(g.channels) * g.ranks * spec_.chips * g.banks());
}

Cycle RefreshAuditor::bound(int bank, int row) const {
  switch (spec_.kind) {
    case RefreshKind::Baseline:
      return t_.tREFW + 8 * t_.tREFI + t_.tRFC;
    case RefreshKind::Fr:
      return t_.tREFW + 17 * t_.tREFI;
    case RefreshKind::Vr:
      return (weak_[bank][row] ? 1 : spec_.vr_factor) * t_.tREFW + 17 * t_.tREFI;
  }
  return 0;
}

std::vector<Cycle>& RefreshAuditor::rows(std::size_t slot) {
  auto& v = last_[slot];
  if (v.empty()) v.assign(g_.rows_per_bank, 0);
  return v;
}

void RefreshAuditor::violation(std::size_t slot, int row, Cycle gap) {
  int bank = static_cast<int>(slot % g_.banks());
  std::size_t rest = slot / g_.banks();
  int chip = static_cast<int>(rest % spec_.chips);
  rest /= spec_.chips;
  int rank = static_cast<int>(rest % g_.ranks);
  int ch = static_cast<int>(rest / g_.ranks);
  std::ostringstream s;
  s << "ch" << ch << " rank" << rank << " chip" << chip << " bank" << bank << " row" << row << ": gap " << gap
    << " > bound " << bound(bank, row);
  record(res_, s.str());
}

void RefreshAuditor::refresh(std::size_t slot, int row, Cycle now) {
  auto& v = rows(slot);
  Cycle gap = now - v[row];
  int bank = static_cast<int>(slot % g_.banks());
  if (gap > bound(bank, row)) violation(slot, row, gap);
  max_gap_ = std::max(max_gap_, gap);
  v[row] = now;
  ++refreshes_;
}

void RefreshAuditor::on_event(const CommandEvent& e) {
  std::size_t base = (static_cast<std::size_t>(e.channel) * g_.ranks + e.rank) * spec_.chips;
  if (e.kind == Cmd::REF) {
    int per = std::max(1, g_.rows_per_bank / t_.refs_per_window);
    for (int chip = 0; chip < spec_.chips; ++chip)
      for (int b = 0; b < g_.banks(); ++b)
        for (int k = 0; k < per; ++k)
          refresh((base + chip) * g_.banks() + b, (e.row + k) % g_.rows_per_bank, e.cycle);
  } else if (e.kind == Cmd::MAINT_ACT && (e.origin.source == Source::FR || e.origin.source == Source::VR)) {
    if (e.origin.chip < 0 || spec_.chips == 1) {
      for (int chip = 0; chip < spec_.chips; ++chip) refresh((base + chip) * g_.banks() + e.bank, e.row, e.cycle);
    } else {
      refresh((base + e.origin.chip) * g_.banks() + e.bank, e.row, e.cycle);
    }
  }
}

void RefreshAuditor::finish(Cycle end) {
  end_ = end;
  for (std::size_t slot = 0; slot < last_.size(); ++slot) {
    auto& v = rows(slot);
    int bank = static_cast<int>(slot % g_.banks());
    for (int row = 0; row < g_.rows_per_bank; ++row) {
      Cycle gap = end - v[row];
      if (gap > bound(bank, row)) {
        violation(slot, row, gap);
        max_gap_ = std::max(max_gap_, gap);
      }
    }
  }
}

AuditResult RefreshAuditor::result() const {
  AuditResult r = res_;
  if (r.violations)
    r.verdict = Verdict::Fail;
  else
    r.verdict = end_ >= 2 * t_.tREFW ? Verdict::Pass : Verdict::Inconclusive;
  r.metrics["max_gap_cycles"] = static_cast<double>(max_gap_);
  r.metrics["refreshes"] = static_cast<double>(refreshes_);
  r.metrics["bound_cycles"] = static_cast<double>(spec_.kind == RefreshKind::Baseline
                                                      ? t_.tREFW + 8 * t_.tREFI + t_.tRFC
                                                      : t_.tREFW + 17 * t_.tREFI);
  return r;
}

// ---- RowHammerAuditor ------------------------------------------------------------------------

RowHammerAuditor::RowHammerAuditor(const dram::Geometry& g, const dram::TimingParams& t, int chips,
                                   std::uint32_t act_max, int blast, bool enforce)
    : g_(g), t_(t), act_max_(act_max), blast_(blast), enforce_(enforce), tracker_(g, t, chips) {
  res_.name = "rowhammer";
  if (blast_ < 1 || blast_ > 16) throw ConfigError("audit: blast radius must be in [1,16]");
}

std::uint64_t RowHammerAuditor::key(int ch, int rank, int chip, int bank, int row) const {
  std::uint64_t hi = ((static_cast<std::uint64_t>(ch) * g_.ranks + rank) * tracker_.chips() + chip) * g_.banks() + bank;
  return (hi << 32) | static_cast<std::uint32_t>(row);
}

std::uint32_t RowHammerAuditor::full_mask(int row) const {
  std::uint32_t m = 0;
  for (int d = 1; d <= blast_; ++d) {
    if (row - d >= 0) m |= 1u << (d - 1);
    if (row + d < g_.rows_per_bank) m |= 1u << (blast_ + d - 1);
  }
  return m;
}

void RowHammerAuditor::activation(const AcceptTracker::Resolved& r) {
  std::int64_t window = r.act / t_.tREFW;
  for_bits(r.accepted, [&](int chip) {
    Agg& a = aggs_[key(r.channel, r.rank, chip, r.bank, r.row)];
    if (a.window != window) a = Agg{0, 0, window};
    ++a.count;
    ++acts_;
    if (a.count > max_) max_ = a.count;
    if (enforce_ && a.count == static_cast<std::int64_t>(act_max_) + 1) {
      std::ostringstream s;
      s << "ch" << r.channel << " rank" << r.rank << " chip" << chip << " bank" << r.bank << " row" << r.row
        << " activated more than " << act_max_ << " times without a victim refresh (cycle " << r.act << ")";
      record(res_, s.str());
    }
  });
  if (r.source == Source::MC_PARA) victim_refresh(r.channel, r.rank, r.accepted, r.bank, r.row, r.act);
}

void RowHammerAuditor::victim_refresh(int ch, int rank, std::uint32_t chips, int bank, int v, Cycle now) {
  ++victim_refreshes_;
  std::int64_t window = now / t_.tREFW;
  for (int d = 1; d <= blast_; ++d)
    for (int a : {v - d, v + d}) {
      if (a < 0 || a >= g_.rows_per_bank) continue;
      for_bits(chips, [&](int chip) {
        auto it = aggs_.find(key(ch, rank, chip, bank, a));
        if (it == aggs_.end()) return;
        Agg& g = it->second;
        if (g.window != window) g = Agg{0, 0, window};
        int off = v - a;
        int bit = off < 0 ? (-off - 1) : (blast_ + off - 1);
        g.refreshed |= 1u << bit;
        std::uint32_t full = full_mask(a);
        if ((g.refreshed & full) == full) {
          g.count = 0;
          g.refreshed = 0;
        }
      });
    }
}

void RowHammerAuditor::on_event(const CommandEvent& e) {
  tracker_.feed(e, [this](const AcceptTracker::Resolved& r) { activation(r); });
  if (e.kind == Cmd::MAINT_ACT) {
    Source s = e.origin.source;
    if (s == Source::DRP || s == Source::PRP || s == Source::PRP_PLUS)
      victim_refresh(e.channel, e.rank, tracker_.chip_bits(e.origin), e.bank, e.row, e.cycle);
  }
}

void RowHammerAuditor::finish(Cycle end) {
  (void)end;
  tracker_.flush([this](const AcceptTracker::Resolved& r) { activation(r); });
}

AuditResult RowHammerAuditor::result() const {
  AuditResult r = res_;
  if (!enforce_)
    r.verdict = Verdict::Report;
  else
    r.verdict = r.violations ? Verdict::Fail : Verdict::Pass;
  r.metrics["max_unmitigated_acts"] = static_cast<double>(max_);
  r.metrics["act_max"] = static_cast<double>(act_max_);
  r.metrics["activations"] = static_cast<double>(acts_);
  r.metrics["victim_refreshes"] = static_cast<double>(victim_refreshes_);
  return r;
}

// ---- ScrubAuditor ---------------------------------------------------------------------------

ScrubAuditor::ScrubAuditor(const dram::Geometry& g, const dram::TimingParams& t, ScrubAuditSpec spec)
    : g_(g), t_(t), spec_(std::move(spec)) {
  res_.name = "scrub";
  if (spec_.chips < 1) spec_.chips = 1;
  std::size_t slots = static_cast<std::size_t>(g.channels) * g.ranks * spec_.chips * g.banks();
  cur_.resize(slots);
  last_.assign(slots, std::vector<Cycle>(g.rows_per_bank, 0));
}

Cycle ScrubAuditor::gap_bound() const {
  // One sweep of the bank, plus saturated pending ticks and the longest lock acquisition delay.
  Cycle sweep = spec_.t_scrub * g_.rows_per_bank;
  Cycle acquire = t_.max_open + t_.ARI + 8 * t_.tRC();
  return sweep + spec_.max_pending * spec_.t_scrub + acquire;
}

std::size_t ScrubAuditor::slot(const CommandEvent& e, int chip) const {
  return ((static_cast<std::size_t>(e.channel) * g_.ranks + e.rank) * spec_.chips + chip) * g_.banks() + e.bank;
}

void ScrubAuditor::fail(Cycle c, const std::string& why) { record(res_, "cycle " + std::to_string(c) + ": " + why); }

void ScrubAuditor::on_event(const CommandEvent& e) {
  if (!dram::is_maint(e.kind) || e.origin.source != Source::MS) return;
  std::vector<int> chips;
  if (e.origin.chip < 0 || spec_.chips == 1)
    for (int c = 0; c < spec_.chips; ++c) chips.push_back(c);
  else
    chips.push_back(e.origin.chip);
  for (int chip : chips) {
    std::size_t s = slot(e, chip);
    Current& c = cur_[s];
    switch (e.kind) {
      case Cmd::MAINT_ACT:
        if (c.active) fail(e.cycle, where(e) + ": scrub row started before the previous one finished");
        c = Current{true, e.row, e.cycle, 0, {}};
        break;
      case Cmd::MAINT_RD:
        if (!c.active || c.row != e.row)
          fail(e.cycle, where(e) + ": scrub read outside a scrub row");
        else
          ++c.reads;
        break;
      case Cmd::MAINT_WB:
        if (!c.active || c.row != e.row)
          fail(e.cycle, where(e) + ": write-back outside a scrub row");
        else
          c.wbs.push_back(static_cast<int>(e.origin.aux) - 1);
        break;
      case Cmd::MAINT_PRE: {
        if (!c.active || c.row != e.row) {
          fail(e.cycle, where(e) + ": scrub PRE without a scrub row");
          break;
        }
        Cycle dur = e.cycle + t_.tRP - c.start;
        Cycle expect = t_.tRCD + spec_.codewords * t_.tBL + static_cast<Cycle>(c.wbs.size()) * spec_.wb_cycles + t_.tRP;
        if (dur != expect)
          fail(e.cycle, where(e) + ": scrub row took " + std::to_string(dur) + " cycles, expected " +
                            std::to_string(expect));
        if (c.reads != spec_.codewords)
          fail(e.cycle, where(e) + ": " + std::to_string(c.reads) + " codeword reads");
        auto fit = spec_.faults.find({e.bank, e.row});
        for (int cw : c.wbs) {
          bool known = fit != spec_.faults.end() &&
                       std::find(fit->second.begin(), fit->second.end(), cw) != fit->second.end();
          if (!known)
            fail(e.cycle, where(e) + ": write-back of codeword " + std::to_string(cw) + " which had no fault");
          else if (!cleared_.insert({s, e.row, cw}).second)
            fail(e.cycle, where(e) + ": codeword " + std::to_string(cw) + " corrected twice");
        }
        if (fit != spec_.faults.end())
          for (int cw : fit->second)
            if (!cleared_.count({s, e.row, cw}))
              fail(e.cycle, where(e) + ": fault in codeword " + std::to_string(cw) + " left uncorrected");
        Cycle gap = c.start - last_[s][e.row];
        max_gap_ = std::max(max_gap_, gap);
        if (gap > gap_bound()) fail(e.cycle, where(e) + ": scrub gap " + std::to_string(gap));
        last_[s][e.row] = c.start;
        scrubbed_.insert({s, e.row});
        ++rows_;
        if (c.wbs.empty()) {
          ++clean_rows_;
          min_dur_ = std::min(min_dur_, dur);
          max_dur_ = std::max(max_dur_, dur);
        } else {
          ++faulty_rows_;
        }
        c = Current{};
        break;
      }
      default:
        break;
    }
  }
}

void ScrubAuditor::finish(Cycle end) {
  end_ = end;
  Cycle b = gap_bound();
  for (std::size_t s = 0; s < last_.size(); ++s)
    for (int row = 0; row < g_.rows_per_bank; ++row)
      if (end - last_[s][row] > b) {
        fail(end, "row " + std::to_string(row) + " of slot " + std::to_string(s) + " not scrubbed within " +
                      std::to_string(b) + " cycles");
        max_gap_ = std::max(max_gap_, end - last_[s][row]);
      }
}

AuditResult ScrubAuditor::result() const {
  AuditResult r = res_;
  if (r.violations)
    r.verdict = Verdict::Fail;
  else
    r.verdict = end_ >= gap_bound() ? Verdict::Pass : Verdict::Inconclusive;
  r.metrics["rows_scrubbed"] = static_cast<double>(rows_);
  r.metrics["faulty_rows"] = static_cast<double>(faulty_rows_);
  r.metrics["faults_cleared"] = static_cast<double>(cleared_.size());
  r.metrics["clean_row_cycles_min"] = clean_rows_ ? static_cast<double>(min_dur_) : 0.0;
  r.metrics["clean_row_cycles_max"] = static_cast<double>(max_dur_);
  r.metrics["max_gap_cycles"] = static_cast<double>(max_gap_);
  r.metrics["gap_bound_cycles"] = static_cast<double>(gap_bound());
  std::size_t slots = last_.size();
  r.metrics["coverage"] = slots ? static_cast<double>(scrubbed_.size()) / (static_cast<double>(slots) * g_.rows_per_bank) : 0.0;
  return r;
}

}  // namespace smd::simkit
