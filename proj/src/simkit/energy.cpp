#include "smd/simkit/energy.hpp"

#include <bit>

namespace smd::simkit {

using dram::Cmd;
using dram::Source;

EnergyParams energy_from_idd(const IddParams& d, const dram::TimingParams& t) {
  double ck = t.clock_ns;
  EnergyParams p;
  // mA * ns * V = pJ
  p.act = d.vdd * (d.idd0 - d.idd3n) * t.tRAS * ck;
  p.pre = d.vdd * (d.idd0 - d.idd2n) * t.tRP * ck;
  p.rd = d.vdd * (d.idd4r - d.idd3n) * t.tBL * ck;
  p.wr = d.vdd * (d.idd4w - d.idd3n) * t.tBL * ck;
  p.ref = d.vdd * (d.idd5b - d.idd3n) * t.tRFC * ck;
  p.p_active = d.vdd * d.idd3n;       // mW
  p.p_precharged = d.vdd * d.idd2n;  // mW
  return p;
}

void validate(const EnergyParams& e) {
  for (double v : {e.act, e.pre, e.rd, e.wr, e.ref, e.p_active, e.p_precharged})
    if (v < 0) throw ConfigError("energy parameters must be nonnegative");
  if (e.maint_pricing != "refresh" && e.maint_pricing != "command")
    throw ConfigError("energy maint_pricing must be 'refresh' or 'command'");
}

EnergyModel::EnergyModel(const dram::Geometry& g, const dram::TimingParams& t, EnergyParams p)
    : g_(g), t_(t), p_(p) {
  validate(p_);
  ranks_.resize(static_cast<std::size_t>(g.channels) * g.ranks);
  for (auto& r : ranks_) r.open.assign(g.banks(), false);
}

double EnergyModel::refresh_row_energy() const {
  double rows_per_ref = static_cast<double>(g_.rows_per_bank) / t_.refs_per_window;
  return p_.ref / (rows_per_ref * g_.banks());
}

void EnergyModel::settle(RankState& r, Cycle now) {
  if (now <= r.since) return;
  double ns = static_cast<double>(now - r.since) * t_.clock_ns;
  double mw = r.active ? p_.p_active : p_.p_precharged;
  e_.background += mw * ns * g_.chips_per_rank;  // mW * ns = pJ
  r.since = now;
}

void EnergyModel::update(RankState& r, Cycle now) {
  settle(r, now);
  r.active = r.open_count > 0 || r.maint_open > 0 || now < r.ref_until;
}

void EnergyModel::on_event(const dram::CommandEvent& e) {
  RankState& r = ranks_[static_cast<std::size_t>(e.channel) * g_.ranks + e.rank];
  // REF keeps the rank busy until tRFC has elapsed; account for the drop when it happens.
  if (r.ref_until > r.since && r.ref_until <= e.cycle) {
    settle(r, r.ref_until);
    r.active = r.open_count > 0 || r.maint_open > 0;
  }
  settle(r, e.cycle);
  double chips = e.origin.chip >= 0 ? 1.0 : g_.chips_per_rank;
  bool refresh_like = e.origin.source != Source::MS && p_.maint_pricing == "refresh";
  switch (e.kind) {
    case Cmd::ACT:
      e_.act += p_.act * g_.chips_per_rank;
      if (!r.open[e.bank]) {
        r.open[e.bank] = true;
        ++r.open_count;
      }
      break;
    case Cmd::NACK: {
      // A rejected ACT costs nothing in the rejecting chips.
      int n = std::popcount(e.origin.aux);
      e_.act -= p_.act * n;
      if (n >= g_.chips_per_rank && r.open[e.bank]) {
        r.open[e.bank] = false;
        --r.open_count;
      }
      break;
    }
    case Cmd::PRE:
      e_.pre += p_.pre * g_.chips_per_rank;
      if (r.open[e.bank]) {
        r.open[e.bank] = false;
        --r.open_count;
      }
      break;
    case Cmd::RD:
      e_.rd += p_.rd * g_.chips_per_rank;
      break;
    case Cmd::WR:
      e_.wr += p_.wr * g_.chips_per_rank;
      break;
    case Cmd::REF:
      e_.ref += p_.ref * g_.chips_per_rank;
      r.ref_until = e.cycle + t_.tRFC;
      break;
    case Cmd::MAINT_ACT:
      if (refresh_like)
        e_.maint_refresh += refresh_row_energy() * chips;
      else
        (e.origin.source == Source::MS ? e_.maint_scrub : e_.maint_refresh) += p_.act * chips;
      ++r.maint_open;
      break;
    case Cmd::MAINT_PRE:
      if (!refresh_like) (e.origin.source == Source::MS ? e_.maint_scrub : e_.maint_refresh) += p_.pre * chips;
      if (r.maint_open > 0) --r.maint_open;
      break;
    case Cmd::MAINT_RD:
      e_.maint_scrub += p_.rd * chips;
      break;
    case Cmd::MAINT_WB:
      e_.maint_scrub += p_.wr * chips;
      break;
  }
  update(r, e.cycle);
}

void EnergyModel::finish(Cycle end) {
  for (auto& r : ranks_) {
    if (r.ref_until > r.since && r.ref_until <= end) {
      settle(r, r.ref_until);
      r.active = r.open_count > 0 || r.maint_open > 0;
    }
    settle(r, end);
  }
}

double energy_of(const std::vector<dram::CommandEvent>& log, Cycle elapsed, const dram::Geometry& g,
                 const dram::TimingParams& t, const EnergyParams& p, EnergyBreakdown* out) {
  EnergyModel m(g, t, p);
  for (const auto& e : log) m.on_event(e);
  m.finish(elapsed);
  if (out) *out = m.breakdown();
  return m.breakdown().total();
}

}  // namespace smd::simkit
