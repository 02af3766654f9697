#include "smd/dram/channel.hpp"

#include <algorithm>
#include <string>

namespace smd::dram {

Phase BankState::phase(Cycle now) const {
  if (open_row >= 0) return now < next_rd ? Phase::Activating : Phase::Active;
  return (pre_at >= 0 && now < next_act) ? Phase::Precharging : Phase::Precharged;
}

ChannelTiming::ChannelTiming(const Geometry& g, const TimingParams& t) : g_(g), t_(t) {
  ranks_.resize(g.ranks);
  for (auto& r : ranks_) {
    r.banks.resize(g.banks());
    r.saved.resize(g.banks());
    r.bg_next_rd.assign(g.bankgroups, 0);
    r.bg_next_wr.assign(g.bankgroups, 0);
  }
}

namespace {
[[noreturn]] void illegal(Cmd c, int rank, int bank, const char* why) {
  throw ProtocolError(std::string(cmd_name(c)) + " illegal on rank " + std::to_string(rank) +
                      " bank " + std::to_string(bank) + ": " + why);
}
}  // namespace

Cycle ChannelTiming::earliest(Cmd cmd, int rank, int bank, int row, Cycle now) const {
  const Rank& r = ranks_[rank];
  Cycle e = now;
  switch (cmd) {
    case Cmd::ACT: {
      const BankState& b = r.banks[bank];
      if (b.open_row >= 0 && !(b.partial && b.open_row == row)) illegal(cmd, rank, bank, "bank open");
      e = std::max({e, b.next_act, r.next_act, r.ref_until});
      break;
    }
    case Cmd::PRE: {
      const BankState& b = r.banks[bank];
      if (b.open_row < 0) illegal(cmd, rank, bank, "bank closed");
      e = std::max(e, b.next_pre);
      break;
    }
    case Cmd::RD:
    case Cmd::WR: {
      const BankState& b = r.banks[bank];
      if (b.open_row < 0) illegal(cmd, rank, bank, "bank closed");
      if (b.open_row != row) illegal(cmd, rank, bank, "row mismatch");
      if (b.partial) illegal(cmd, rank, bank, "row only partially open");
      int bg = bankgroup_of(g_, bank);
      if (cmd == Cmd::RD)
        e = std::max({e, b.next_rd, r.bg_next_rd[bg], r.next_rd, bus_next_rd_});
      else
        e = std::max({e, b.next_wr, r.bg_next_wr[bg], bus_next_wr_});
      break;
    }
    case Cmd::REF: {
      if (!all_closed(rank)) illegal(cmd, rank, bank, "banks open");
      e = std::max(e, r.ref_until);
      for (const auto& b : r.banks) e = std::max(e, b.next_act);
      break;
    }
    default:
      illegal(cmd, rank, bank, "not a controller command");
  }
  return e;
}

void ChannelTiming::apply(Cmd cmd, int rank, int bank, int row, Cycle now) {
  Cycle e = earliest(cmd, rank, bank, row, now);
  if (e > now)
    throw ProtocolError(std::string(cmd_name(cmd)) + " at " + std::to_string(now) +
                        " violates timing (earliest " + std::to_string(e) + ")");
  Rank& r = ranks_[rank];
  switch (cmd) {
    case Cmd::ACT: {
      BankState& b = r.banks[bank];
      if (b.open_row < 0) r.saved[bank] = b;
      b.open_row = row;
      b.act_at = now;
      b.hits = 0;
      b.next_rd = b.next_wr = now + t_.tRCD;
      b.next_pre = std::max(b.next_pre, now + t_.tRAS);
      b.next_act = now + t_.tRC();
      r.next_act = now + t_.tRRD;
      break;
    }
    case Cmd::PRE: {
      BankState& b = r.banks[bank];
      b.open_row = -1;
      b.partial = false;
      b.pre_at = now;
      b.next_act = std::max(b.next_act, now + t_.tRP);
      break;
    }
    case Cmd::RD: {
      BankState& b = r.banks[bank];
      int bg = bankgroup_of(g_, bank);
      b.next_pre = std::max(b.next_pre, now + t_.tRTP);
      ++b.hits;
      r.bg_next_rd[bg] = std::max(r.bg_next_rd[bg], now + t_.tCCD_L);
      r.bg_next_wr[bg] = std::max(r.bg_next_wr[bg], now + t_.tCCD_L);
      bus_next_rd_ = std::max(bus_next_rd_, now + t_.tBL);
      bus_next_wr_ = std::max(bus_next_wr_, now + t_.rd_to_wr());
      break;
    }
    case Cmd::WR: {
      BankState& b = r.banks[bank];
      int bg = bankgroup_of(g_, bank);
      b.next_pre = std::max(b.next_pre, now + t_.wr_to_pre());
      ++b.hits;
      r.bg_next_wr[bg] = std::max(r.bg_next_wr[bg], now + t_.tCCD_L);
      r.bg_next_rd[bg] = std::max(r.bg_next_rd[bg], now + t_.tCCD_L);
      r.next_rd = std::max(r.next_rd, now + t_.wr_to_rd_same_rank());
      bus_next_wr_ = std::max(bus_next_wr_, now + t_.tBL);
      bus_next_rd_ = std::max(bus_next_rd_, now + std::max(t_.tBL, t_.tCWL + t_.tBL + 2 - t_.tCL));
      break;
    }
    case Cmd::REF: {
      r.ref_until = now + t_.tRFC;
      for (auto& b : r.banks) b.next_act = std::max(b.next_act, r.ref_until);
      break;
    }
    default:
      break;
  }
}

void ChannelTiming::revert_act(int rank, int bank) {
  ranks_[rank].banks[bank] = ranks_[rank].saved[bank];
}

void ChannelTiming::mark_partial(int rank, int bank, bool partial) {
  ranks_[rank].banks[bank].partial = partial;
}

bool ChannelTiming::all_closed(int rank) const {
  for (const auto& b : ranks_[rank].banks)
    if (b.open_row >= 0) return false;
  return true;
}

}  // namespace smd::dram
