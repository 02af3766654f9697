#pragma once

#include <vector>

#include "smd/dram/command.hpp"
#include "smd/dram/geometry.hpp"
#include "smd/dram/timing.hpp"

namespace smd::dram {

enum class Phase { Precharged, Activating, Active, Precharging };

struct BankState {
  int open_row = -1;     // controller view; -1 when closed
  bool partial = false;  // row open in only some chips of the rank
  Cycle act_at = -1;
  Cycle pre_at = -1;
  Cycle next_act = 0;
  Cycle next_pre = 0;
  Cycle next_rd = 0;
  Cycle next_wr = 0;
  int hits = 0;  // column commands since the last ACT

  Phase phase(Cycle now) const;
};

// Controller-side timing model of one channel: bank state machines and the
// DDR4 constraints between commands. earliest() never returns a cycle that
// apply() would reject.
class ChannelTiming {
 public:
  ChannelTiming(const Geometry& g, const TimingParams& t);

  // First cycle >= now at which cmd may issue. Throws ProtocolError when the
  // command is structurally illegal for the bank's phase.
  Cycle earliest(Cmd cmd, int rank, int bank, int row, Cycle now) const;
  // Applies cmd at now. Throws ProtocolError when earliest(...) > now.
  void apply(Cmd cmd, int rank, int bank, int row, Cycle now);

  // NACK handling: restore the bank record saved before the last ACT to it.
  void revert_act(int rank, int bank);
  void mark_partial(int rank, int bank, bool partial);

  const BankState& bank(int rank, int bank) const { return ranks_[rank].banks[bank]; }
  BankState& bank_mut(int rank, int bank) { return ranks_[rank].banks[bank]; }
  bool all_closed(int rank) const;
  Cycle refresh_until(int rank) const { return ranks_[rank].ref_until; }
  const TimingParams& timing() const { return t_; }
  const Geometry& geometry() const { return g_; }

 private:
  struct Rank {
    std::vector<BankState> banks;
    std::vector<BankState> saved;  // pre-ACT snapshots
    std::vector<Cycle> bg_next_rd, bg_next_wr;
    Cycle next_act = 0;
    Cycle next_rd = 0;  // write-to-read turnaround in this rank
    Cycle ref_until = 0;
  };

  Geometry g_;
  TimingParams t_;
  std::vector<Rank> ranks_;
  Cycle bus_next_rd_ = 0;
  Cycle bus_next_wr_ = 0;
};

}  // namespace smd::dram
