#pragma once

#include <array>
#include <string>
#include <vector>

#include "smd/dram/command.hpp"
#include "smd/dram/geometry.hpp"
#include "smd/dram/timing.hpp"

namespace smd::simkit {

// Datasheet currents (mA) and supply voltage of one DDR4 chip.
struct IddParams {
  double vdd = 1.2;
  double idd0 = 60;
  double idd2n = 38;
  double idd3n = 48;
  double idd4r = 150;
  double idd4w = 140;
  double idd5b = 250;
};

// Per-chip energies in pJ and standby powers in mW.
struct EnergyParams {
  double act = 0;
  double pre = 0;
  double rd = 0;
  double wr = 0;
  double ref = 0;  // one all-bank REF
  double p_active = 0;
  double p_precharged = 0;
  // "refresh": in-DRAM refresh rows are priced at REF energy per refreshed row.
  // "command": every MAINT_* command is priced as its controller counterpart.
  std::string maint_pricing = "refresh";
};

EnergyParams energy_from_idd(const IddParams& idd, const dram::TimingParams& t);
void validate(const EnergyParams& e);

struct EnergyBreakdown {
  double act = 0, pre = 0, rd = 0, wr = 0, ref = 0;
  double maint_refresh = 0, maint_scrub = 0;
  double background = 0;
  double commands() const { return act + pre + rd + wr + ref + maint_refresh + maint_scrub; }
  double total() const { return commands() + background; }
};

// Streaming energy accounting over the command stream. All results in pJ.
class EnergyModel : public dram::EventSink {
 public:
  EnergyModel(const dram::Geometry& g, const dram::TimingParams& t, EnergyParams p);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  const EnergyBreakdown& breakdown() const { return e_; }
  // pJ for one refreshed row in one chip under "refresh" pricing.
  double refresh_row_energy() const;

 private:
  struct RankState {
    std::vector<bool> open;
    int open_count = 0;
    int maint_open = 0;
    Cycle ref_until = 0;
    Cycle since = 0;
    bool active = false;
  };
  void settle(RankState& r, Cycle now);
  void update(RankState& r, Cycle now);

  dram::Geometry g_;
  dram::TimingParams t_;
  EnergyParams p_;
  std::vector<RankState> ranks_;  // channel-major
  EnergyBreakdown e_;
};

double energy_of(const std::vector<dram::CommandEvent>& log, Cycle elapsed, const dram::Geometry& g,
                 const dram::TimingParams& t, const EnergyParams& p, EnergyBreakdown* out = nullptr);

}  // namespace smd::simkit
