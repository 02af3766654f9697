#pragma once

#include <string>

#include "smd/common.hpp"

namespace smd::dram {

// All values in command-bus cycles.
struct TimingParams {
  double clock_ns = 0.625;
  Cycle tRCD = 22;
  Cycle tRP = 22;
  Cycle tRAS = 52;
  Cycle tCL = 22;
  Cycle tCWL = 16;
  Cycle tBL = 4;
  Cycle tCCD_L = 8;
  Cycle tWTR = 12;
  Cycle tRTP = 12;
  Cycle tWR = 24;
  Cycle tRRD = 8;
  Cycle tRFC = 560;
  Cycle tREFI = 6250;
  Cycle tREFW = 6250LL * 8192;
  Cycle ARI = 100;
  Cycle tNACK = 5;
  Cycle max_open = 9 * 6250;
  // Refresh commands per (possibly time-scaled) window; tREFW = refs_per_window * tREFI.
  int refs_per_window = 8192;
  double time_scale = 1.0;

  Cycle tRC() const { return tRAS + tRP; }
  Cycle read_latency() const { return tCL + tBL; }
  Cycle wr_to_pre() const { return tCWL + tBL + tWR; }
  Cycle rd_to_wr() const { return tCL + tBL + 2 - tCWL; }
  Cycle wr_to_rd_same_rank() const { return tCWL + tBL + tWTR; }
  Cycle ns_to_cycles(double ns) const;
};

// refresh_period_ms sets tREFI = period / 8192. time_scale shrinks the window
// (fewer refresh commands per window) without changing tREFI.
TimingParams default_timing(const std::string& speed_grade, double refresh_period_ms,
                            double time_scale = 1.0);

void validate(const TimingParams& t);

}  // namespace smd::dram
