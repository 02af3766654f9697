#include "smd/dram/timing.hpp"

#include <cmath>

namespace smd::dram {

Cycle TimingParams::ns_to_cycles(double ns) const {
  return static_cast<Cycle>(std::llround(ns / clock_ns));
}

TimingParams default_timing(const std::string& speed_grade, double refresh_period_ms,
                            double time_scale) {
  if (speed_grade != "DDR4-3200") throw ConfigError("unknown speed grade '" + speed_grade + "'");
  if (!(refresh_period_ms > 0)) throw ConfigError("refresh period must be positive");
  if (!(time_scale > 0 && time_scale <= 1)) throw ConfigError("time_scale must be in (0, 1]");

  TimingParams t;
  t.tRFC = t.ns_to_cycles(350.0);
  double period_cycles = refresh_period_ms * 1e6 / t.clock_ns;
  t.tREFI = static_cast<Cycle>(std::floor(period_cycles / 8192.0));
  t.refs_per_window = static_cast<int>(std::llround(8192.0 * time_scale));
  if (t.refs_per_window < 1) throw ConfigError("time_scale too small");
  t.time_scale = time_scale;
  t.tREFW = t.tREFI * t.refs_per_window;
  t.max_open = 9 * t.tREFI;
  return t;
}

void validate(const TimingParams& t) {
  auto pos = [](Cycle v, const char* n) {
    if (v <= 0) throw ConfigError(std::string("timing: ") + n + " must be positive");
  };
  pos(t.tRCD, "tRCD");
  pos(t.tRP, "tRP");
  pos(t.tRAS, "tRAS");
  pos(t.tCL, "tCL");
  pos(t.tBL, "tBL");
  pos(t.tRFC, "tRFC");
  pos(t.tREFI, "tREFI");
  pos(t.tREFW, "tREFW");
  pos(t.ARI, "ARI");
  pos(t.tNACK, "tNACK");
  pos(t.max_open, "max_open");
  if (t.tRAS < t.tRCD) throw ConfigError("timing: tRAS must be >= tRCD");
  if (t.tNACK >= t.tRCD) throw ConfigError("timing: tNACK must be shorter than tRCD");
  if (t.tREFW < t.tREFI) throw ConfigError("timing: tREFW shorter than tREFI");
}

}  // namespace smd::dram
