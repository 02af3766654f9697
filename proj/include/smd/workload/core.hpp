#pragma once

#include <cstdint>
#include <deque>

#include "smd/workload/trace.hpp"

namespace smd::workload {

// Where a core sends its memory accesses.
class MemoryPort {
 public:
  virtual ~MemoryPort() = default;
  // Returns false when the request cannot be accepted this cycle.
  virtual bool issue(int core, bool write, std::uint64_t addr, std::uint64_t id, Cycle now) = 0;
};

struct CoreParams {
  int window = 128;
  int width = 4;
  int mshrs = 8;
  bool loop = true;  // restart the trace at its end
};

struct CoreStats {
  std::int64_t retired = 0;
  std::int64_t bubbles = 0;
  std::int64_t loads = 0;
  std::int64_t stores = 0;
  std::int64_t stall_cycles = 0;  // cycles in which nothing retired
};

class Core {
 public:
  Core(int id, const Trace* trace, CoreParams p = {});

  // Retire, then fill the window. Loads go to memory when they enter the window.
  void tick(MemoryPort& port, Cycle now);
  void on_complete(std::uint64_t id);

  bool finished() const;  // trace consumed (no loop) and window drained
  // Nothing can change until a load completes.
  bool blocked() const;
  int outstanding() const { return outstanding_; }
  const CoreStats& stats() const { return stats_; }
  int id() const { return id_; }

 private:
  enum class Kind : std::uint8_t { Bubble, Load, Store };
  struct Slot {
    Kind kind;
    bool done;
    std::uint64_t req;
  };

  int id_;
  const Trace* trace_;
  CoreParams p_;
  std::deque<Slot> window_;
  std::size_t cursor_ = 0;
  std::int64_t bubbles_left_ = 0;
  bool trace_done_ = false;
  int outstanding_ = 0;
  std::uint64_t next_req_ = 0;
  bool stalled_on_issue_ = false;
  CoreStats stats_;
};

}  // namespace smd::workload
