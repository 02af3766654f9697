#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "smd/dram/command.hpp"
#include "smd/dram/geometry.hpp"
#include "smd/dram/timing.hpp"

namespace smd::maint {

using dram::Source;

// One row operation inside a locked region.
struct RowJob {
  int row = 0;
  bool scrub = false;
  std::vector<int> faulty_codewords;  // scrub only, ascending
};

struct OpRequest {
  int bank = 0;
  std::uint64_t region_mask = 0;  // regions to lock
  bool whole_bank = false;
  std::vector<RowJob> rows;
  bool victim_refresh = false;
};

// Lock-priority classes; lower value wins contention inside a bank.
enum class Priority { Scrub = 0, Victim = 1, Refresh = 2, Background = 3 };

// Chip services offered to mechanisms.
class MaintContext {
 public:
  virtual ~MaintContext() = default;
  // Attempts to lock the op's regions; on success the chip executes the op and
  // later calls on_op_done / on_op_paused of the calling mechanism.
  virtual bool try_lock(int mech_slot, Priority prio, OpRequest op, Cycle now) = 0;
  virtual const dram::Geometry& geometry() const = 0;
  virtual const dram::TimingParams& timing() const = 0;
  virtual void reserve_row(int bank, int row) = 0;
  virtual void unreserve_row(int bank, int row) = 0;
  virtual std::uint64_t all_regions() const = 0;
};

class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual Source source() const = 0;
  virtual Priority priority() const = 0;
  // Called when the bank's wake time has arrived. Returns the next cycle the
  // mechanism needs to run for this bank (kNever when idle).
  virtual Cycle tick(int bank, Cycle now, MaintContext& ctx) = 0;
  // Accepted controller ACT in this chip. Returns true when the bank needs a
  // tick soon (new victim-refresh work).
  virtual bool on_act(int bank, int row, Cycle now, MaintContext& ctx) {
    (void)bank, (void)row, (void)now, (void)ctx;
    return false;
  }
  virtual void on_op_done(const OpRequest& op, Cycle now, MaintContext& ctx) = 0;
  // The op was paused after `done_rows` rows; the remainder must be re-locked.
  virtual void on_op_paused(const OpRequest& op, std::size_t done_rows, Cycle now) = 0;
  void set_slot(int s) { slot_ = s; }
  int slot() const { return slot_; }

 protected:
  int slot_ = 0;
};

// Victims of an aggressor: rows at distance 1..blast on both sides, clipped.
std::vector<int> victims_of(int row, int blast, int rows_per_bank);

}  // namespace smd::maint
