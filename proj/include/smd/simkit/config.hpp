#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smd/chip/smd_chip.hpp"
#include "smd/dram/geometry.hpp"
#include "smd/dram/timing.hpp"
#include "smd/maint/mechanisms.hpp"
#include "smd/mc/controller.hpp"
#include "smd/simkit/energy.hpp"
#include "smd/workload/core.hpp"
#include "smd/workload/generators.hpp"

namespace smd::simkit {

// One core's traffic: a trace file or a generator.
struct WorkloadSpec {
  std::string trace_file;  // when set, the generator fields are ignored
  std::string gen = "random";  // random | stream | mix | hammer
  std::size_t len = 10000;
  std::uint64_t seed = 1;
  std::uint64_t footprint = 1ULL << 30;
  std::uint64_t base = 0;
  std::uint64_t stride = 64;
  double stream_frac = 0.5;
  workload::AccessShape shape;
  workload::HammerSpec hammer;
};

struct WeakRowSpec {
  double fraction = 0.001;
  std::uint64_t seed = 7;
  std::string file;  // one row id per line, applied to every bank
};

struct ScrubSpec {
  maint::ScrubParams params;
  double period_s = 0;  // whole-memory scrub period (time_scale applies)
  std::string fault_file;
  std::size_t fault_count = 0;
  std::uint64_t fault_seed = 11;
};

struct AuditSpec {
  bool timing = true;
  bool protocol = true;
  bool retry = true;
  bool refresh = true;
  std::string rowhammer = "auto";  // auto | enforce | report | off
  bool scrub = true;
  std::uint32_t act_max = 512;  // RowHammer bound; defaults to the DRP threshold
  int blast = 1;
};

enum class Divergence { Lockstep, WorstCase, Custom };

struct SimConfig {
  std::string name = "run";
  dram::Geometry geometry;
  std::string speed_grade = "DDR4-3200";
  double refresh_period_ms = 32;
  dram::TimingParams timing;  // resolved defaults plus overrides
  std::string address_order = "row,bank,rank,column,channel";

  bool smd = false;
  std::optional<maint::RefreshParams> refresh_mech;  // FR or VR
  WeakRowSpec weak_rows;
  std::optional<maint::VictimParams> prp;
  std::optional<maint::DrpParams> drp;
  std::optional<ScrubSpec> ms;
  std::optional<maint::AdversaryParams> adversary;

  Divergence divergence = Divergence::Lockstep;
  std::vector<Cycle> offsets;
  chip::ChipConfig chip;
  mc::ControllerConfig mc;
  double mc_scrub_period_s = 0;

  workload::CoreParams core;
  std::vector<WorkloadSpec> workloads;

  Cycle cycles = 0;          // fixed run length; 0: run until every trace is consumed
  Cycle max_cycles = 2000000000;
  std::uint64_t seed = 1;
  bool alone_runs = false;  // single-core runs for weighted speedup

  EnergyParams energy;
  AuditSpec audits;
};

// Parses JSON text; relative file names resolve against base_dir.
SimConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
SimConfig load_config(const std::string& path);
void validate(const SimConfig& c);

}  // namespace smd::simkit
