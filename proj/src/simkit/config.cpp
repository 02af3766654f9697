#include "smd/simkit/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace smd::simkit {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void get(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string resolve(const std::string& base, const std::string& f) {
  if (f.empty()) return f;
  std::filesystem::path p(f);
  return p.is_absolute() ? f : (std::filesystem::path(base) / p).string();
}

void parse_geometry(const json& j, dram::Geometry& g) {
  const std::string w = "geometry";
  only_keys(j, {"channels", "ranks", "chips_per_rank", "bankgroups", "banks_per_group", "rows_per_bank",
                "rows_per_subarray", "subarrays_per_region", "regions_per_bank", "row_size", "cacheline"},
            w);
  get(j, "channels", g.channels, w);
  get(j, "ranks", g.ranks, w);
  get(j, "chips_per_rank", g.chips_per_rank, w);
  get(j, "bankgroups", g.bankgroups, w);
  get(j, "banks_per_group", g.banks_per_group, w);
  get(j, "rows_per_bank", g.rows_per_bank, w);
  get(j, "rows_per_subarray", g.rows_per_subarray, w);
  get(j, "subarrays_per_region", g.subarrays_per_region, w);
  get(j, "row_size", g.row_size, w);
  get(j, "cacheline", g.cacheline, w);
  if (j.contains("regions_per_bank")) {
    if (j.contains("subarrays_per_region"))
      throw ConfigError("geometry: give regions_per_bank or subarrays_per_region, not both");
    int n = j.at("regions_per_bank").get<int>();
    if (n <= 0 || g.rows_per_subarray <= 0 || g.subarrays_per_bank() % n != 0)
      throw ConfigError("geometry: regions_per_bank must divide the subarray count");
    g.subarrays_per_region = g.subarrays_per_bank() / n;
  }
}

void apply_timing_overrides(const json& j, dram::TimingParams& t) {
  const std::string w = "timing.overrides";
  std::pair<const char*, Cycle*> fields[] = {
      {"tRCD", &t.tRCD},   {"tRP", &t.tRP},     {"tRAS", &t.tRAS}, {"tCL", &t.tCL},
      {"tCWL", &t.tCWL},   {"tBL", &t.tBL},     {"tCCD_L", &t.tCCD_L}, {"tWTR", &t.tWTR},
      {"tRTP", &t.tRTP},   {"tWR", &t.tWR},     {"tRRD", &t.tRRD}, {"tRFC", &t.tRFC},
      {"tREFI", &t.tREFI}, {"ARI", &t.ARI},     {"tNACK", &t.tNACK}, {"max_open", &t.max_open}};
  std::set<std::string> allowed;
  for (auto& f : fields) allowed.insert(f.first);
  only_keys(j, allowed, w);
  for (auto& f : fields) get(j, f.first, *f.second, w);
  if (j.contains("tREFI")) {
    t.tREFW = t.tREFI * t.refs_per_window;
    if (!j.contains("max_open")) t.max_open = 9 * t.tREFI;
  }
}

workload::AccessShape parse_shape(const json& j, const std::string& w) {
  workload::AccessShape s;
  get(j, "bubbles", s.bubbles, w);
  get(j, "write_frac", s.write_frac, w);
  return s;
}

WorkloadSpec parse_workload(const json& j, const std::string& base, const dram::Geometry& g, int idx) {
  std::string w = "workloads[" + std::to_string(idx) + "]";
  if (j.is_string()) {
    WorkloadSpec s;
    s.trace_file = resolve(base, j.get<std::string>());
    return s;
  }
  only_keys(j, {"trace", "gen", "len", "seed", "footprint", "base", "stride", "stream_frac", "bubbles",
                "write_frac", "pattern", "channel", "rank", "bank", "victim", "aggressors", "accesses"},
            w);
  WorkloadSpec s;
  if (j.contains("trace")) {
    s.trace_file = resolve(base, j.at("trace").get<std::string>());
    return s;
  }
  get(j, "gen", s.gen, w);
  get(j, "len", s.len, w);
  get(j, "seed", s.seed, w);
  get(j, "footprint", s.footprint, w);
  get(j, "base", s.base, w);
  get(j, "stride", s.stride, w);
  get(j, "stream_frac", s.stream_frac, w);
  s.shape = parse_shape(j, w);
  if (s.gen == "hammer") {
    std::string pat = "double";
    get(j, "pattern", pat, w);
    s.hammer.pattern = workload::parse_hammer_pattern(pat);
    get(j, "channel", s.hammer.channel, w);
    get(j, "rank", s.hammer.rank, w);
    get(j, "bank", s.hammer.bank, w);
    get(j, "victim", s.hammer.victim, w);
    get(j, "aggressors", s.hammer.aggressors, w);
    get(j, "accesses", s.hammer.accesses, w);
    s.hammer.bubbles = s.shape.bubbles;
    if (s.hammer.channel >= g.channels || s.hammer.rank >= g.ranks || s.hammer.bank >= g.banks())
      throw ConfigError(w + ": hammer target outside the geometry");
  } else if (s.gen != "random" && s.gen != "stream" && s.gen != "mix") {
    throw ConfigError(w + ": unknown generator '" + s.gen + "'");
  }
  return s;
}

void parse_mechanism(const json& j, SimConfig& c, const std::string& base, int idx) {
  std::string w = "mechanisms[" + std::to_string(idx) + "]";
  if (!j.is_object() || !j.contains("type")) throw ConfigError(w + ": needs a type");
  std::string type = j.at("type").get<std::string>();
  if (type == "fr" || type == "vr") {
    only_keys(j, {"type", "rg", "max_pending", "vr_factor", "bloom_bits", "bloom_hashes", "bloom_seed",
                  "weak_fraction", "weak_seed", "weak_rows_file"},
              w);
    if (c.refresh_mech) throw ConfigError(w + ": at most one refresh mechanism");
    maint::RefreshParams p;
    p.variable = type == "vr";
    get(j, "rg", p.rg, w);
    get(j, "max_pending", p.max_pending, w);
    get(j, "vr_factor", p.vr_factor, w);
    get(j, "bloom_bits", p.bloom_bits, w);
    get(j, "bloom_hashes", p.bloom_hashes, w);
    get(j, "bloom_seed", p.bloom_seed, w);
    get(j, "weak_fraction", c.weak_rows.fraction, w);
    get(j, "weak_seed", c.weak_rows.seed, w);
    if (j.contains("weak_rows_file")) c.weak_rows.file = resolve(base, j.at("weak_rows_file").get<std::string>());
    c.refresh_mech = p;
  } else if (type == "prp" || type == "prp+") {
    only_keys(j, {"type", "p_mark", "blast", "seed", "act_max", "l_rtw", "cbf_counters", "cbf_hashes"}, w);
    if (c.prp) throw ConfigError(w + ": PRP given twice");
    maint::VictimParams p;
    p.plus = type == "prp+";
    p.seed = c.seed;
    get(j, "p_mark", p.p_mark, w);
    get(j, "blast", p.blast, w);
    get(j, "seed", p.seed, w);
    get(j, "act_max", p.act_max, w);
    get(j, "l_rtw", p.l_rtw, w);
    get(j, "cbf_counters", p.cbf_counters, w);
    get(j, "cbf_hashes", p.cbf_hashes, w);
    c.prp = p;
  } else if (type == "drp") {
    only_keys(j, {"type", "act_max", "entries", "blast"}, w);
    if (c.drp) throw ConfigError(w + ": DRP given twice");
    maint::DrpParams p;
    get(j, "act_max", p.act_max, w);
    get(j, "entries", p.entries, w);
    get(j, "blast", p.blast, w);
    c.drp = p;
  } else if (type == "ms") {
    only_keys(j, {"type", "scrub_period_s", "t_scrub", "codewords", "wb_cycles", "max_pending", "fault_file",
                  "fault_count", "fault_seed"},
              w);
    if (c.ms) throw ConfigError(w + ": MS given twice");
    ScrubSpec s;
    get(j, "scrub_period_s", s.period_s, w);
    get(j, "t_scrub", s.params.t_scrub, w);
    get(j, "codewords", s.params.codewords, w);
    get(j, "wb_cycles", s.params.wb_cycles, w);
    get(j, "max_pending", s.params.max_pending, w);
    get(j, "fault_count", s.fault_count, w);
    get(j, "fault_seed", s.fault_seed, w);
    if (j.contains("fault_file")) s.fault_file = resolve(base, j.at("fault_file").get<std::string>());
    c.ms = s;
  } else if (type == "adversary") {
    only_keys(j, {"type", "op_cycles", "banks", "regions", "start", "max_ops"}, w);
    if (c.adversary) throw ConfigError(w + ": adversary given twice");
    maint::AdversaryParams p;
    get(j, "op_cycles", p.op_cycles, w);
    get(j, "banks", p.banks, w);
    get(j, "regions", p.regions, w);
    get(j, "start", p.start, w);
    get(j, "max_ops", p.max_ops, w);
    c.adversary = p;
  } else {
    throw ConfigError(w + ": unknown mechanism type '" + type + "'");
  }
}

}  // namespace

SimConfig parse_config(const std::string& text, const std::string& base) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string w = "config";
  only_keys(j, {"name", "geometry", "timing", "mode", "refresh", "mechanisms", "divergence", "policy",
                "hybrid_n", "pause_policy", "bitline", "concurrent_maintenance", "baselines", "scheduler",
                "core", "workloads", "run", "seed", "energy", "audits", "address_order"},
            w);
  SimConfig c;
  get(j, "name", c.name, w);
  get(j, "seed", c.seed, w);
  get(j, "address_order", c.address_order, w);
  if (j.contains("geometry")) parse_geometry(j.at("geometry"), c.geometry);

  double time_scale = 1.0;
  json overrides = json::object();
  if (j.contains("timing")) {
    const json& t = j.at("timing");
    only_keys(t, {"speed_grade", "refresh_period_ms", "time_scale", "overrides"}, "timing");
    get(t, "speed_grade", c.speed_grade, "timing");
    get(t, "refresh_period_ms", c.refresh_period_ms, "timing");
    get(t, "time_scale", time_scale, "timing");
    if (t.contains("overrides")) overrides = t.at("overrides");
  }
  c.timing = dram::default_timing(c.speed_grade, c.refresh_period_ms, time_scale);
  apply_timing_overrides(overrides, c.timing);

  std::string mode = "ddr4-baseline";
  get(j, "mode", mode, w);
  if (mode == "smd")
    c.smd = true;
  else if (mode != "ddr4-baseline")
    throw ConfigError("mode must be 'ddr4-baseline' or 'smd'");
  get(j, "refresh", c.mc.refresh, w);

  if (j.contains("mechanisms")) {
    const json& m = j.at("mechanisms");
    if (!m.is_array()) throw ConfigError("mechanisms: expected a list");
    for (std::size_t i = 0; i < m.size(); ++i) parse_mechanism(m[i], c, base, static_cast<int>(i));
  }

  if (j.contains("divergence")) {
    const json& d = j.at("divergence");
    if (d.is_string()) {
      std::string s = d.get<std::string>();
      if (s == "lockstep")
        c.divergence = Divergence::Lockstep;
      else if (s == "worst-case")
        c.divergence = Divergence::WorstCase;
      else
        throw ConfigError("divergence must be lockstep, worst-case or {\"offsets\": [...]}");
    } else {
      only_keys(d, {"offsets"}, "divergence");
      c.divergence = Divergence::Custom;
      get(d, "offsets", c.offsets, "divergence");
    }
  }
  std::string policy = "wait";
  get(j, "policy", policy, w);
  if (policy == "wait")
    c.mc.policy = mc::DivergencePolicy::Wait;
  else if (policy == "precharge")
    c.mc.policy = mc::DivergencePolicy::Precharge;
  else if (policy == "hybrid")
    c.mc.policy = mc::DivergencePolicy::Hybrid;
  else
    throw ConfigError("policy must be wait, precharge or hybrid");
  get(j, "hybrid_n", c.mc.hybrid_n, w);
  get(j, "pause_policy", c.chip.pause_policy, w);
  get(j, "concurrent_maintenance", c.chip.concurrent_maintenance, w);
  std::string bitline = "open";
  get(j, "bitline", bitline, w);
  if (bitline == "open")
    c.chip.bitline = chip::Bitline::Open;
  else if (bitline == "folded")
    c.chip.bitline = chip::Bitline::Folded;
  else
    throw ConfigError("bitline must be open or folded");

  if (j.contains("baselines")) {
    const json& b = j.at("baselines");
    only_keys(b, {"mc_para", "mc_scrub"}, "baselines");
    if (b.contains("mc_para")) {
      const json& p = b.at("mc_para");
      only_keys(p, {"p", "blast"}, "baselines.mc_para");
      c.mc.para_p = 0.01;
      get(p, "p", c.mc.para_p, "baselines.mc_para");
      get(p, "blast", c.mc.para_blast, "baselines.mc_para");
    }
    if (b.contains("mc_scrub")) {
      const json& p = b.at("mc_scrub");
      only_keys(p, {"scrub_period_s", "row_interval", "slots"}, "baselines.mc_scrub");
      get(p, "scrub_period_s", c.mc_scrub_period_s, "baselines.mc_scrub");
      get(p, "row_interval", c.mc.scrub_row_interval, "baselines.mc_scrub");
      get(p, "slots", c.mc.scrub_slots, "baselines.mc_scrub");
    }
  }
  if (j.contains("scheduler")) {
    const json& s = j.at("scheduler");
    const std::string ws = "scheduler";
    only_keys(s, {"cap", "read_queue", "write_queue", "drain_high", "drain_low", "row_timeout",
                  "enforce_max_open", "retry_margin", "max_debt"},
              ws);
    get(s, "cap", c.mc.cap, ws);
    get(s, "read_queue", c.mc.read_queue, ws);
    get(s, "write_queue", c.mc.write_queue, ws);
    get(s, "drain_high", c.mc.drain_high, ws);
    get(s, "drain_low", c.mc.drain_low, ws);
    get(s, "row_timeout", c.mc.row_timeout, ws);
    get(s, "enforce_max_open", c.mc.enforce_max_open, ws);
    get(s, "retry_margin", c.mc.retry_margin, ws);
    get(s, "max_debt", c.mc.max_debt, ws);
  }
  if (j.contains("core")) {
    const json& s = j.at("core");
    only_keys(s, {"window", "width", "mshrs", "loop"}, "core");
    get(s, "window", c.core.window, "core");
    get(s, "width", c.core.width, "core");
    get(s, "mshrs", c.core.mshrs, "core");
    get(s, "loop", c.core.loop, "core");
  }
  if (j.contains("workloads")) {
    const json& ws = j.at("workloads");
    if (!ws.is_array()) throw ConfigError("workloads: expected a list");
    for (std::size_t i = 0; i < ws.size(); ++i)
      c.workloads.push_back(parse_workload(ws[i], base, c.geometry, static_cast<int>(i)));
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    only_keys(r, {"cycles", "max_cycles", "alone_runs"}, "run");
    get(r, "cycles", c.cycles, "run");
    get(r, "max_cycles", c.max_cycles, "run");
    get(r, "alone_runs", c.alone_runs, "run");
  }

  IddParams idd;
  if (j.contains("energy")) {
    const json& e = j.at("energy");
    only_keys(e, {"idd", "pricing"}, "energy");
    if (e.contains("idd")) {
      const json& d = e.at("idd");
      only_keys(d, {"vdd", "idd0", "idd2n", "idd3n", "idd4r", "idd4w", "idd5b"}, "energy.idd");
      get(d, "vdd", idd.vdd, "energy.idd");
      get(d, "idd0", idd.idd0, "energy.idd");
      get(d, "idd2n", idd.idd2n, "energy.idd");
      get(d, "idd3n", idd.idd3n, "energy.idd");
      get(d, "idd4r", idd.idd4r, "energy.idd");
      get(d, "idd4w", idd.idd4w, "energy.idd");
      get(d, "idd5b", idd.idd5b, "energy.idd");
    }
    c.energy = energy_from_idd(idd, c.timing);
    get(e, "pricing", c.energy.maint_pricing, "energy");
  } else {
    c.energy = energy_from_idd(idd, c.timing);
  }

  if (j.contains("audits")) {
    const json& a = j.at("audits");
    only_keys(a, {"timing", "protocol", "retry", "refresh", "rowhammer", "scrub", "act_max", "blast"}, "audits");
    get(a, "timing", c.audits.timing, "audits");
    get(a, "protocol", c.audits.protocol, "audits");
    get(a, "retry", c.audits.retry, "audits");
    get(a, "refresh", c.audits.refresh, "audits");
    if (a.contains("rowhammer")) {
      const json& rh = a.at("rowhammer");
      if (rh.is_boolean())
        c.audits.rowhammer = rh.get<bool>() ? "auto" : "off";
      else
        get(a, "rowhammer", c.audits.rowhammer, "audits");
      const auto& m = c.audits.rowhammer;
      if (m != "auto" && m != "enforce" && m != "report" && m != "off")
        throw ConfigError("audits.rowhammer must be auto, enforce, report or off");
    }
    get(a, "scrub", c.audits.scrub, "audits");
    get(a, "act_max", c.audits.act_max, "audits");
    get(a, "blast", c.audits.blast, "audits");
    if (c.drp && !a.contains("act_max")) c.audits.act_max = c.drp->act_max;
    if (c.drp && !a.contains("blast")) c.audits.blast = c.drp->blast;
  } else if (c.drp) {
    c.audits.act_max = c.drp->act_max;
    c.audits.blast = c.drp->blast;
  }

  c.mc.smd = c.smd;
  c.mc.seed = c.seed;
  c.chip.codewords_per_row = c.ms ? c.ms->params.codewords : c.chip.codewords_per_row;
  if (c.ms) c.chip.scrub_wb_cycles = c.ms->params.wb_cycles;
  if (c.ms && c.ms->params.t_scrub == 0) {
    double period = c.ms->period_s > 0 ? c.ms->period_s : 300.0;
    c.ms->params.t_scrub = maint::scrub_tick_from_period(period, c.geometry, c.timing);
  }
  if (c.mc_scrub_period_s > 0 && c.mc.scrub_row_interval == 0)
    c.mc.scrub_row_interval = maint::scrub_tick_from_period(c.mc_scrub_period_s, c.geometry, c.timing);
  validate(c);
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(ss.str(), dir.empty() ? "." : dir);
}

void validate(const SimConfig& c) {
  c.geometry.validate();
  dram::validate(c.timing);
  validate(c.energy);
  bool any_mech = c.refresh_mech || c.prp || c.drp || c.ms || c.adversary;
  if (!c.smd && any_mech) throw ConfigError("in-DRAM mechanisms need mode 'smd'");
  if (c.smd && (c.mc.para_p > 0 || c.mc.scrub_row_interval > 0))
    throw ConfigError("MC-PARA and MC-scrub are DDR4-baseline options");
  if (c.divergence != Divergence::Lockstep && !c.smd) throw ConfigError("divergence needs mode 'smd'");
  if (c.divergence == Divergence::Custom && static_cast<int>(c.offsets.size()) != c.geometry.chips_per_rank)
    throw ConfigError("divergence offsets: one per chip");
  if (c.mc.para_p < 0 || c.mc.para_p > 1) throw ConfigError("mc_para.p must be in [0,1]");
  if (c.mc.drain_low > c.mc.drain_high) throw ConfigError("scheduler: drain_low above drain_high");
  if (c.cycles < 0 || c.max_cycles <= 0) throw ConfigError("run: cycle counts must be positive");
  if (c.cycles == 0 && c.core.loop && !c.workloads.empty())
    throw ConfigError("run: looping traces need a fixed cycle count");
  if (c.cycles == 0 && c.workloads.empty()) throw ConfigError("run: nothing to do without cycles or workloads");
}

}  // namespace smd::simkit
