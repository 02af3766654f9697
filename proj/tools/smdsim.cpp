// smdsim: command-line driver for the DDR4/SMD simulator.
//   smdsim run --config c.json [--out report.json] [--log events.csv]
//   smdsim run --config a.json --config b.json ... --out-dir reports/ [--jobs N]
//   smdsim compare --baseline a.json --candidate b.json
//   smdsim audit --log events.csv --config c.json
//   smdsim gen-trace <random|stream|mix|hammer|weak-rows|faults> [options] --out file
// Exit status: 0 pass, 1 audit failure, 2 usage or config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "smd/simkit/simulator.hpp"
#include "smd/simkit/sweep.hpp"
#include "smd/workload/generators.hpp"

namespace {

using namespace smd;
using namespace smd::simkit;

constexpr int kPass = 0;
constexpr int kAuditFail = 1;
constexpr int kUsage = 2;

void print_audits(const std::vector<AuditResult>& audits, std::ostream& os) {
  for (const auto& a : audits) {
    os << "audit " << a.name << ": " << verdict_name(a.verdict);
    if (a.violations) os << " (" << a.violations << " violations)";
    os << "\n";
    for (const auto& s : a.samples) os << "  " << s << "\n";
  }
}

bool any_fail(const std::vector<AuditResult>& audits) {
  for (const auto& a : audits)
    if (a.verdict == Verdict::Fail) return true;
  return false;
}

int cmd_run(const std::string& config, const std::string& out, const std::string& log) {
  SimConfig c = load_config(config);
  std::ofstream csv;
  if (!log.empty()) {
    csv.open(log);
    if (!csv) throw ConfigError("cannot write " + log);
  }
  Report r = run_config(c, log.empty() ? nullptr : &csv);
  if (out.empty())
    std::cout << to_json(r) << "\n";
  else
    save_report(out, r);
  print_audits(r.audits, std::cerr);
  std::cerr << "cycles " << r.cycles << "  throughput " << r.throughput << "  nack_rate " << r.nack_rate
            << "  energy_pj " << r.energy.total() << "  hash " << std::hex << r.log_hash << std::dec << "\n";
  return any_fail(r.audits) ? kAuditFail : kPass;
}

// Several configurations run side by side; one report per config in out_dir.
int cmd_run_many(const std::vector<std::string>& configs, const std::string& out_dir, int jobs) {
  if (out_dir.empty()) throw ConfigError("run with several configs needs --out-dir");
  std::vector<SimConfig> cs;
  for (const auto& f : configs) cs.push_back(load_config(f));
  std::vector<Report> rs = run_sweep(cs, jobs);
  std::filesystem::create_directories(out_dir);
  bool fail = false;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    auto path = std::filesystem::path(out_dir) / std::filesystem::path(configs[i]).filename();
    save_report(path.string(), rs[i]);
    bool f = any_fail(rs[i].audits);
    fail = fail || f;
    std::cerr << configs[i] << ": throughput " << rs[i].throughput << "  energy_pj " << rs[i].energy.total()
              << (f ? "  AUDIT FAIL" : "") << "\n";
  }
  return fail ? kAuditFail : kPass;
}

int cmd_compare(const std::string& base, const std::string& cand) {
  Comparison c = compare(load_report(base), load_report(cand));
  std::cout << to_json(c) << "\n";
  return kPass;
}

int cmd_audit(const std::string& log, const std::string& config, Cycle end) {
  SimConfig c = load_config(config);
  std::ifstream in(log);
  if (!in) throw ConfigError("cannot read " + log);
  std::vector<dram::CommandEvent> events = dram::read_csv_log(in);
  auto auditors = make_auditors(c, build_weak_rows(c), build_fault_map(c));
  Cycle last = 0;
  for (const auto& e : events) {
    for (auto& a : auditors) a->on_event(e);
    last = std::max(last, e.cycle + 1);
  }
  if (end <= 0) end = std::max(last, c.cycles);
  std::vector<AuditResult> res;
  for (auto& a : auditors) {
    a->finish(end);
    res.push_back(a->result());
  }
  print_audits(res, std::cout);
  return any_fail(res) ? kAuditFail : kPass;
}

struct GenArgs {
  std::string out;
  std::string config;
  std::size_t len = 10000;
  std::uint64_t seed = 1;
  std::uint64_t footprint = 1ULL << 30;
  std::uint64_t base = 0;
  std::uint64_t stride = 64;
  double stream_frac = 0.5;
  std::int64_t bubbles = 0;
  double write_frac = 0.0;
  std::string pattern = "double";
  int channel = 0, rank = 0, bank = 0, victim = 1024, aggressors = 8;
  double fraction = 0.001;
  int rows = 0;
  std::size_t count = 16;
  int codewords = 128;
};

int cmd_gen(const std::string& kind, const GenArgs& a) {
  dram::Geometry g;
  std::string order = "row,bank,rank,column,channel";
  if (!a.config.empty()) {
    SimConfig c = load_config(a.config);
    g = c.geometry;
    order = c.address_order;
  }
  workload::AccessShape shape{a.bubbles, a.write_frac};
  workload::Trace t;
  if (kind == "random") {
    t = workload::gen_random(a.len, a.seed, a.footprint, shape, a.base);
  } else if (kind == "stream") {
    t = workload::gen_stream(a.len, a.stride, a.base, shape, a.seed);
  } else if (kind == "mix") {
    t = workload::gen_mix(a.len, a.seed, a.footprint, a.stream_frac, a.stride, shape, a.base);
  } else if (kind == "hammer") {
    workload::HammerSpec h;
    h.pattern = workload::parse_hammer_pattern(a.pattern);
    h.channel = a.channel;
    h.rank = a.rank;
    h.bank = a.bank;
    h.victim = a.victim;
    h.aggressors = a.aggressors;
    h.accesses = a.len;
    h.bubbles = a.bubbles;
    t = workload::gen_hammer(h, g, dram::AddressMapper(g, order));
  } else if (kind == "weak-rows") {
    workload::write_weak_rows_file(a.out, workload::gen_weak_rows(a.seed, a.fraction, a.rows > 0 ? a.rows : g.rows_per_bank));
    return kPass;
  } else if (kind == "faults") {
    auto f = workload::gen_faults(a.seed, a.count, g.banks(), a.rows > 0 ? a.rows : g.rows_per_bank, a.codewords);
    workload::write_fault_map_file(a.out, f);
    return kPass;
  } else {
    throw ConfigError("unknown generator '" + kind + "'");
  }
  workload::write_trace_file(a.out, t);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDR4 / Self-Managing DRAM simulator"};
  app.require_subcommand(1);

  std::string config, out, log, base, cand, out_dir;
  std::vector<std::string> configs;
  int jobs = 0;
  Cycle end = 0;
  auto* run = app.add_subcommand("run", "simulate one configuration");
  run->add_option("--config", configs, "configuration file (repeat to run several)")->required();
  run->add_option("--out", out, "report file (default: stdout)");
  run->add_option("--log", log, "event-log CSV file");
  run->add_option("--out-dir", out_dir, "report directory when several configs are given");
  run->add_option("--jobs", jobs, "worker threads for several configs (default: all cores)");

  auto* cmp = app.add_subcommand("compare", "compare two reports");
  cmp->add_option("--baseline", base, "baseline report")->required();
  cmp->add_option("--candidate", cand, "candidate report")->required();

  auto* aud = app.add_subcommand("audit", "replay an event log through the auditors");
  aud->add_option("--log", log, "event-log CSV file")->required();
  aud->add_option("--config", config, "configuration used for the run")->required();
  aud->add_option("--end", end, "end cycle of the run (default: last event or run.cycles)");

  GenArgs ga;
  std::string kind;
  auto* gen = app.add_subcommand("gen-trace", "generate a trace, weak-row file or fault map");
  gen->add_option("generator", kind, "random | stream | mix | hammer | weak-rows | faults")->required();
  gen->add_option("--out", ga.out, "output file")->required();
  gen->add_option("--config", ga.config, "take geometry and address order from this config");
  gen->add_option("--len", ga.len, "entries (accesses for hammer)");
  gen->add_option("--seed", ga.seed);
  gen->add_option("--footprint", ga.footprint);
  gen->add_option("--base", ga.base);
  gen->add_option("--stride", ga.stride);
  gen->add_option("--stream-frac", ga.stream_frac);
  gen->add_option("--bubbles", ga.bubbles);
  gen->add_option("--write-frac", ga.write_frac);
  gen->add_option("--pattern", ga.pattern, "hammer: single | double | many");
  gen->add_option("--channel", ga.channel);
  gen->add_option("--rank", ga.rank);
  gen->add_option("--bank", ga.bank, "flat bank index");
  gen->add_option("--victim", ga.victim);
  gen->add_option("--aggressors", ga.aggressors);
  gen->add_option("--fraction", ga.fraction, "weak-rows: weak fraction");
  gen->add_option("--rows", ga.rows, "rows per bank (default: geometry)");
  gen->add_option("--count", ga.count, "faults: number of faulty codewords");
  gen->add_option("--codewords", ga.codewords, "faults: codewords per row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*run) {
      if (configs.size() == 1) return cmd_run(configs[0], out, log);
      if (!out.empty() || !log.empty()) throw ConfigError("--out and --log take a single config");
      return cmd_run_many(configs, out_dir, jobs);
    }
    if (*cmp) return cmd_compare(base, cand);
    if (*aud) return cmd_audit(log, config, end);
    if (*gen) return cmd_gen(kind, ga);
  } catch (const smd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const smd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const smd::RangeError& e) {
    std::cerr << "range error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant violated: " << e.what() << "\n";
    return kAuditFail;
  }
  return kUsage;
}
