#include "smd/simkit/report.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace smd::simkit {

using nlohmann::json;

bool Report::audits_pass() const {
  for (const auto& a : audits)
    if (a.verdict == Verdict::Fail) return false;
  return finished;
}

const AuditResult* Report::audit(const std::string& name) const {
  for (const auto& a : audits)
    if (a.name == name) return &a;
  return nullptr;
}

namespace {

Verdict verdict_from(const std::string& s) {
  for (Verdict v : {Verdict::Pass, Verdict::Fail, Verdict::Inconclusive, Verdict::Report, Verdict::Skipped})
    if (s == verdict_name(v)) return v;
  throw ConfigError("report: unknown verdict '" + s + "'");
}

json energy_json(const EnergyBreakdown& e) {
  return json{{"act_pj", e.act},
              {"pre_pj", e.pre},
              {"rd_pj", e.rd},
              {"wr_pj", e.wr},
              {"ref_pj", e.ref},
              {"maint_refresh_pj", e.maint_refresh},
              {"maint_scrub_pj", e.maint_scrub},
              {"background_pj", e.background},
              {"total_pj", e.total()}};
}

}  // namespace

std::string to_json(const Report& r, int indent) {
  json j;
  j["name"] = r.name;
  j["mode"] = r.mode;
  j["cycles"] = r.cycles;
  j["finished"] = r.finished;
  json cores = json::array();
  for (const auto& c : r.cores)
    cores.push_back({{"core", c.core}, {"ipc", c.ipc}, {"retired", c.retired}, {"loads", c.loads}, {"stores", c.stores}});
  j["cores"] = cores;
  j["throughput"] = r.throughput;
  j["alone_ipc"] = r.alone_ipc;
  j["weighted_speedup"] = r.weighted_speedup;
  j["acts"] = r.acts;
  j["nacks"] = r.nacks;
  j["partial_nacks"] = r.partial_nacks;
  j["nack_rate"] = r.nack_rate;
  j["retries"] = r.retries;
  j["retry_slips"] = r.retry_slips;
  j["reads"] = r.reads;
  j["writes"] = r.writes;
  j["refs"] = r.refs;
  j["para_acts"] = r.para_acts;
  j["mc_scrub_rows"] = r.mc_scrub_rows;
  j["max_refresh_debt"] = r.max_refresh_debt;
  j["maint_ops"] = r.maint_ops;
  j["maint_rows"] = r.maint_rows;
  j["latency"] = {{"completed", r.requests_completed},
                  {"outstanding", r.requests_outstanding},
                  {"mean", r.latency_mean},
                  {"p99", r.latency_p99},
                  {"max", r.latency_max}};
  j["energy"] = energy_json(r.energy);
  json audits = json::array();
  for (const auto& a : r.audits)
    audits.push_back({{"name", a.name},
                      {"verdict", verdict_name(a.verdict)},
                      {"violations", a.violations},
                      {"samples", a.samples},
                      {"metrics", a.metrics}});
  j["audits"] = audits;
  std::ostringstream h;
  h << std::hex << r.log_hash;
  j["log_hash"] = h.str();
  j["events"] = r.events;
  return j.dump(indent);
}

Report report_from_json(const std::string& text) {
  Report r;
  try {
    json j = json::parse(text);
    r.name = j.at("name").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.cycles = j.at("cycles").get<Cycle>();
    r.finished = j.at("finished").get<bool>();
    for (const auto& c : j.at("cores"))
      r.cores.push_back(CoreReport{c.at("core").get<int>(), c.at("ipc").get<double>(), c.at("retired").get<std::int64_t>(),
                                   c.at("loads").get<std::int64_t>(), c.at("stores").get<std::int64_t>()});
    r.throughput = j.at("throughput").get<double>();
    r.alone_ipc = j.at("alone_ipc").get<std::vector<double>>();
    r.weighted_speedup = j.at("weighted_speedup").get<double>();
    r.acts = j.at("acts").get<std::int64_t>();
    r.nacks = j.at("nacks").get<std::int64_t>();
    r.partial_nacks = j.at("partial_nacks").get<std::int64_t>();
    r.nack_rate = j.at("nack_rate").get<double>();
    r.retries = j.at("retries").get<std::int64_t>();
    r.retry_slips = j.at("retry_slips").get<std::int64_t>();
    r.reads = j.at("reads").get<std::int64_t>();
    r.writes = j.at("writes").get<std::int64_t>();
    r.refs = j.at("refs").get<std::int64_t>();
    r.para_acts = j.at("para_acts").get<std::int64_t>();
    r.mc_scrub_rows = j.at("mc_scrub_rows").get<std::int64_t>();
    r.max_refresh_debt = j.at("max_refresh_debt").get<std::int64_t>();
    r.maint_ops = j.at("maint_ops").get<std::int64_t>();
    r.maint_rows = j.at("maint_rows").get<std::map<std::string, std::int64_t>>();
    const json& l = j.at("latency");
    r.requests_completed = l.at("completed").get<std::int64_t>();
    r.requests_outstanding = l.at("outstanding").get<std::int64_t>();
    r.latency_mean = l.at("mean").get<double>();
    r.latency_p99 = l.at("p99").get<double>();
    r.latency_max = l.at("max").get<double>();
    const json& e = j.at("energy");
    r.energy.act = e.at("act_pj").get<double>();
    r.energy.pre = e.at("pre_pj").get<double>();
    r.energy.rd = e.at("rd_pj").get<double>();
    r.energy.wr = e.at("wr_pj").get<double>();
    r.energy.ref = e.at("ref_pj").get<double>();
    r.energy.maint_refresh = e.at("maint_refresh_pj").get<double>();
    r.energy.maint_scrub = e.at("maint_scrub_pj").get<double>();
    r.energy.background = e.at("background_pj").get<double>();
    for (const auto& a : j.at("audits")) {
      AuditResult ar;
      ar.name = a.at("name").get<std::string>();
      ar.verdict = verdict_from(a.at("verdict").get<std::string>());
      ar.violations = a.at("violations").get<std::int64_t>();
      ar.samples = a.at("samples").get<std::vector<std::string>>();
      ar.metrics = a.at("metrics").get<std::map<std::string, double>>();
      r.audits.push_back(ar);
    }
    r.log_hash = std::stoull(j.at("log_hash").get<std::string>(), nullptr, 16);
    r.events = j.at("events").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

Report load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

void save_report(const std::string& path, const Report& r) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report " + path);
  out << to_json(r) << '\n';
}

double weighted_speedup(const std::vector<double>& run, const std::vector<double>& alone) {
  if (run.size() != alone.size()) throw ConfigError("weighted speedup: core counts differ");
  double s = 0;
  for (std::size_t i = 0; i < run.size(); ++i) {
    if (!(alone[i] > 0)) throw ConfigError("weighted speedup: alone IPC must be positive");
    s += run[i] / alone[i];
  }
  return s;
}

Comparison compare(const Report& base, const Report& cand) {
  if (base.cores.size() != cand.cores.size()) throw ConfigError("compare: reports have different core counts");
  Comparison c;
  if (!base.cores.empty()) {
    double s = 0;
    for (std::size_t i = 0; i < base.cores.size(); ++i) {
      if (!(base.cores[i].ipc > 0)) throw ConfigError("compare: baseline core has zero IPC");
      s += cand.cores[i].ipc / base.cores[i].ipc;
    }
    c.speedup = s / static_cast<double>(base.cores.size());
  }
  c.throughput_ratio = base.throughput > 0 ? cand.throughput / base.throughput : 0;
  c.energy_delta = cand.energy.total() - base.energy.total();
  c.energy_ratio = base.energy.total() > 0 ? cand.energy.total() / base.energy.total() : 0;
  c.nack_rate_delta = cand.nack_rate - base.nack_rate;
  return c;
}

std::string to_json(const Comparison& c, int indent) {
  json j{{"speedup", c.speedup},
         {"throughput_ratio", c.throughput_ratio},
         {"energy_delta_pj", c.energy_delta},
         {"energy_ratio", c.energy_ratio},
         {"nack_rate_delta", c.nack_rate_delta}};
  return j.dump(indent);
}

}  // namespace smd::simkit
