#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(SMDSIM_PATH) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string capture(const std::string& args) {
  fs::path out = fs::temp_directory_path() / "smdsim_cli_capture.txt";
  std::string cmd = std::string(SMDSIM_PATH) + " " + args + " >" + out.string() + " 2>/dev/null";
  if (std::system(cmd.c_str()) == -1) return {};
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "smdsim_cli_tests";
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

const char* kSmall = R"({"name": "cli", "mode": "%MODE%", %EXTRA%
  "geometry": {"channels": 1, "ranks": 1, "rows_per_bank": 2048, "rows_per_subarray": 32, "regions_per_bank": 16},
  "timing": {"time_scale": 0.015625},
  "run": {"cycles": %CYCLES%},
  "workloads": [%WORKLOADS%]})";

std::string config(const std::string& mode, const std::string& extra, long cycles, const std::string& workloads) {
  std::string s = kSmall;
  auto sub = [&](const std::string& key, const std::string& v) { s.replace(s.find(key), key.size(), v); };
  sub("%MODE%", mode);
  sub("%EXTRA%", extra);
  sub("%CYCLES%", std::to_string(cycles));
  sub("%WORKLOADS%", workloads);
  return s;
}

const std::string kRandom = R"({"gen": "random", "len": 4000, "seed": 3, "footprint": 67108864})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("run") == 2);
    CHECK(run("run --config /nonexistent.json") == 2);
    CHECK(run("run --config x.json --bogus") == 2);
    fs::path bad = scratch() / "bad.json";
    write(bad, R"({"mode": "ddr5"})");
    CHECK(run("run --config " + bad.string()) == 2);
  }

  TEST_CASE("self comparison is neutral") {
    fs::path d = scratch();
    write(d / "fr.json", config("smd", R"("mechanisms": [{"type": "fr"}],)", 150000, kRandom));
    REQUIRE(run("run --config " + (d / "fr.json").string() + " --out " + (d / "a.json").string()) == 0);
    REQUIRE(run("run --config " + (d / "fr.json").string() + " --out " + (d / "b.json").string()) == 0);
    auto j = nlohmann::json::parse(
        capture("compare --baseline " + (d / "a.json").string() + " --candidate " + (d / "b.json").string()));
    CHECK(j.at("speedup").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("energy_delta_pj").get<double>() == doctest::Approx(0.0));
  }

  TEST_CASE("audit of a refresh-disabled log exits 1") {
    fs::path d = scratch();
    // long enough for the refresh audit to reach a verdict (two windows)
    write(d / "noref.json", config("ddr4-baseline", R"("refresh": false,)", 1700000, kRandom));
    write(d / "base.json", config("ddr4-baseline", "", 1700000, kRandom));
    CHECK(run("run --config " + (d / "noref.json").string() + " --out " + (d / "n.json").string() + " --log " +
              (d / "noref.csv").string()) == 1);
    CHECK(run("audit --log " + (d / "noref.csv").string() + " --config " + (d / "noref.json").string()) == 1);
    CHECK(run("run --config " + (d / "base.json").string() + " --out " + (d / "r.json").string() + " --log " +
              (d / "base.csv").string()) == 0);
    CHECK(run("audit --log " + (d / "base.csv").string() + " --config " + (d / "base.json").string()) == 0);
    std::ifstream in(d / "base.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "cycle,kind,channel,rank,bank,row,origin");
  }

  TEST_CASE("generated hammer trace feeds a run") {
    fs::path d = scratch();
    write(d / "geo.json", config("smd", R"("mechanisms": [{"type": "drp", "act_max": 512}],)", 300000, kRandom));
    REQUIRE(run("gen-trace hammer --config " + (d / "geo.json").string() + " --len 20000 --bank 2 --victim 700 --out " +
                (d / "h.trace").string()) == 0);
    std::string wl = R"({"trace": ")" + (d / "h.trace").string() + R"("})";
    write(d / "drp.json", config("smd", R"("mechanisms": [{"type": "drp", "act_max": 512}],)", 300000, wl));
    CHECK(run("run --config " + (d / "drp.json").string() + " --out " + (d / "h.json").string()) == 0);
    auto rep = nlohmann::json::parse(std::ifstream(d / "h.json"));
    CHECK(rep.at("acts").get<long>() > 1000);
  }

  TEST_CASE("gen-trace rejects an unknown generator") {
    CHECK(run("gen-trace zigzag --out " + (scratch() / "z.trace").string()) == 2);
  }

  TEST_CASE("several configs run as a sweep") {
    fs::path d = scratch();
    write(d / "s1.json", config("smd", R"("mechanisms": [{"type": "fr"}],)", 80000, kRandom));
    write(d / "s2.json", config("ddr4-baseline", "", 80000, kRandom));
    fs::remove_all(d / "sweep");
    CHECK(run("run --config " + (d / "s1.json").string() + " --config " + (d / "s2.json").string() +
              " --out-dir " + (d / "sweep").string()) == 0);
    CHECK(fs::exists(d / "sweep" / "s1.json"));
    CHECK(fs::exists(d / "sweep" / "s2.json"));
  }
}
