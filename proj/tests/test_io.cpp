#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <random>
#include <fstream>
#include <sstream>

#include "starsim/config.hpp"
#include "starsim/errors.hpp"
#include "starsim/output.hpp"

using namespace starsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("starsim_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("minimal config fills defaults") {
    SimulationConfig cfg = config_from_json_text(
        R"({"gamma":1.6667,"n_cells":200,"dt":1e-4,"t_end":0.1})");
    CHECK(cfg.physics.gamma == doctest::Approx(1.6667));
    CHECK(cfg.n_cells == 200);
    CHECK(cfg.picard_tol == 1e-10);
    CHECK(cfg.anchors.auto_mode);
    CHECK(cfg.gravity_on);
  }
  SUBCASE("gamma below 6/5 names the missing equilibria") {
    try {
      (void)config_from_json_text(R"({"gamma":1.1,"n_cells":64,"dt":1e-4,"t_end":0.1})");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("no stationary solutions with finite total mass") !=
            std::string::npos);
    }
  }
  SUBCASE("anchor separations are checked against the profile") {
    const char* text = R"({
      "gamma": 1.6666666666666667, "n_cells": 64, "dt": 1e-4, "t_end": 0.01,
      "anchors": {"x0": 0.05, "x1": 0.3, "x2": 0.6, "d": 1.0}
    })";
    try {
      (void)config_from_json_text(text);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("2d < r0") != std::string::npos);
    }
  }
  SUBCASE("malformed JSON raises ParseError") {
    CHECK_THROWS_AS((void)config_from_json_text("{not json"), ParseError);
  }
  SUBCASE("config echo round-trips") {
    SimulationConfig cfg = config_from_json_text(
        R"({"gamma":1.75,"A":2.0,"n_cells":96,"dt":2e-4,"t_end":0.05,"pressure_on":false,"init":"free_expansion"})");
    SimulationConfig again = config_from_json_text(config_to_json(cfg));
    CHECK(again.physics.gamma == cfg.physics.gamma);
    CHECK(again.physics.A == cfg.physics.A);
    CHECK(again.n_cells == cfg.n_cells);
    CHECK(again.dt == cfg.dt);
    CHECK(again.pressure_on == cfg.pressure_on);
    CHECK(config_to_json(again) == config_to_json(cfg));
  }
}

TEST_CASE("malformed configs fail with typed errors only") {
  const std::string base =
      R"({"gamma":1.6667,"n_cells":200,"dt":1e-4,"t_end":0.1,"anchors":"auto"})";
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text = base;
    const int mutations = 1 + trial % 4;
    for (int m = 0; m < mutations; ++m) {
      const std::size_t pos = rng() % text.size();
      const char c = "{}[]:,\"0x9-"[rng() % 12];
      if (rng() % 2)
        text[pos] = c;
      else
        text.insert(pos, 1, c);
    }
    try {
      (void)config_from_json_text(text, false);
    } catch (const SimError&) {
      // ParseError or ValidationError both fine
    }
  }
  CHECK(true);  // reaching here means no foreign exception or crash
}

TEST_CASE("float formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 3.65375374, 12345.678901234567, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("emission") {
  SimulationConfig cfg = config_from_json_text(
      R"({"gamma":1.6666666666666667,"n_cells":64,"dt":1e-3,"t_end":2e-3,"output_every":1,
          "init":"free_expansion","pressure_on":false,"gravity_on":false})");
  RunResult rr = run(cfg);
  REQUIRE(rr.abort_reason.empty());

  TempDir tmp;
  SUBCASE("empty series emits a header-only csv") {
    const std::string path = (tmp.path / "series.csv").string();
    emit_series(path, {});
    const std::string text = slurp(path);
    CHECK(text.find("t,E_L,E_E,E,D,M,mass_residual,bc_residual,R,picard_iters") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
  SUBCASE("snapshot format and sidecar") {
    const std::string path = (tmp.path / "snap_0000.csv").string();
    emit_snapshot(path, rr.final_state);
    const std::string text = slurp(path);
    CHECK(text.rfind("x,rho,u,r,div\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 65);  // header + 64 cells
    const std::string side = slurp(path + ".json");
    CHECK(side.find("mass_residual") != std::string::npos);
  }
  SUBCASE("two emissions are byte-identical") {
    const std::string a = series_csv_text(rr.series);
    RunResult rr2 = run(cfg);
    const std::string b = series_csv_text(rr2.series);
    CHECK(a == b);
  }
  SUBCASE("golden snapshot layout") {
    // frozen miniature state; guards column order and formatting
    LagrangianState st;
    st.x_nodes = {0.0, 0.5, 1.0};
    st.rho_cells = {3.0, 1.5};
    st.u_nodes = {0.0, 0.25, 0.5};
    st.r_nodes = {0.0, 0.0, 0.0};
    radius_update(st);
    const std::string got = snapshot_csv_text(st);
    const std::string want =
        "x,rho,u,r,div\n"
        "0,3,0,0,0.9449407874211548\n"
        "0.5,1.5,0.25,0.7937005259840998,1.4895779220113146\n";
    CHECK(got == want);
  }
  SUBCASE("audit lines are standalone JSON objects") {
    const std::string path = (tmp.path / "audit.jsonl").string();
    emit_audit(path, rr.series);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      CHECK(line.front() == '{');
      CHECK(line.back() == '}');
      CHECK(line.find("k_ledger") != std::string::npos);
      ++lines;
    }
    CHECK(lines == static_cast<int>(rr.series.size()));
  }
  SUBCASE("write_run_outputs produces the documented artifacts") {
    RunManifest manifest;
    manifest.config_echo = config_to_json(cfg);
    manifest.version = version_string();
    manifest.platform = platform_string();
    manifest.started = "2026-01-01T00:00:00Z";
    manifest.finished = "2026-01-01T00:00:01Z";
    const std::string dir = (tmp.path / "run").string();
    {
      DirLock lock(dir);
      write_run_outputs(dir, cfg, rr, manifest, true);
      auto relock = [&] { DirLock second(dir); };
      CHECK_THROWS_AS(relock(), IoError);  // lock is exclusive
    }
    CHECK(fs::exists(fs::path(dir) / "series.csv"));
    CHECK(fs::exists(fs::path(dir) / "summary.json"));
    CHECK(fs::exists(fs::path(dir) / "manifest.json"));
    CHECK(fs::exists(fs::path(dir) / "snap_0000.csv"));
    CHECK(fs::exists(fs::path(dir) / "audit.jsonl"));
    CHECK(!fs::exists(fs::path(dir) / ".lock"));  // released
    const std::string summary = slurp((fs::path(dir) / "summary.json").string());
    for (const char* key : {"schema_version", "abort_reason", "t_final", "R_final",
                            "E_final", "mass_residual_final", "cutoffs"})
      CHECK(summary.find(key) != std::string::npos);
    const std::string manifest_text = slurp((fs::path(dir) / "manifest.json").string());
    for (const char* key : {"config", "version", "platform", "started", "finished"})
      CHECK(manifest_text.find(key) != std::string::npos);
  }
}
