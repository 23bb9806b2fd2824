#pragma once

#include <string>
#include <vector>

#include "starsim/config.hpp"
#include "starsim/stepper.hpp"

namespace starsim {

// Shortest decimal that round-trips the double.
std::string format_double(double v);

// series.csv: documented fixed column order, one row per recorded step.
void emit_series(const std::string& path, const std::vector<SeriesRow>& rows);
std::string series_csv_text(const std::vector<SeriesRow>& rows);

// snap_XXXX.csv: (x, rho, u, r, div) per cell, node quantities at the cell's
// left node; JSON sidecar <path>.json carries (t, R, mass_residual).
void emit_snapshot(const std::string& path, const LagrangianState& state);
std::string snapshot_csv_text(const LagrangianState& state);

void emit_summary(const std::string& path, const RunResult& result,
                  const RunManifest& manifest);

// Full per-step energy ledger, one JSON object per line.
void emit_audit(const std::string& path, const std::vector<SeriesRow>& rows);

void emit_manifest(const std::string& path, const RunManifest& manifest);

// Exclusive lockfile guarding an output directory; removed on destruction.
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

// Writes all artifacts of a run into dir.
void write_run_outputs(const std::string& dir, const SimulationConfig& cfg,
                       const RunResult& result, const RunManifest& manifest, bool audit);

}  // namespace starsim
