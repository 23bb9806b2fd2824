#pragma once

#include <string>

#include "starsim/stepper.hpp"

namespace starsim {

// Reads, validates and default-fills a simulation config from a JSON file.
// With deep = true (default) explicit anchors are also checked against the
// equilibrium profile's radius map.
SimulationConfig parse_config(const std::string& path, bool deep = true);

SimulationConfig config_from_json_text(const std::string& text, bool deep = true);

// Fully-resolved echo of a config; parsing it again reproduces the run.
std::string config_to_json(const SimulationConfig& cfg);

struct RunManifest {
  std::string config_echo;  // resolved JSON text
  std::string version;
  std::string platform;
  std::string started;   // ISO-8601 wall time
  std::string finished;
  std::string abort_reason;
};

std::string version_string();
std::string platform_string();
std::string iso_now();

}  // namespace starsim
