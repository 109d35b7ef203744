#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nonlocal/bernstein.hpp"
#include "nonlocal/domain.hpp"
#include "nonlocal/renewal.hpp"

namespace nonlocal::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kCheckFailed = 1, kSchemaError = 2, kNumericalError = 3 };

// Command line values that override the configuration file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> grid;
  std::optional<double> tolerance;
};

struct KernelSettings {
  double r_min = 1e-4;
  double r_max = 1e3;
  int per_decade = 64;
  std::vector<double> z{0.1, 0.5, 1, 2, 10};
};

struct BarrierSettings {
  int points_per_stratum = 2;
  int strata_per_decade = 2;
  double min_depth = 1e-3;
  std::vector<double> radii{0.25, 0.5, 1};
  double max_spread = 3;
};

struct McSettings {
  std::vector<Point> x0;  // default: the domain centre
  double dt = 4e-3;
  std::int64_t n_paths = 20000;
  std::int64_t max_steps = 1000000;
};

struct VerifySettings {
  std::vector<std::string> checks;  // default: all of all_checks()
  int order_trials = 100;
  std::int64_t mc_paths = 20000;
  double mc_dt = 4e-3;
  double mc_allowance = 0.03;
  std::vector<double> half_space_x{0.1, 0.3, 1};
  std::vector<double> subsolution_radii{0.125, 0.25};
  int boundary_points = 10;
  double seminorm_band = 0.2;
  double max_alpha_change = 0.05;
  int harnack_data = 20;
  double harnack_h = 0;  // default 1/64 in 1-d, 1/16 in 2-d
  double harnack_band = 1.5;
  std::int64_t survival_paths = 4000;
  double survival_dt = 4e-4;
  std::int64_t decay_paths = 10000;
  double decay_dt = 2e-3;
  std::vector<double> decay_times{0.5, 1, 2, 3};
};

struct Config {
  json spec_json;
  BernsteinSpec spec;
  json domain_json;
  Domain domain;
  RenewalMode renewal = RenewalMode::ExactStable;
  double h = 0;  // default 1/256 in 1-d, 1/32 in 2-d
  double margin = 0;
  std::string method = "auto";
  std::string f = "-1";
  std::string g = "0";
  double g_far = 0;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  KernelSettings kernel;
  BarrierSettings barrier;
  McSettings mc;
  VerifySettings verify;
};

const std::vector<std::string>& all_checks();

BernsteinSpec parse_spec(const json& j, const std::string& pointer = "/spec");
Domain parse_domain(const json& j, const std::string& pointer = "/domain");

// Validates `j` (unknown keys are errors), fills defaults, applies the
// overrides. Throws SchemaError with a JSON pointer.
Config parse_config(const json& j, const Overrides& over = {});

// Normalised configuration: every field with its resolved value.
json to_json(const Config& c);

// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const json& normalized);

// Manifest with volatile fields (runtimes, threads) removed.
json stable_part(const json& manifest);

// Runs one subcommand. For `report`, config_path names a solve manifest.
// Writes CSVs and manifest.json under out_dir; returns an ExitCode.
int run(const std::string& subcommand, const std::string& config_path, const std::string& out_dir,
        const Overrides& over, std::ostream& log);

// Command line entry point.
int main(int argc, char** argv);

}  // namespace nonlocal::cli
