#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfginv/forward.hpp"
#include "mfginv/inverse.hpp"
#include "mfginv/model.hpp"

namespace mfginv::cli {

enum class Mode { Forward, GenerateMeasurement, Eci, Bri, BriStaticRestart, Heci, Linpara, Diagnostics };

std::string to_string(Mode m);
std::optional<Mode> parse_mode(const std::string& s);
bool is_inverse_mode(Mode m);

/// A named builtin with numeric parameters, e.g. {"name": "gaussian", "mu": 0}.
struct NamedSpec {
  std::string name;
  BuiltinParams params;
};

/// How a spatial field such as q0 or q_hat is produced.
struct FieldSpec {
  enum class Kind { Constant, Random, Potential };
  Kind kind = Kind::Constant;
  double value = 0.0;
  // Random: uniform on [low, high]; unset bounds fall back to the truth range
  // (or [-1, 1] without truth) at resolve time.
  std::optional<double> low;
  std::optional<double> high;
  NamedSpec potential;
};

struct ProblemSpec {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double T = 1.0;
  double nu = 0.1;
  std::string hamiltonian = "quadratic";
  std::optional<double> nu_num;  // unset: dx
  NamedSpec interaction{"local_identity", {}};
  std::string terminal = "zero";  // zero | neg_rho0
  NamedSpec rho0{"uniform", {}};
  std::optional<NamedSpec> potential;
};

struct MeasurementSpec {
  enum class Source { Generate, File };
  Source source = Source::Generate;
  std::filesystem::path path;  // phi0 CSV when source is File
  FicPlayParams forward;       // generation solver
};

struct ExperimentConfig {
  std::string name = "experiment";
  Mode mode = Mode::Eci;
  std::uint64_t seed = 0;
  ProblemSpec problem;
  int nx = 100;
  int nt = 100;
  FicPlayParams forward;
  InverseConfig inverse;  // q0 left unset; resolved from q0_spec
  FieldSpec q0_spec;
  FieldSpec q_hat_spec;  // diagnostics mode
  MeasurementSpec measurement;
  std::filesystem::path output_dir = "out";
};

/// Every violated constraint, one message each.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Parses and validates a config document. A relative measurement path is
/// resolved against `base_dir`; output_dir stays relative to the working
/// directory. Unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// `mode_override` replaces the file's mode before validation.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& mode_override = std::nullopt);

/// Fully resolved parameter set with every default written out.
nlohmann::json to_json(const ExperimentConfig& cfg);

Grid build_grid(const ExperimentConfig& cfg);
/// The problem on the config grid; carries the truth potential when given.
MfgProblem build_problem(const ExperimentConfig& cfg);

/// Uniform draws from a counter-based generator: value i depends only on
/// (seed, i).
double uniform_draw(std::uint64_t seed, std::uint64_t index);

/// Materializes a FieldSpec on the problem grid.
SpatialField resolve_field(const FieldSpec& spec, const MfgProblem& problem, std::uint64_t seed);

std::string hex64(std::uint64_t v);
/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace mfginv::cli
