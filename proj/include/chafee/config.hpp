#pragma once

// Experiment configuration: an INI document with a top-level `command` and
// `seed`, and sections [grid], [potential], [noise], [sim], [sweep], [output].
// Parsing collects every violation before failing.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/error.hpp"
#include "chafee/exit.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

enum class Command { Spectrum, Simulate, SteadyStates, FtleSweep, EwsSweep, ExitSweep, SyncCheck };

std::string_view to_string(Command c) noexcept;
std::optional<Command> parse_command(std::string_view name) noexcept;

/// `1.25`, `lambda1`, `lambda1-0.1`, `lambda1+0.05`. Kept verbatim in the
/// config and resolved once the spectrum is known.
struct AlphaToken {
  std::string text;
  double offset = 0.0;
  bool relative = false;

  static std::optional<AlphaToken> parse(std::string_view text);
  double resolve(double lambda1) const noexcept { return relative ? lambda1 + offset : offset; }
  bool operator==(const AlphaToken& o) const noexcept {
    return relative == o.relative && offset == o.offset;
  }
};

struct NoiseBlock {
  enum class Kind { Identity, Random, Explicit };
  Kind kind = Kind::Random;
  std::size_t M = 10;
  std::size_t D = 10;
  std::uint64_t random_seed = 1;
  double q_all = 1.0;           // identity
  std::vector<double> q;        // explicit
  std::vector<double> mix;      // explicit, D x D row-major

  CovarianceSpec resolve() const;
  bool operator==(const NoiseBlock&) const = default;
};

struct SweepBlock {
  std::vector<AlphaToken> alpha;  // constant-alpha ladder
  bool ramp = false;              // drift instead of a ladder (exit-sweep)
  AlphaToken ramp_alpha0;
  double ramp_eps = 0.0;
  std::optional<AlphaToken> ramp_alpha_max;
  std::vector<double> h;
  std::size_t k = 1;              // FTLE order
  std::size_t ensemble = 10;
  std::size_t modes = 20;         // spectrum rows
  std::vector<std::size_t> mode_index{1};  // EWS k1 = k2 ladder
  std::vector<std::size_t> points;         // EWS pointwise grid indices (1-based)
  std::size_t m_trunc = 30;
  Model model = Model::Nonlinear;
  double s = 0.4;                 // exit Sobolev exponent
  std::size_t sobolev_modes = 0;  // 0 = all
  int k_max = 2;
  double gap = 0.1;               // sync-check initial offset
  double tol = 0.02;              // FTLE bound tolerance

  bool operator==(const SweepBlock&) const = default;
};

struct ExperimentConfig {
  Command command = Command::Spectrum;
  std::uint64_t seed = 1;
  double L = 0.0;
  std::size_t N = 0;
  std::string potential = "cos3plus1";
  NoiseBlock noise;
  SimConfig sim;
  SweepBlock sweep;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;

  Grid grid() const { return Grid::make(L, N); }
  Potential make_potential() const { return Potential::from_descriptor(grid(), potential); }
};

/// Every violation found while parsing or validating.
class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
  std::vector<std::string> violations_;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Normalized form: every key, fixed order, doubles with round-trip precision.
std::string serialize(const ExperimentConfig& cfg);

/// Built-in parameter sets named fig1..fig5.
std::optional<ExperimentConfig> profile(std::string_view name);
std::vector<std::string> profile_names();

/// Applies the keys present in `text` on top of `base`; `command` may then be
/// omitted from the text.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base);

}  // namespace chafee
