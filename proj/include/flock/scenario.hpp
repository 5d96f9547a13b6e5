#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flock/dynamics.hpp"
#include "flock/hydro.hpp"

namespace flock {

/// Configuration error carrying the offending key ("section.key") and the
/// 1-based line it came from (0 when the key is missing altogether).
class ScenarioError : public std::invalid_argument {
  public:
    ScenarioError(std::string key, std::size_t line, const std::string &what);

    const std::string &key() const { return key_; }
    std::size_t line() const { return line_; }

  private:
    std::string key_;
    std::size_t line_;
};

struct Interval {
    double lo{0.0};
    double hi{1.0};
    bool operator==(const Interval &) const = default;
};

enum class InitialKind { Random, Explicit, TwoGroup, None };

struct InitialSpec {
    InitialKind kind{InitialKind::Random};
    std::size_t dim{2};
    std::size_t n{0};
    std::optional<std::uint64_t> seed;
    Interval position_box{0.0, 10.0};
    Interval velocity_box{-1.0, 1.0};
    std::vector<double> positions;  // explicit kind, agent-major
    std::vector<double> velocities; // explicit kind, agent-major
    std::size_t n1{0};              // two-group kind
    std::size_t n2{0};
    double separation{0.0};         // offset of group 2 along the first axis

    std::size_t agents() const;
    bool operator==(const InitialSpec &) const = default;
};

struct IntegrationSpec {
    double dt{0.0};
    double t_end{0.0};
    Scheme scheme{Scheme::Euler};
    std::size_t snapshot_stride{0};
    double stop_ratio{0.0};
    bool operator==(const IntegrationSpec &) const = default;
};

/// File names inside the output directory; an empty name disables the file.
struct OutputSpec {
    std::string diagnostics{"diagnostics.csv"};
    std::string snapshots{"snapshots.csv"};
    std::string summary{"summary.json"};
    std::string fields{"fields.csv"};
    std::string sweep{"sweep.csv"};
    bool operator==(const OutputSpec &) const = default;
};

struct HydroSpec {
    bool enabled{false};
    double x_min{0.0};
    double x_max{0.0};
    double dx{0.05};
    Boundary boundary{Boundary::Outflow};
    double epsilon{kDefaultSupportThreshold};
    std::size_t field_stride{0};
    std::vector<Bump> bumps;
    bool operator==(const HydroSpec &) const = default;
};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
    bool operator==(const SweepSpec &) const = default;
};

struct LemmaSpec {
    std::size_t cases{1000};
    std::size_t max_n{8};
    std::uint64_t seed{1};
    bool operator==(const LemmaSpec &) const = default;
};

struct Scenario {
    ModelSpec model;
    InitialSpec initial;
    IntegrationSpec integration;
    OutputSpec output;
    HydroSpec hydro;
    std::optional<SweepSpec> sweep;
    LemmaSpec lemma;

    bool operator==(const Scenario &) const = default;
};

/// Parses the sectioned key = value format:
///
///   [model]        model, phi, s, R, table, alpha, beta, leader, gamma, normalization
///   [initial]      kind, dim, N, seed, position_box, velocity_box, positions,
///                  velocities, N1, N2, D
///   [integration]  dt, T, scheme, snapshot_stride, stop_ratio
///   [output]       diagnostics, snapshots, summary, fields, sweep
///   [hydro]        x_min, x_max, dx, boundary, epsilon, field_stride, bumps
///   [sweep]        parameter, values
///   [lemma]        cases, max_n, seed
///
/// '#' starts a comment. Lists are comma separated; positions, velocities and
/// bumps separate entries with ';'. Throws ScenarioError.
Scenario parse_scenario(std::string_view text);

/// Canonical document with every field resolved; doubles use 17 significant
/// digits so parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario &scenario);

/// Resolved (section, key, value) triples in document order.
using ScenarioEntries = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;
ScenarioEntries scenario_entries(const Scenario &scenario);

std::optional<std::string_view> preset(std::string_view name);
std::vector<std::string_view> preset_names();

// ----------------------------------------------------------------------------

/// 64-bit Mersenne twister; uniform doubles from the top 53 bits.
class Rng {
  public:
    static constexpr std::string_view kAlgorithm = "mt19937_64; u = (x >> 11) * 2^-53";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

/// Initial ensemble. Random kinds draw every position coordinate agent by
/// agent, then every velocity coordinate.
AgentEnsemble make_initial(const InitialSpec &spec);

std::vector<std::string_view> sweepable_parameters();

/// Copy of the scenario with one sweepable parameter replaced.
Scenario with_parameter(const Scenario &scenario, std::string_view parameter, double value);

enum class Command { Simulate, Certify, VerifyLemma, Hydro, Sweep, CompareGroups };

std::optional<Command> parse_command(std::string_view name);
std::string_view to_string(Command c);

/// Exit codes of run().
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,       // unexpected error
    kExitConfig = 2,        // ScenarioError
    kExitParameter = 3,     // invalid input or parameter
    kExitStability = 4,     // StabilityError
    kExitNumeric = 5,       // NumericError
    kExitIo = 6,            // output files could not be written
    kExitCheckFailed = 7,   // a verification reported violations
};

/// Runs a command and writes its files into out_dir. Errors are caught and
/// mapped to exit codes; the message goes to stderr.
int run(const Scenario &scenario, Command command, const std::filesystem::path &out_dir,
        bool quiet = false);

} // namespace flock
