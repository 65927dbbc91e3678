#pragma once

// Batch experiment runner behind the `she` command: YAML configs, dispatch,
// seed derivation, and JSON/CSV result files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "she/profiles.hpp"
#include "she/sigma.hpp"

namespace she {

/// Malformed or invalid configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExitCode : int {
    ok = 0,
    internal = 1,
    config = 2,
    abort_quorum = 3,  ///< More than 1% of replicas aborted.
    assertion = 4,
    io = 5,
    unreliable = 6,  ///< An estimator refused to report (too few samples, overflow).
};

enum class Experiment { simulate, tails, moments, suscept, independence, trichotomy, bounds, kernel_audit };
enum class OutputFormat { csv, json, both };

std::string_view to_string(Experiment e);
std::string_view to_string(OutputFormat f);
Experiment parse_experiment(std::string_view name);  ///< Throws ConfigError.
OutputFormat parse_format(std::string_view name);    ///< Throws ConfigError.

struct ProfileSpec {
    std::string kind = "lambda";  ///< lambda | constant | bump | table
    double lambda = 1.0;
    double level = 1.0;
    double peak = 1.0;
    double halfwidth = 1.0;
    std::string table;  ///< CSV path for kind == table.

    bool operator==(const ProfileSpec&) const = default;
};

InitialProfile make_profile(const ProfileSpec& p);

struct SigmaSpec {
    std::string kind = "linear";  ///< linear | wobble
    double lambda = 1.0;

    bool operator==(const SigmaSpec&) const = default;
};

SigmaFn make_sigma(const SigmaSpec& s);

struct GridSpec {
    double dx = 0.05;
    std::optional<double> dt;  ///< Defaults to dx^2 / 2.
    double T = 0.5;            ///< Observation time for simulate, tails, moments, independence.
    double halfwidth = 0.0;    ///< Per-window half-width; 0 picks 6 sqrt(t) + 1.
    bool clamp_at_zero = false;

    bool operator==(const GridSpec&) const = default;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::simulate;
    std::uint64_t seed = 1;
    std::int64_t n_reps = 1000;
    int parallelism = 0;  ///< 0 means auto.
    std::string output_dir = "results";
    OutputFormat format = OutputFormat::both;
    GridSpec grid;
    ProfileSpec profile;
    SigmaSpec sigma;

    // simulate
    std::vector<double> observe_x{0.0};
    int snapshot_stride = 0;  ///< > 0 writes the trajectory of replica 0.
    // tails
    double epsilon = 0.1;
    std::vector<double> tail_x{7.38905609893065, 14.3919160951779, 28.0316248945261, 54.5981500331442};
    double k_const = 1.0;
    double l_const = 1.0;
    // moments
    double moment_x = 0.0;
    std::vector<int> moment_orders{1, 2, 3};
    // suscept
    double a = 8.0;
    double r = 4.0;
    std::vector<double> suscept_t{0.05, 0.1, 0.2};
    ProfileSpec outside{"lambda", 0.5, 1.0, 1.0, 1.0, {}};
    // independence
    int picard_n = 3;
    std::vector<double> points{0.0, 8.0, 16.0};
    // trichotomy
    std::vector<ProfileSpec> scan_profiles{{"bump", 1.0, 1.0, 1.0, 40.0, {}},
                                           {"constant", 1.0, 1.0, 1.0, 1.0, {}},
                                           {"lambda", 1.0, 1.0, 1.0, 1.0, {}}};
    std::vector<double> scan_t{0.25, 2.0};
    std::vector<double> scan_L{25.0, 50.0, 100.0};
    // bounds
    double a_const = 2.001;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Reads a YAML document; unknown keys are errors. Throws ConfigError.
ExperimentConfig parse_config(std::string_view yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// YAML with the shared fields and the section of the selected experiment.
std::string serialize_config(const ExperimentConfig& c);
nlohmann::json config_to_json(const ExperimentConfig& c);

/// Empty iff run() preconditions hold; each entry names the field and constraint.
std::vector<std::string> validate(const ExperimentConfig& c);

/// Seed of the experiment's noise stream.
std::uint64_t experiment_seed(const ExperimentConfig& c);

struct AssertionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Doubles with 17 significant digits.
std::string format_double(double v);

struct ExperimentResult {
    nlohmann::json statistics;
    std::vector<AssertionResult> assertions;
    CsvTable csv;
    std::int64_t replicas = 0;  ///< Replica runs attempted.
    std::int64_t aborted = 0;
};

/// Runs the experiment without touching the file system. Estimator errors
/// propagate (PreconditionError, ReliabilityError, CapacityError).
ExperimentResult execute(const ExperimentConfig& c);

/// {config, seed, started_at, statistics, assertions}.
nlohmann::json result_document(const ExperimentConfig& c, const ExperimentResult& r, const std::string& started_at);

std::string csv_text(const CsvTable& t);

struct RunReport {
    ExitCode code = ExitCode::ok;
    std::string message;
    std::vector<std::filesystem::path> files;
};

/// validate, execute, write <output_dir>/<experiment>.{json,csv}; never throws.
RunReport run(const ExperimentConfig& c);

}  // namespace she
