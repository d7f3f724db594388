#pragma once

// Experiment orchestration: policy x oracle x instance grids, ratio
// aggregation against the offline optimum, and machine-readable result
// tables and sweep grids.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachesim/instances.hpp"
#include "cachesim/oracle.hpp"
#include "cachesim/policy.hpp"
#include "cachesim/trace.hpp"

namespace cachesim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InstanceSpec {
    enum class Kind { zipf, lower_bound, csv, trace_file };
    Kind kind = Kind::zipf;
    std::string label;

    // zipf
    std::uint32_t length = 0;
    std::uint32_t universe = 0;
    double s = 0;
    std::uint64_t seed = 0;
    // lower_bound
    std::uint32_t lb_k = 0;
    std::uint32_t lb_phases = 0;
    // csv / trace_file
    std::string path;
    std::string column;
    std::uint32_t limit = 25000;
};

struct OutputSpec {
    enum class Format { csv, json };
    std::string path;
    Format format = Format::csv;
};

struct ExperimentConfig {
    std::uint32_t k = 0;
    std::uint32_t repetitions = 10;  // policy seeds per randomized policy
    std::vector<InstanceSpec> instances;
    std::vector<PolicyConfig> policies;
    std::vector<OracleSpec> oracles;
    OutputSpec output;
};

// Relative paths are resolved against $CACHESIM_DATA_DIR when set and the
// path does not exist as given.
std::string resolve_data_path(const std::string& path);

Trace build_instance(const InstanceSpec& spec);

// JSON config file -> ExperimentConfig. Malformed configs raise
// ConfigError; unreadable files raise IoError.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

struct InstanceResult {
    std::string instance;
    std::uint32_t trace_length = 0;
    std::uint64_t opt_cost = 0;
    std::uint32_t reps = 0;
    double mean_misses = 0;
    double mean_ratio = 0;
    double mean_queries = 0;
    double mean_eta = 0;
    double mean_inversions = 0;
};

struct ResultRow {
    std::string policy;
    std::string oracle;
    double mean_ratio = 0;
    double mean_queries = 0;
    double mean_query_fraction = 0;
    double mean_eta = 0;
    double mean_inversions = 0;
    std::vector<InstanceResult> instances;
};

struct ResultTable {
    std::uint32_t k = 0;
    std::uint32_t repetitions = 0;
    std::vector<ResultRow> rows;
};

// Seed derivation for grid cells. Policy seeds vary per (instance,
// repetition); oracle noise seeds are fixed per instance so noise
// realizations pair across policies and repetitions.
std::uint64_t cell_policy_seed(std::uint64_t policy_seed, std::size_t instance_idx,
                               std::uint32_t rep);
std::uint64_t cell_oracle_seed(std::uint64_t oracle_seed, std::size_t instance_idx);

// Runs every (policy, oracle, seed) cell on every non-trivial instance
// (distinct pages >= k), computing the offline optimum once per
// instance. Cells run concurrently; aggregation order is canonical.
ResultTable run_experiment(const ExperimentConfig& config);

struct SweepCell {
    std::uint32_t b = 0;
    double sigma = 0;
    double ratio = 0;
    double stderr_ = 0;
    std::uint32_t samples = 0;
};

// AdaptiveQuery grid over (b, sigma) with lognormal noise; one mean
// ratio per cell over instances x repetitions.
std::vector<SweepCell> sweep_b_sigma(const std::vector<std::uint32_t>& b_values,
                                     const std::vector<double>& sigma_values,
                                     const std::vector<Trace>& traces, std::uint32_t k,
                                     std::uint32_t repetitions, std::uint64_t policy_seed = 0,
                                     std::uint64_t oracle_seed = 0);

// (queries / trace length, queries / misses).
std::pair<double, double> query_budget_report(const SimReport& report, const Trace& trace);

// Stable column order; floats at 6 significant digits; byte-identical
// output for identical tables.
void emit_results(const ResultTable& table, OutputSpec::Format format, std::ostream& out);
void emit_results_file(const ResultTable& table, const OutputSpec& output);
ResultTable parse_results_json(std::istream& in);

void emit_sweep_csv(const std::vector<SweepCell>& cells, std::ostream& out);

// Canonical JSON dump of a report (used for determinism checks).
std::string report_to_json(const SimReport& report);

}  // namespace cachesim
