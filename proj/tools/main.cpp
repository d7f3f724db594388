// cachesim CLI: experiment runner, lower-bound trace generator,
// AdaptiveQuery (b, sigma) sweeps, and CSV trace ingestion.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cachesim/harness.hpp"
#include "cachesim/instances.hpp"

namespace {

int cmd_run(const std::string& config_path) {
    const cachesim::ExperimentConfig config = cachesim::load_experiment_config(config_path);
    const cachesim::ResultTable table = cachesim::run_experiment(config);
    if (!config.output.path.empty()) {
        cachesim::emit_results_file(table, config.output);
        std::cerr << "wrote " << config.output.path << "\n";
    }
    cachesim::emit_results(table, cachesim::OutputSpec::Format::csv, std::cout);
    return 0;
}

int cmd_lb_gen(std::uint32_t k, std::uint32_t phases, std::uint64_t seed, const std::string& out) {
    const cachesim::Trace trace = cachesim::lower_bound_instance({k, phases, seed});
    cachesim::write_trace_file(trace, out);
    std::cerr << "wrote " << out << " (" << trace.length() << " requests, "
              << trace.universe_size() << " pages)\n";
    return 0;
}

int cmd_sweep(const std::vector<std::uint32_t>& bs, const std::vector<double>& sigmas,
              const std::vector<std::string>& trace_paths, std::uint32_t k,
              std::uint32_t repetitions, std::uint64_t seed, const std::string& out) {
    std::vector<cachesim::Trace> traces;
    for (const auto& path : trace_paths) {
        try {
            traces.push_back(cachesim::load_trace_file(cachesim::resolve_data_path(path)));
        } catch (const std::exception& e) {
            throw cachesim::IoError(e.what());
        }
        if (traces.back().universe_size() < k) {
            std::cerr << "skipping trivial trace " << path << "\n";
            traces.pop_back();
        }
    }
    const auto cells = cachesim::sweep_b_sigma(bs, sigmas, traces, k, repetitions, seed, seed);
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw cachesim::IoError("cannot write sweep output: " + out);
        cachesim::emit_sweep_csv(cells, f);
        std::cerr << "wrote " << out << "\n";
    }
    cachesim::emit_sweep_csv(cells, std::cout);
    return 0;
}

int cmd_ingest(const std::string& csv, const std::string& column, std::uint32_t limit,
               const std::string& out) {
    cachesim::IngestionSpec spec;
    spec.path = cachesim::resolve_data_path(csv);
    spec.column = column;
    spec.limit = limit;
    const cachesim::IngestResult result = cachesim::ingest_csv(spec);
    if (result.skipped_rows > 0)
        std::cerr << "warning: skipped " << result.skipped_rows << " malformed rows\n";
    cachesim::write_trace_file(result.trace, out);
    cachesim::write_intern_map(result.keys, out + ".map.json");
    std::cout << "requests=" << result.trace.length()
              << " distinct=" << result.trace.universe_size() << "\n";
    std::cerr << "wrote " << out << " and " << out << ".map.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-driven cache replacement simulator with query-budgeted predictions"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
    run->add_option("--config", config_path, "Experiment config file")->required();

    std::uint32_t lb_k = 8, lb_phases = 10;
    std::uint64_t lb_seed = 0;
    std::string lb_out = "lb_trace.txt";
    auto* lb = app.add_subcommand("lb-gen", "Generate an adversarial lower-bound trace");
    lb->add_option("--k", lb_k, "Cache size (>= 2)")->required();
    lb->add_option("--phases", lb_phases, "Number of phases")->required();
    lb->add_option("--seed", lb_seed, "Permutation seed");
    lb->add_option("--out", lb_out, "Output trace file")->required();

    std::vector<std::uint32_t> sweep_b{1, 2, 4, 8};
    std::vector<double> sweep_sigma{0};
    std::vector<std::string> sweep_traces;
    std::uint32_t sweep_k = 500, sweep_reps = 10;
    std::uint64_t sweep_seed = 0;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "AdaptiveQuery (b, sigma) ratio grid");
    sweep->add_option("--b", sweep_b, "Queries per miss values")->delimiter(',');
    sweep->add_option("--sigma", sweep_sigma, "Lognormal noise levels")->delimiter(',');
    sweep->add_option("--traces", sweep_traces, "Trace files (one PageId per line)")
        ->delimiter(',')
        ->required();
    sweep->add_option("--k", sweep_k, "Cache size");
    sweep->add_option("--reps", sweep_reps, "Repetitions per cell");
    sweep->add_option("--seed", sweep_seed, "Base seed");
    sweep->add_option("--out", sweep_out, "Output CSV file");

    std::string ingest_csv_path, ingest_column, ingest_out = "trace.txt";
    std::uint32_t ingest_limit = 25000;
    auto* ingest = app.add_subcommand("ingest", "Intern a CSV event log into a trace file");
    ingest->add_option("--csv", ingest_csv_path, "CSV file with a header row")->required();
    ingest->add_option("--column", ingest_column, "Header name of the page-key column")->required();
    ingest->add_option("--limit", ingest_limit, "Event truncation count");
    ingest->add_option("--out", ingest_out, "Output trace file");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path);
        if (lb->parsed()) return cmd_lb_gen(lb_k, lb_phases, lb_seed, lb_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_b, sweep_sigma, sweep_traces, sweep_k, sweep_reps, sweep_seed,
                             sweep_out);
        if (ingest->parsed()) return cmd_ingest(ingest_csv_path, ingest_column, ingest_limit,
                                                ingest_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const cachesim::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cachesim::IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cachesim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
