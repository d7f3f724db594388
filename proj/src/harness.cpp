#include "cachesim/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "cachesim/rng.hpp"

namespace cachesim {

using nlohmann::json;

namespace {

// 6 significant digits, as emitted.
double g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(xs.size() - 1);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
    const char* dir = std::getenv("CACHESIM_DATA_DIR");
    if (dir == nullptr || *dir == '\0') return path;
    return (fs::path(dir) / path).string();
}

Trace build_instance(const InstanceSpec& spec) {
    switch (spec.kind) {
        case InstanceSpec::Kind::zipf: return zipf_trace(spec.length, spec.universe, spec.s, spec.seed);
        case InstanceSpec::Kind::lower_bound:
            return lower_bound_instance({spec.lb_k, spec.lb_phases, spec.seed});
        case InstanceSpec::Kind::csv: {
            try {
                return ingest_csv({resolve_data_path(spec.path), spec.column, spec.limit, 0}).trace;
            } catch (const IngestError& e) {
                throw IoError(e.what());
            }
        }
        case InstanceSpec::Kind::trace_file: {
            try {
                return load_trace_file(resolve_data_path(spec.path));
            } catch (const std::exception& e) {
                throw IoError(e.what());
            }
        }
    }
    throw ConfigError("unknown instance kind");
}

namespace {

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "FiF") return PolicyKind::fif;
    if (name == "RandomMarker") return PolicyKind::random_marker;
    if (name == "LRU") return PolicyKind::lru;
    if (name == "BlindOracle") return PolicyKind::blind_oracle;
    if (name == "LVMarker") return PolicyKind::lv_marker;
    if (name == "RohatgiMarker") return PolicyKind::rohatgi_marker;
    if (name == "RobustOracle") return PolicyKind::robust_oracle;
    if (name == "NaiveEviction") return PolicyKind::naive_eviction;
    if (name == "AdaptiveQuery") return PolicyKind::adaptive_query;
    throw ConfigError("unknown policy: " + name);
}

OracleKind parse_oracle_kind(const std::string& name) {
    if (name == "perfect") return OracleKind::perfect;
    if (name == "lognormal") return OracleKind::lognormal;
    if (name == "mean_interval") return OracleKind::mean_interval;
    throw ConfigError("unknown oracle kind: " + name);
}

InstanceSpec parse_instance(const json& j) {
    InstanceSpec spec;
    const std::string type = j.at("type").get<std::string>();
    if (type == "zipf") {
        spec.kind = InstanceSpec::Kind::zipf;
        spec.length = j.at("length").get<std::uint32_t>();
        spec.universe = j.at("universe").get<std::uint32_t>();
        spec.s = j.value("s", 0.0);
        spec.seed = j.value("seed", 0ull);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "zipf-L%u-U%u-s%g-seed%llu", spec.length, spec.universe,
                      spec.s, static_cast<unsigned long long>(spec.seed));
        spec.label = buf;
    } else if (type == "lower_bound") {
        spec.kind = InstanceSpec::Kind::lower_bound;
        spec.lb_k = j.at("k").get<std::uint32_t>();
        spec.lb_phases = j.at("phases").get<std::uint32_t>();
        spec.seed = j.value("seed", 0ull);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "lb-k%u-H%u-seed%llu", spec.lb_k, spec.lb_phases,
                      static_cast<unsigned long long>(spec.seed));
        spec.label = buf;
    } else if (type == "csv") {
        spec.kind = InstanceSpec::Kind::csv;
        spec.path = j.at("path").get<std::string>();
        spec.column = j.at("column").get<std::string>();
        spec.limit = j.value("limit", 25000u);
        spec.label = std::filesystem::path(spec.path).filename().string();
    } else if (type == "trace") {
        spec.kind = InstanceSpec::Kind::trace_file;
        spec.path = j.at("path").get<std::string>();
        spec.label = std::filesystem::path(spec.path).filename().string();
    } else {
        throw ConfigError("unknown instance type: " + type);
    }
    if (!j.contains("label") || !j.at("label").is_string()) return spec;
    spec.label = j.at("label").get<std::string>();
    return spec;
}

PolicyConfig parse_policy(const json& j) {
    PolicyConfig cfg;
    cfg.policy = parse_policy_kind(j.at("policy").get<std::string>());
    cfg.b = j.value("b", 0u);
    cfg.epsilon = j.value("epsilon", 0.0);
    cfg.fallback_threshold = j.value("fallback_threshold", -1.0);
    cfg.lv_threshold = j.value("lv_threshold", -1.0);
    cfg.combiner_gamma = j.value("gamma", 2.0);
    cfg.seed = j.value("seed", 0ull);
    return cfg;
}

OracleSpec parse_oracle(const json& j) {
    OracleSpec spec;
    spec.kind = parse_oracle_kind(j.at("kind").get<std::string>());
    spec.sigma = j.value("sigma", 0.0);
    spec.seed = j.value("seed", 0ull);
    spec.resample = j.value("resample", false);
    if (spec.sigma < 0) throw ConfigError("sigma must be non-negative");
    return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.k = j.at("k").get<std::uint32_t>();
        cfg.repetitions = j.value("repetitions", 10u);
        if (cfg.k < 1) throw ConfigError("k must be positive");
        if (cfg.repetitions < 1) throw ConfigError("repetitions must be positive");
        for (const auto& ji : j.at("instances")) cfg.instances.push_back(parse_instance(ji));
        if (cfg.instances.empty()) throw ConfigError("no instances configured");
        for (const auto& jp : j.value("policies", json::array()))
            cfg.policies.push_back(parse_policy(jp));
        if (j.contains("oracles")) {
            for (const auto& jo : j.at("oracles")) cfg.oracles.push_back(parse_oracle(jo));
        }
        if (cfg.oracles.empty()) cfg.oracles.push_back(OracleSpec{});
        for (const auto& pc : cfg.policies) validate_policy_config(pc, cfg.k);
        if (j.contains("output")) {
            const auto& jo = j.at("output");
            cfg.output.path = jo.value("path", std::string{});
            const std::string fmt = jo.value("format", std::string{"csv"});
            if (fmt == "csv") {
                cfg.output.format = OutputSpec::Format::csv;
            } else if (fmt == "json") {
                cfg.output.format = OutputSpec::Format::json;
            } else {
                throw ConfigError("unknown output format: " + fmt);
            }
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(resolve_data_path(path));
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::uint64_t cell_policy_seed(std::uint64_t policy_seed, std::size_t instance_idx,
                               std::uint32_t rep) {
    return derive_seed(policy_seed, instance_idx, rep);
}

std::uint64_t cell_oracle_seed(std::uint64_t oracle_seed, std::size_t instance_idx) {
    return derive_seed(oracle_seed, instance_idx, 0x0a0c1eULL);
}

ResultTable run_experiment(const ExperimentConfig& config) {
    if (config.k < 1) throw ConfigError("k must be positive");
    if (config.repetitions < 1) throw ConfigError("repetitions must be positive");
    if (config.instances.empty()) throw ConfigError("no instances configured");
    for (const auto& pc : config.policies) {
        try {
            validate_policy_config(pc, config.k);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    struct LoadedInstance {
        std::string label;
        Trace trace;
        std::uint64_t opt_cost = 0;
    };
    std::vector<LoadedInstance> kept;
    for (const auto& spec : config.instances) {
        Trace tr = build_instance(spec);
        if (tr.universe_size() < config.k) continue;  // trivial: everything fits
        kept.push_back({spec.label, std::move(tr), 0});
    }
    if (kept.empty()) throw ConfigError("no non-trivial instances");

    parallel_for(kept.size(), [&](std::size_t i) {
        kept[i].opt_cost =
            simulate(PolicyConfig::make(PolicyKind::fif), kept[i].trace, config.k, OracleSpec{})
                .misses;
    });

    struct Cell {
        std::size_t policy, oracle, instance;
        std::uint32_t rep;
    };
    struct CellOut {
        std::uint64_t misses = 0;
        std::uint64_t queries = 0;
        double eta = 0;
        std::uint64_t inversions = 0;
    };
    std::vector<Cell> cells;
    for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
        const std::uint32_t reps =
            policy_is_randomized(config.policies[pi].policy) ? config.repetitions : 1;
        for (std::size_t oi = 0; oi < config.oracles.size(); ++oi)
            for (std::size_t ii = 0; ii < kept.size(); ++ii)
                for (std::uint32_t r = 0; r < reps; ++r) cells.push_back({pi, oi, ii, r});
    }
    std::vector<CellOut> outs(cells.size());
    parallel_for(cells.size(), [&](std::size_t ci) {
        const Cell& c = cells[ci];
        PolicyConfig pc = config.policies[c.policy];
        pc.seed = cell_policy_seed(pc.seed, c.instance, c.rep);
        OracleSpec os = config.oracles[c.oracle];
        os.seed = cell_oracle_seed(os.seed, c.instance);
        SimReport rep = simulate(pc, kept[c.instance].trace, config.k, os);
        outs[ci] = {rep.misses, rep.queries, rep.eta, rep.inversions};
    });

    ResultTable table;
    table.k = config.k;
    table.repetitions = config.repetitions;
    for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
        for (std::size_t oi = 0; oi < config.oracles.size(); ++oi) {
            ResultRow row;
            row.policy = policy_label(config.policies[pi]);
            row.oracle = oracle_label(config.oracles[oi]);
            std::vector<double> ratios, queries, fractions, etas, inversions;
            for (std::size_t ii = 0; ii < kept.size(); ++ii) {
                InstanceResult ir;
                ir.instance = kept[ii].label;
                ir.trace_length = kept[ii].trace.length();
                ir.opt_cost = kept[ii].opt_cost;
                std::vector<double> misses, q, e, inv;
                for (std::size_t ci = 0; ci < cells.size(); ++ci) {
                    const Cell& c = cells[ci];
                    if (c.policy != pi || c.oracle != oi || c.instance != ii) continue;
                    misses.push_back(static_cast<double>(outs[ci].misses));
                    q.push_back(static_cast<double>(outs[ci].queries));
                    e.push_back(outs[ci].eta);
                    inv.push_back(static_cast<double>(outs[ci].inversions));
                }
                ir.reps = static_cast<std::uint32_t>(misses.size());
                ir.mean_misses = mean_of(misses);
                ir.mean_ratio = ir.mean_misses / static_cast<double>(ir.opt_cost);
                ir.mean_queries = mean_of(q);
                ir.mean_eta = mean_of(e);
                ir.mean_inversions = mean_of(inv);
                row.instances.push_back(ir);
                ratios.push_back(ir.mean_ratio);
                queries.push_back(ir.mean_queries);
                fractions.push_back(ir.mean_queries / static_cast<double>(ir.trace_length));
                etas.push_back(ir.mean_eta);
                inversions.push_back(ir.mean_inversions);
            }
            row.mean_ratio = mean_of(ratios);
            row.mean_queries = mean_of(queries);
            row.mean_query_fraction = mean_of(fractions);
            row.mean_eta = mean_of(etas);
            row.mean_inversions = mean_of(inversions);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::vector<SweepCell> sweep_b_sigma(const std::vector<std::uint32_t>& b_values,
                                     const std::vector<double>& sigma_values,
                                     const std::vector<Trace>& traces, std::uint32_t k,
                                     std::uint32_t repetitions, std::uint64_t policy_seed,
                                     std::uint64_t oracle_seed) {
    if (b_values.empty() || sigma_values.empty()) throw ConfigError("empty sweep grid");
    if (traces.empty()) throw ConfigError("no non-trivial instances");

    std::vector<std::uint64_t> opts(traces.size());
    parallel_for(traces.size(), [&](std::size_t i) {
        opts[i] = simulate(PolicyConfig::make(PolicyKind::fif), traces[i], k, OracleSpec{}).misses;
    });

    struct Run {
        std::size_t bi, si, ti;
        std::uint32_t rep;
    };
    std::vector<Run> runs;
    for (std::size_t bi = 0; bi < b_values.size(); ++bi)
        for (std::size_t si = 0; si < sigma_values.size(); ++si)
            for (std::size_t ti = 0; ti < traces.size(); ++ti)
                for (std::uint32_t r = 0; r < repetitions; ++r) runs.push_back({bi, si, ti, r});

    std::vector<double> ratios(runs.size());
    parallel_for(runs.size(), [&](std::size_t ri) {
        const Run& run = runs[ri];
        PolicyConfig pc = PolicyConfig::make(PolicyKind::adaptive_query);
        pc.b = b_values[run.bi];
        pc.seed = cell_policy_seed(policy_seed, run.ti, run.rep);
        OracleSpec os;
        os.kind = OracleKind::lognormal;
        os.sigma = sigma_values[run.si];
        os.seed = cell_oracle_seed(oracle_seed, run.ti);
        const SimReport rep = simulate(pc, traces[run.ti], k, os);
        ratios[ri] = static_cast<double>(rep.misses) / static_cast<double>(opts[run.ti]);
    });

    std::vector<SweepCell> cells;
    for (std::size_t bi = 0; bi < b_values.size(); ++bi) {
        for (std::size_t si = 0; si < sigma_values.size(); ++si) {
            std::vector<double> samples;
            for (std::size_t ri = 0; ri < runs.size(); ++ri)
                if (runs[ri].bi == bi && runs[ri].si == si) samples.push_back(ratios[ri]);
            SweepCell cell;
            cell.b = b_values[bi];
            cell.sigma = sigma_values[si];
            cell.ratio = mean_of(samples);
            cell.stderr_ = stderr_of(samples);
            cell.samples = static_cast<std::uint32_t>(samples.size());
            cells.push_back(cell);
        }
    }
    return cells;
}

std::pair<double, double> query_budget_report(const SimReport& report, const Trace& trace) {
    const double fraction =
        static_cast<double>(report.queries) / static_cast<double>(trace.length());
    const double per_miss = report.misses == 0 ? 0.0
                                               : static_cast<double>(report.queries) /
                                                     static_cast<double>(report.misses);
    return {fraction, per_miss};
}

namespace {

json table_to_json(const ResultTable& table) {
    json j;
    j["schema"] = 1;
    j["k"] = table.k;
    j["repetitions"] = table.repetitions;
    j["rng"] = kRngAlgorithmId;
    json rows = json::array();
    for (const auto& row : table.rows) {
        json jr;
        jr["policy"] = row.policy;
        jr["oracle"] = row.oracle;
        jr["mean_ratio"] = g6(row.mean_ratio);
        jr["mean_queries"] = g6(row.mean_queries);
        jr["mean_query_fraction"] = g6(row.mean_query_fraction);
        jr["mean_eta"] = g6(row.mean_eta);
        jr["mean_inversions"] = g6(row.mean_inversions);
        json insts = json::array();
        for (const auto& ir : row.instances) {
            json ji;
            ji["instance"] = ir.instance;
            ji["trace_length"] = ir.trace_length;
            ji["opt_cost"] = ir.opt_cost;
            ji["reps"] = ir.reps;
            ji["mean_misses"] = g6(ir.mean_misses);
            ji["mean_ratio"] = g6(ir.mean_ratio);
            ji["mean_queries"] = g6(ir.mean_queries);
            ji["mean_eta"] = g6(ir.mean_eta);
            ji["mean_inversions"] = g6(ir.mean_inversions);
            insts.push_back(ji);
        }
        jr["instances"] = insts;
        rows.push_back(jr);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace

void emit_results(const ResultTable& table, OutputSpec::Format format, std::ostream& out) {
    if (format == OutputSpec::Format::csv) {
        out << "policy,oracle,mean_ratio,mean_queries,mean_query_fraction,mean_eta,mean_inversions\n";
        for (const auto& row : table.rows) {
            out << row.policy << ',' << row.oracle << ',' << fmt6(row.mean_ratio) << ','
                << fmt6(row.mean_queries) << ',' << fmt6(row.mean_query_fraction) << ','
                << fmt6(row.mean_eta) << ',' << fmt6(row.mean_inversions) << '\n';
        }
        return;
    }
    out << table_to_json(table).dump(2) << '\n';
}

void emit_results_file(const ResultTable& table, const OutputSpec& output) {
    std::ofstream out(output.path, std::ios::binary);
    if (!out) throw IoError("cannot write results: " + output.path);
    emit_results(table, output.format, out);
}

ResultTable parse_results_json(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid results JSON: ") + e.what());
    }
    ResultTable table;
    table.k = j.at("k").get<std::uint32_t>();
    table.repetitions = j.at("repetitions").get<std::uint32_t>();
    for (const auto& jr : j.at("rows")) {
        ResultRow row;
        row.policy = jr.at("policy").get<std::string>();
        row.oracle = jr.at("oracle").get<std::string>();
        row.mean_ratio = jr.at("mean_ratio").get<double>();
        row.mean_queries = jr.at("mean_queries").get<double>();
        row.mean_query_fraction = jr.at("mean_query_fraction").get<double>();
        row.mean_eta = jr.at("mean_eta").get<double>();
        row.mean_inversions = jr.at("mean_inversions").get<double>();
        for (const auto& ji : jr.at("instances")) {
            InstanceResult ir;
            ir.instance = ji.at("instance").get<std::string>();
            ir.trace_length = ji.at("trace_length").get<std::uint32_t>();
            ir.opt_cost = ji.at("opt_cost").get<std::uint64_t>();
            ir.reps = ji.at("reps").get<std::uint32_t>();
            ir.mean_misses = ji.at("mean_misses").get<double>();
            ir.mean_ratio = ji.at("mean_ratio").get<double>();
            ir.mean_queries = ji.at("mean_queries").get<double>();
            ir.mean_eta = ji.at("mean_eta").get<double>();
            ir.mean_inversions = ji.at("mean_inversions").get<double>();
            row.instances.push_back(ir);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void emit_sweep_csv(const std::vector<SweepCell>& cells, std::ostream& out) {
    out << "b,sigma,ratio,stderr\n";
    for (const auto& c : cells) {
        out << c.b << ',' << fmt6(c.sigma) << ',' << fmt6(c.ratio) << ',' << fmt6(c.stderr_)
            << '\n';
    }
}

std::string report_to_json(const SimReport& report) {
    json j;
    j["policy"] = report.policy;
    j["rng"] = report.rng_id;
    j["misses"] = report.misses;
    j["evictions"] = report.evictions;
    j["queries"] = report.queries;
    j["fallback_evictions"] = report.fallback_evictions;
    j["eta"] = report.eta;
    j["inversions"] = report.inversions;
    j["opt_cost"] = report.opt_cost;
    j["ratio"] = report.ratio;
    json phases = json::array();
    for (const auto& ph : report.per_phase) {
        json jp;
        jp["ell"] = ph.ell;
        jp["misses"] = ph.misses;
        jp["queries"] = ph.queries;
        json hist = json::object();
        for (const auto& [len, count] : ph.chain_hist) hist[std::to_string(len)] = count;
        jp["chains"] = hist;
        phases.push_back(jp);
    }
    j["per_phase"] = phases;
    if (report.combiner) {
        j["combiner"] = {{"blind_misses", report.combiner->blind_misses},
                         {"random_misses", report.combiner->random_misses},
                         {"switches", report.combiner->switches},
                         {"leader_is_blind", report.combiner->leader_is_blind}};
    }
    return j.dump();
}

}  // namespace cachesim
