#pragma once

// Trace sources: the adversarial lower-bound family, synthetic Zipf
// workloads, and ingestion of CSV event logs with string-key interning.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachesim/trace.hpp"

namespace cachesim {

struct LowerBoundSpec {
    std::uint32_t k = 2;
    std::uint32_t phases = 1;  // H
    std::uint64_t seed = 0;
};

// Phase 1 requests k fresh pages once each. Every later phase introduces
// one fresh page f and replays a seeded uniform permutation p_1..p_k of
// the previous phase's pages as f, <f>^k p_k, <f p_k>^k p_{k-1}, ...,
// <f p_k ... p_3>^k p_2; the dead page p_1 is never requested.
Trace lower_bound_instance(const LowerBoundSpec& spec);

// One phase of the construction for a fixed permutation (perm[0] = p_1).
std::vector<PageId> lower_bound_phase(PageId fresh, const std::vector<PageId>& perm);

// Request count of each phase after the first: k^2(k-1)/2 + k.
std::uint64_t lower_bound_phase_length(std::uint32_t k);

// i.i.d. draws over pages 0..universe-1 with P(i) proportional to
// 1/(i+1)^s; s = 0 is uniform.
Trace zipf_trace(std::uint32_t length, std::uint32_t universe, double s, std::uint64_t seed);

struct IngestionSpec {
    std::string path;
    std::string column;           // header name of the page-key column
    std::uint32_t limit = 25000;  // event truncation count
    std::uint32_t min_distinct = 0;
};

struct IngestError : std::runtime_error {
    enum class Code { missing_file, missing_column, zero_rows };
    IngestError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
    Code code;
};

struct IngestResult {
    Trace trace;
    std::vector<std::string> keys;  // intern map: PageId -> original key
    std::uint64_t skipped_rows = 0;
    bool trivial(std::uint32_t min_distinct) const { return trace.universe_size() < min_distinct; }
};

// Reads events in file order (RFC 4180: header row, quoted fields),
// interns the key column as dense PageIds, truncates to `limit`.
// Malformed rows are skipped and counted.
IngestResult ingest_csv(const IngestionSpec& spec);

// Trace export: one PageId per line. The intern map goes to a sidecar
// JSON array (index = PageId).
void write_trace_file(const Trace& trace, const std::string& path);
Trace load_trace_file(const std::string& path);
void write_intern_map(const std::vector<std::string>& keys, const std::string& path);

}  // namespace cachesim
