#include "cachesim/instances.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "cachesim/rng.hpp"

namespace cachesim {

std::vector<PageId> lower_bound_phase(PageId fresh, const std::vector<PageId>& perm) {
    const std::size_t k = perm.size();
    std::vector<PageId> seq{fresh};
    std::vector<PageId> block{fresh};
    for (std::size_t m = k; m >= 2; --m) {
        for (std::size_t rep = 0; rep < k; ++rep)
            seq.insert(seq.end(), block.begin(), block.end());
        seq.push_back(perm[m - 1]);
        block.push_back(perm[m - 1]);
    }
    return seq;
}

std::uint64_t lower_bound_phase_length(std::uint32_t k) {
    // 1 leading fresh request plus sum over j=1..k-1 of (k*j + 1).
    const std::uint64_t kk = k;
    return kk * kk * (kk - 1) / 2 + kk;
}

Trace lower_bound_instance(const LowerBoundSpec& spec) {
    if (spec.k < 2) throw std::invalid_argument("lower-bound instance requires k >= 2");
    if (spec.phases < 1) throw std::invalid_argument("lower-bound instance requires H >= 1");

    Rng rng(spec.seed);
    std::vector<PageId> requests;
    std::vector<PageId> current(spec.k);
    std::iota(current.begin(), current.end(), 0u);
    requests.insert(requests.end(), current.begin(), current.end());

    PageId fresh = spec.k;
    for (std::uint32_t h = 2; h <= spec.phases; ++h, ++fresh) {
        std::vector<PageId> perm = current;
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(bounded_uniform(rng, i + 1));
            std::swap(perm[i], perm[j]);
        }
        const auto phase = lower_bound_phase(fresh, perm);
        requests.insert(requests.end(), phase.begin(), phase.end());
        // Next phase's page set: drop the dead page p_1, add the fresh page.
        current.assign(perm.begin() + 1, perm.end());
        current.push_back(fresh);
    }
    return build_trace(std::move(requests));
}

Trace zipf_trace(std::uint32_t length, std::uint32_t universe, double s, std::uint64_t seed) {
    if (length < 1) throw std::invalid_argument("trace length must be positive");
    if (universe < 1) throw std::invalid_argument("universe must be positive");
    if (s < 0) throw std::invalid_argument("zipf exponent must be non-negative");

    std::vector<double> cumulative(universe);
    double total = 0;
    for (std::uint32_t i = 0; i < universe; ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), s);
        cumulative[i] = total;
    }

    Rng rng(seed);
    std::vector<PageId> requests(length);
    for (std::uint32_t t = 0; t < length; ++t) {
        const double u = uniform_double(rng) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        requests[t] = static_cast<PageId>(std::min<std::size_t>(it - cumulative.begin(), universe - 1));
    }
    return build_trace(std::move(requests));
}

namespace {

// One RFC 4180 record; handles quoted fields, doubled quotes, embedded
// newlines, and CRLF line ends. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& row) {
    row.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != std::char_traits<char>::eof()) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                if (in.peek() == '\n') in.get();
                [[fallthrough]];
            case '\n':
                row.push_back(std::move(field));
                return true;
            default: field.push_back(static_cast<char>(c));
        }
    }
    if (!any) return false;
    row.push_back(std::move(field));
    return true;
}

}  // namespace

IngestResult ingest_csv(const IngestionSpec& spec) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw IngestError(IngestError::Code::missing_file, "missing file: " + spec.path);

    std::vector<std::string> row;
    if (!read_csv_record(in, row))
        throw IngestError(IngestError::Code::zero_rows, "zero rows: " + spec.path);
    const auto col = std::find(row.begin(), row.end(), spec.column);
    if (col == row.end())
        throw IngestError(IngestError::Code::missing_column,
                          "missing column '" + spec.column + "' in " + spec.path);
    const std::size_t key_idx = static_cast<std::size_t>(col - row.begin());

    IngestResult result;
    std::unordered_map<std::string, PageId> intern;
    std::vector<PageId> requests;
    while (requests.size() < spec.limit && read_csv_record(in, row)) {
        if (row.size() <= key_idx || row[key_idx].empty()) {
            ++result.skipped_rows;
            continue;
        }
        const std::string& key = row[key_idx];
        auto it = intern.find(key);
        if (it == intern.end()) {
            it = intern.emplace(key, static_cast<PageId>(result.keys.size())).first;
            result.keys.push_back(key);
        }
        requests.push_back(it->second);
    }
    if (requests.empty())
        throw IngestError(IngestError::Code::zero_rows, "zero usable rows: " + spec.path);
    result.trace = build_trace(std::move(requests));
    return result;
}

void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    for (PageId p : trace.requests()) out << p << '\n';
}

Trace load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::vector<PageId> requests;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        requests.push_back(static_cast<PageId>(std::stoul(line)));
    }
    return build_trace(std::move(requests));
}

void write_intern_map(const std::vector<std::string>& keys, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write intern map: " + path);
    out << nlohmann::json(keys).dump(2) << '\n';
}

}  // namespace cachesim
