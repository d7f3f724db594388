#pragma once

// Eviction policies on a shared marking-framework simulation loop:
// offline optimal (furthest-in-future), classical baselines, prior
// prediction-based policies, and the two query-budgeted policies, with
// exact query accounting and eviction-chain tracking.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cachesim/oracle.hpp"
#include "cachesim/rng.hpp"
#include "cachesim/trace.hpp"

namespace cachesim {

enum class PolicyKind {
    fif,
    random_marker,
    lru,
    blind_oracle,
    lv_marker,
    rohatgi_marker,
    robust_oracle,
    naive_eviction,
    adaptive_query,
};

struct PolicyConfig {
    PolicyKind policy = PolicyKind::random_marker;
    std::uint32_t b = 0;        // queries per miss (AdaptiveQuery)
    double epsilon = 0.0;       // unmarked-fraction threshold (NaiveEviction)
    double fallback_threshold = -1;  // chain depth where AdaptiveQuery goes random; <0 = ceil(ln k)
    double lv_threshold = -1;        // chain depth where LVMarker goes random; <0 = H(k)
    double combiner_gamma = 2.0;     // RobustOracle leader-switch factor
    std::uint64_t seed = 0;

    static PolicyConfig make(PolicyKind kind) {
        PolicyConfig c;
        c.policy = kind;
        return c;
    }
};

std::string policy_label(const PolicyConfig& cfg);
bool policy_is_randomized(PolicyKind kind);
bool policy_uses_oracle(PolicyKind kind);

// Throws std::invalid_argument on an inconsistent configuration.
void validate_policy_config(const PolicyConfig& cfg, std::uint32_t k);

// H(k) = 1 + 1/2 + ... + 1/k.
double harmonic_number(std::uint32_t k);

class CacheState {
  public:
    explicit CacheState(std::uint32_t k) : k_(k) {}

    std::uint32_t capacity() const { return k_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(resident_sorted_.size()); }
    bool full() const { return size() >= k_; }
    bool contains(PageId p) const { return resident_.count(p) > 0; }
    bool is_marked(PageId p) const { return marked_.count(p) > 0; }

    const std::vector<PageId>& residents() const { return resident_sorted_; }  // ascending id
    const std::vector<PageId>& unmarked() const { return unmarked_sorted_; }   // ascending id

    void insert(PageId p, bool marked);
    void mark(PageId p);
    void evict(PageId p);
    void unmark_all();

  private:
    std::uint32_t k_;
    std::unordered_set<PageId> resident_;
    std::unordered_set<PageId> marked_;
    std::vector<PageId> resident_sorted_;
    std::vector<PageId> unmarked_sorted_;
};

// Per-phase eviction chains: chain i starts when a clean page's miss
// evicts q_{i,1}; a later miss on q_{i,j} that evicts q_{i,j+1} extends
// it. Chains opened by a stale page with no recorded eviction (possible
// only for non-marking policies) are flagged synthetic and excluded from
// chain statistics.
class ChainTracker {
  public:
    void start_phase();

    // Records `evicted` on the chain extended by serving `requested`;
    // returns (chain id, depth). Chain ids restart at 0 each phase.
    std::pair<std::uint32_t, std::uint32_t> extend(PageId requested, PageId evicted, bool is_clean,
                                                   bool synthetic);

    // Depth of `requested` in its chain, if it was evicted this phase.
    std::optional<std::uint32_t> depth_of(PageId requested) const;

    const std::vector<std::uint32_t>& lengths() const { return lengths_; }
    const std::vector<bool>& synthetic() const { return synthetic_; }

  private:
    struct Link {
        std::uint32_t chain;
        std::uint32_t depth;
    };
    std::unordered_map<PageId, Link> chain_of_;
    std::vector<std::uint32_t> lengths_;
    std::vector<bool> synthetic_;
};

// Uniform choice from a non-empty pool (one PRNG draw).
PageId pick_uniform(const std::vector<PageId>& pool, Rng& rng);

// Page with the largest score; ties broken by smallest id.
PageId pick_furthest(const std::vector<std::pair<PageId, double>>& scored);

// Number of stale pages strictly after `evicted` in the rank order that
// are not in `already_evicted`. Diagnostic only.
std::uint32_t rank_of(const std::vector<PageId>& stale_order, PageId evicted,
                      const std::unordered_set<PageId>& already_evicted);

struct PhaseStats {
    std::uint32_t ell = 0;
    std::uint64_t misses = 0;
    std::uint64_t queries = 0;
    std::map<std::uint32_t, std::uint64_t> chain_hist;  // chain length -> count
};

struct CombinerStats {
    std::uint64_t blind_misses = 0;
    std::uint64_t random_misses = 0;
    std::uint64_t switches = 0;
    bool leader_is_blind = true;
};

struct SimReport {
    std::string policy;
    std::string rng_id;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t queries = 0;
    std::uint64_t fallback_evictions = 0;
    std::uint32_t min_pool_at_eviction = 0xffffffffu;  // smallest candidate pool seen
    double eta = 0;
    std::uint64_t inversions = 0;
    std::vector<PhaseStats> per_phase;
    std::uint64_t opt_cost = 0;  // filled by the harness (or = misses for FiF)
    double ratio = 0;
    std::optional<CombinerStats> combiner;
};

// Sets opt_cost and ratio on an existing report.
void finalize_ratio(SimReport& report, std::uint64_t opt_cost);

// One event per chain node: depth 0 when a clean page opens a chain
// (page = the clean page), depth j >= 1 when an eviction extends it
// (page = the evicted page). `rank` is the page's rank at that moment.
struct ChainEvent {
    std::uint32_t phase = 0;
    std::uint32_t chain = 0;
    std::uint32_t depth = 0;
    PageId page = 0;
    std::uint32_t rank = 0;
};

struct SimOptions {
    std::vector<ChainEvent>* chain_events = nullptr;  // enables rank tracking
    std::vector<PageId>* evictions = nullptr;         // evicted pages in order
};

// Runs the policy on the trace. Deterministic given (config.seed,
// oracle seed, trace, k). Cold-start misses fetch without eviction.
SimReport simulate(const PolicyConfig& cfg, const Trace& trace, std::uint32_t k,
                   PredictionOracle& oracle, const SimOptions& opts = {});
SimReport simulate(const PolicyConfig& cfg, const Trace& trace, std::uint32_t k,
                   const OracleSpec& oracle_spec, const SimOptions& opts = {});

// Exhaustive offline minimum over all eviction schedules, memoized on
// (position, cache contents). Guarded: |trace| <= 14 and k <= 4.
std::uint64_t brute_force_opt(const Trace& trace, std::uint32_t k);

}  // namespace cachesim
