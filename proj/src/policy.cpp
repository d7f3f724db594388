#include "cachesim/policy.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace cachesim {

std::string policy_label(const PolicyConfig& cfg) {
    char buf[64];
    switch (cfg.policy) {
        case PolicyKind::fif: return "FiF";
        case PolicyKind::random_marker: return "RandomMarker";
        case PolicyKind::lru: return "LRU";
        case PolicyKind::blind_oracle: return "BlindOracle";
        case PolicyKind::lv_marker: return "LVMarker";
        case PolicyKind::rohatgi_marker: return "RohatgiMarker";
        case PolicyKind::robust_oracle: return "RobustOracle";
        case PolicyKind::naive_eviction:
            std::snprintf(buf, sizeof(buf), "NaiveEviction-%g", cfg.epsilon);
            return buf;
        case PolicyKind::adaptive_query:
            std::snprintf(buf, sizeof(buf), "AdaptiveQuery-%u", cfg.b);
            return buf;
    }
    return "unknown";
}

bool policy_is_randomized(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::fif:
        case PolicyKind::lru:
        case PolicyKind::blind_oracle: return false;
        default: return true;
    }
}

bool policy_uses_oracle(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::fif:
        case PolicyKind::random_marker:
        case PolicyKind::lru: return false;
        default: return true;
    }
}

void validate_policy_config(const PolicyConfig& cfg, std::uint32_t k) {
    if (k < 1) throw std::invalid_argument("cache size must be positive");
    if (cfg.policy == PolicyKind::adaptive_query && cfg.b < 1)
        throw std::invalid_argument("AdaptiveQuery requires b >= 1");
    if (cfg.policy == PolicyKind::naive_eviction && !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0))
        throw std::invalid_argument("NaiveEviction requires 0 < epsilon <= 1");
    if (cfg.policy == PolicyKind::robust_oracle && !(cfg.combiner_gamma > 1.0))
        throw std::invalid_argument("RobustOracle requires gamma > 1");
    if (cfg.fallback_threshold >= 0 && cfg.fallback_threshold < 1)
        throw std::invalid_argument("fallback threshold must be >= 1");
    if (cfg.lv_threshold >= 0 && cfg.lv_threshold < 1)
        throw std::invalid_argument("lv threshold must be >= 1");
}

double harmonic_number(std::uint32_t k) {
    double h = 0;
    for (std::uint32_t i = 1; i <= k; ++i) h += 1.0 / static_cast<double>(i);
    return h;
}

void CacheState::insert(PageId p, bool marked) {
    resident_.insert(p);
    resident_sorted_.insert(std::lower_bound(resident_sorted_.begin(), resident_sorted_.end(), p), p);
    if (marked) {
        marked_.insert(p);
    } else {
        unmarked_sorted_.insert(std::lower_bound(unmarked_sorted_.begin(), unmarked_sorted_.end(), p),
                                p);
    }
}

void CacheState::mark(PageId p) {
    if (marked_.insert(p).second) {
        auto it = std::lower_bound(unmarked_sorted_.begin(), unmarked_sorted_.end(), p);
        if (it != unmarked_sorted_.end() && *it == p) unmarked_sorted_.erase(it);
    }
}

void CacheState::evict(PageId p) {
    resident_.erase(p);
    auto it = std::lower_bound(resident_sorted_.begin(), resident_sorted_.end(), p);
    if (it != resident_sorted_.end() && *it == p) resident_sorted_.erase(it);
    if (marked_.erase(p) == 0) {
        auto uit = std::lower_bound(unmarked_sorted_.begin(), unmarked_sorted_.end(), p);
        if (uit != unmarked_sorted_.end() && *uit == p) unmarked_sorted_.erase(uit);
    }
}

void CacheState::unmark_all() {
    marked_.clear();
    unmarked_sorted_ = resident_sorted_;
}

void ChainTracker::start_phase() {
    chain_of_.clear();
    lengths_.clear();
    synthetic_.clear();
}

std::pair<std::uint32_t, std::uint32_t> ChainTracker::extend(PageId requested, PageId evicted,
                                                             bool is_clean, bool synthetic) {
    if (is_clean || synthetic) {
        const auto id = static_cast<std::uint32_t>(lengths_.size());
        lengths_.push_back(1);
        synthetic_.push_back(synthetic);
        chain_of_[evicted] = {id, 1};
        return {id, 1};
    }
    const Link link = chain_of_.at(requested);
    const std::uint32_t depth = link.depth + 1;
    chain_of_[evicted] = {link.chain, depth};
    lengths_[link.chain] = std::max(lengths_[link.chain], depth);
    return {link.chain, depth};
}

std::optional<std::uint32_t> ChainTracker::depth_of(PageId requested) const {
    auto it = chain_of_.find(requested);
    if (it == chain_of_.end()) return std::nullopt;
    return it->second.depth;
}

PageId pick_uniform(const std::vector<PageId>& pool, Rng& rng) {
    return pool[bounded_uniform(rng, pool.size())];
}

PageId pick_furthest(const std::vector<std::pair<PageId, double>>& scored) {
    PageId best = scored.front().first;
    double best_score = scored.front().second;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (scored[i].second > best_score ||
            (scored[i].second == best_score && scored[i].first < best)) {
            best = scored[i].first;
            best_score = scored[i].second;
        }
    }
    return best;
}

std::uint32_t rank_of(const std::vector<PageId>& stale_order, PageId evicted,
                      const std::unordered_set<PageId>& already_evicted) {
    std::uint32_t r = 0;
    bool seen = false;
    for (PageId p : stale_order) {
        if (p == evicted) {
            seen = true;
            continue;
        }
        if (seen && !already_evicted.count(p)) ++r;
    }
    if (!seen) throw std::invalid_argument("page not in stale order");
    return r;
}

void finalize_ratio(SimReport& report, std::uint64_t opt_cost) {
    report.opt_cost = opt_cost;
    report.ratio = opt_cost == 0 ? 0.0
                                 : static_cast<double>(report.misses) / static_cast<double>(opt_cost);
}

namespace {

class Simulator {
  public:
    Simulator(const PolicyConfig& cfg, const Trace& trace, std::uint32_t k,
              PredictionOracle& oracle, const SimOptions& opts)
        : cfg_(cfg),
          trace_(trace),
          k_(k),
          oracle_(oracle),
          opts_(opts),
          ps_(decompose_phases(trace, k)),
          cache_(k),
          rng_(cfg.seed),
          blind_cache_(k),
          rand_cache_(k) {
        fallback_threshold_ = cfg.fallback_threshold >= 0
                                  ? cfg.fallback_threshold
                                  : std::max(1.0, std::ceil(std::log(static_cast<double>(k))));
        lv_threshold_ = cfg.policy == PolicyKind::rohatgi_marker
                            ? 1.0
                            : (cfg.lv_threshold >= 0 ? cfg.lv_threshold : harmonic_number(k));
        full_info_ = cfg.policy == PolicyKind::blind_oracle || cfg.policy == PolicyKind::lv_marker ||
                     cfg.policy == PolicyKind::rohatgi_marker ||
                     cfg.policy == PolicyKind::robust_oracle;
        track_ranks_ = opts.chain_events != nullptr;
    }

    SimReport run() {
        report_.policy = policy_label(cfg_);
        report_.rng_id = kRngAlgorithmId;
        report_.per_phase.resize(ps_.phases.size());
        for (std::size_t h = 0; h < ps_.phases.size(); ++h)
            report_.per_phase[h].ell = ps_.phases[h].ell;

        begin_phase();
        const Time n = trace_.length();
        for (Time t = 1; t <= n; ++t) {
            if (phase_idx_ + 1 < ps_.phases.size() && t == ps_.phases[phase_idx_ + 1].start) {
                flush_chain_stats();
                ++phase_idx_;
                begin_phase();
            }
            step(t);
        }
        flush_chain_stats();

        report_.queries = oracle_.log().size();
        report_.eta = total_error(oracle_.log());
        report_.inversions = count_inversions(oracle_.log());
        bucket_queries_by_phase();

        if (cfg_.policy == PolicyKind::robust_oracle) {
            report_.combiner = CombinerStats{blind_misses_, rand_misses_, switches_, leader_is_blind_};
        }
        if (cfg_.policy == PolicyKind::fif) finalize_ratio(report_, report_.misses);
        return report_;
    }

  private:
    void begin_phase() {
        cache_.unmark_all();
        rand_cache_.unmark_all();
        chains_.start_phase();
        naive_memo_.clear();
        evicted_this_phase_.clear();
    }

    void step(Time t) {
        const PageId p = trace_.at(t);
        const Phase& ph = ps_.phases[phase_idx_];

        oracle_.observe(p, t);
        if (full_info_) {
            pred_[p] = oracle_.query(p, t);
        }
        if (cfg_.policy == PolicyKind::robust_oracle) step_shadows(p);

        const bool hit = cache_.contains(p);
        if (!hit) {
            ++report_.misses;
            ++report_.per_phase[phase_idx_].misses;
            if (cache_.full()) {
                do_eviction(p, t, ph);
            }
            cache_.insert(p, true);
        } else {
            cache_.mark(p);
        }
        last_access_[p] = t;
        res_next_[p] = trace_.next_arrival(t);
    }

    void do_eviction(PageId requested, Time t, const Phase& ph) {
        const bool is_clean = ph.clean.count(requested) > 0;
        bool synthetic = false;
        std::uint32_t depth = 0;
        if (!is_clean) {
            if (auto d = chains_.depth_of(requested)) {
                depth = *d;
            } else {
                synthetic = true;
            }
        }

        if (track_ranks_ && is_clean && !ph.stale_order.empty()) {
            opts_.chain_events->push_back({static_cast<std::uint32_t>(phase_idx_),
                                           static_cast<std::uint32_t>(chains_.lengths().size()), 0,
                                           requested, clean_rank(requested, t, ph)});
        }

        const PageId victim = choose_victim(t, depth);

        ++report_.evictions;
        if (opts_.evictions != nullptr) opts_.evictions->push_back(victim);
        const auto [chain, chain_depth] = chains_.extend(requested, victim, is_clean, synthetic);
        if (track_ranks_ && !synthetic) {
            opts_.chain_events->push_back({static_cast<std::uint32_t>(phase_idx_), chain, chain_depth,
                                           victim,
                                           rank_of(ph.stale_order, victim, evicted_this_phase_)});
        }
        if (track_ranks_) evicted_this_phase_.insert(victim);
        cache_.evict(victim);
    }

    PageId choose_victim(Time t, std::uint32_t depth) {
        const bool marking = cfg_.policy == PolicyKind::random_marker ||
                             cfg_.policy == PolicyKind::naive_eviction ||
                             cfg_.policy == PolicyKind::adaptive_query ||
                             cfg_.policy == PolicyKind::lv_marker ||
                             cfg_.policy == PolicyKind::rohatgi_marker;
        note_pool(marking ? cache_.unmarked() : cache_.residents());
        switch (cfg_.policy) {
            case PolicyKind::fif: return fif_victim();
            case PolicyKind::lru: return lru_victim();
            case PolicyKind::blind_oracle: return argmax_pred(cache_.residents());
            case PolicyKind::robust_oracle: return robust_victim();
            case PolicyKind::random_marker: return pick_uniform(cache_.unmarked(), rng_);
            case PolicyKind::naive_eviction: return naive_victim(t);
            case PolicyKind::adaptive_query: return adaptive_victim(t, depth);
            case PolicyKind::lv_marker:
            case PolicyKind::rohatgi_marker:
                if (static_cast<double>(depth) <= lv_threshold_)
                    return argmax_pred(cache_.unmarked());
                return pick_uniform(cache_.unmarked(), rng_);
        }
        return cache_.residents().front();
    }

    void note_pool(const std::vector<PageId>& pool) {
        report_.min_pool_at_eviction =
            std::min(report_.min_pool_at_eviction, static_cast<std::uint32_t>(pool.size()));
    }

    PageId fif_victim() const {
        const auto& pool = cache_.residents();
        PageId best = pool.front();
        Time best_next = res_next_.at(best);
        for (std::size_t i = 1; i < pool.size(); ++i) {
            const Time next = res_next_.at(pool[i]);
            if (next > best_next) {
                best = pool[i];
                best_next = next;
            }
        }
        return best;
    }

    PageId lru_victim() const {
        const auto& pool = cache_.residents();
        PageId best = pool.front();
        Time best_access = last_access_.at(best);
        for (std::size_t i = 1; i < pool.size(); ++i) {
            const Time access = last_access_.at(pool[i]);
            if (access < best_access) {
                best = pool[i];
                best_access = access;
            }
        }
        return best;
    }

    PageId argmax_pred(const std::vector<PageId>& pool) const {
        PageId best = pool.front();
        double best_tau = pred_.at(best);
        for (std::size_t i = 1; i < pool.size(); ++i) {
            const double tau = pred_.at(pool[i]);
            if (tau > best_tau) {
                best = pool[i];
                best_tau = tau;
            }
        }
        return best;
    }

    PageId naive_victim(Time t) {
        const auto& unmarked = cache_.unmarked();
        const auto threshold =
            static_cast<std::uint64_t>(std::ceil(cfg_.epsilon * static_cast<double>(k_)));
        if (unmarked.size() >= threshold) return pick_uniform(unmarked, rng_);
        for (PageId q : unmarked) {
            if (!naive_memo_.count(q)) naive_memo_.emplace(q, oracle_.query(q, t));
        }
        PageId best = unmarked.front();
        double best_tau = naive_memo_.at(best);
        for (std::size_t i = 1; i < unmarked.size(); ++i) {
            const double tau = naive_memo_.at(unmarked[i]);
            if (tau > best_tau) {
                best = unmarked[i];
                best_tau = tau;
            }
        }
        return best;
    }

    PageId adaptive_victim(Time t, std::uint32_t depth) {
        const auto& unmarked = cache_.unmarked();
        if (static_cast<double>(depth) > fallback_threshold_) {
            ++report_.fallback_evictions;
            return pick_uniform(unmarked, rng_);
        }
        sample_without_replacement(unmarked, cfg_.b, rng_, sample_buf_);
        std::sort(sample_buf_.begin(), sample_buf_.end());
        PageId best = sample_buf_.front();
        double best_tau = oracle_.query(best, t);
        for (std::size_t i = 1; i < sample_buf_.size(); ++i) {
            const double tau = oracle_.query(sample_buf_[i], t);
            if (tau > best_tau) {
                best = sample_buf_[i];
                best_tau = tau;
            }
        }
        return best;
    }

    // The two shadows process the request before the real cache so the
    // leader's state reflects the current request when the real cache
    // needs an eviction.
    void step_shadows(PageId p) {
        if (!blind_cache_.contains(p)) {
            ++blind_misses_;
            if (blind_cache_.full()) {
                const PageId e = argmax_pred(blind_cache_.residents());
                blind_cache_.evict(e);
                blind_last_evicted_ = e;
                blind_has_evicted_ = true;
            }
            blind_cache_.insert(p, true);
        } else {
            blind_cache_.mark(p);
        }

        if (!rand_cache_.contains(p)) {
            ++rand_misses_;
            if (rand_cache_.full()) {
                const PageId e = pick_uniform(rand_cache_.unmarked(), rng_);
                rand_cache_.evict(e);
                rand_last_evicted_ = e;
                rand_has_evicted_ = true;
            }
            rand_cache_.insert(p, true);
        } else {
            rand_cache_.mark(p);
        }

        if (std::isfinite(cfg_.combiner_gamma)) {
            const auto leader_misses = leader_is_blind_ ? blind_misses_ : rand_misses_;
            const auto other_misses = leader_is_blind_ ? rand_misses_ : blind_misses_;
            if (static_cast<double>(leader_misses) >
                cfg_.combiner_gamma * static_cast<double>(other_misses)) {
                leader_is_blind_ = !leader_is_blind_;
                ++switches_;
            }
        }
    }

    PageId robust_victim() const {
        const CacheState& leader = leader_is_blind_ ? blind_cache_ : rand_cache_;
        for (PageId r : cache_.residents()) {
            if (!leader.contains(r)) return r;
        }
        const bool has = leader_is_blind_ ? blind_has_evicted_ : rand_has_evicted_;
        const PageId e = leader_is_blind_ ? blind_last_evicted_ : rand_last_evicted_;
        if (has && cache_.contains(e)) return e;
        return cache_.residents().front();
    }

    std::uint32_t clean_rank(PageId clean_page, Time t, const Phase& ph) const {
        // Clean pages slot into the rank order at their first request,
        // which is the current time t.
        (void)clean_page;
        std::uint32_t r = 0;
        for (PageId s : ph.stale_order) {
            if (evicted_this_phase_.count(s)) continue;
            auto it = ph.first_request.find(s);
            if (it == ph.first_request.end() || it->second > t) ++r;
        }
        return r;
    }

    void flush_chain_stats() {
        const auto& lengths = chains_.lengths();
        const auto& synthetic = chains_.synthetic();
        auto& hist = report_.per_phase[phase_idx_].chain_hist;
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            if (!synthetic[i]) ++hist[lengths[i]];
        }
    }

    void bucket_queries_by_phase() {
        std::size_t h = 0;
        for (const auto& rec : oracle_.log().records) {
            while (h + 1 < ps_.phases.size() && rec.time > ps_.phases[h].end) ++h;
            ++report_.per_phase[h].queries;
        }
    }

    const PolicyConfig& cfg_;
    const Trace& trace_;
    std::uint32_t k_;
    PredictionOracle& oracle_;
    SimOptions opts_;
    PhaseStructure ps_;
    CacheState cache_;
    Rng rng_;

    double fallback_threshold_ = 0;
    double lv_threshold_ = 0;
    bool full_info_ = false;
    bool track_ranks_ = false;

    std::size_t phase_idx_ = 0;
    ChainTracker chains_;
    SimReport report_;

    std::unordered_map<PageId, double> pred_;       // latest predicted next arrival per page
    std::unordered_map<PageId, Time> res_next_;     // true next arrival as of last request
    std::unordered_map<PageId, Time> last_access_;  // LRU recency
    std::unordered_map<PageId, double> naive_memo_;
    std::unordered_set<PageId> evicted_this_phase_;
    std::vector<PageId> sample_buf_;

    CacheState blind_cache_;
    CacheState rand_cache_;
    std::uint64_t blind_misses_ = 0;
    std::uint64_t rand_misses_ = 0;
    PageId blind_last_evicted_ = 0;
    PageId rand_last_evicted_ = 0;
    bool blind_has_evicted_ = false;
    bool rand_has_evicted_ = false;
    bool leader_is_blind_ = true;
    std::uint64_t switches_ = 0;
};

}  // namespace

SimReport simulate(const PolicyConfig& cfg, const Trace& trace, std::uint32_t k,
                   PredictionOracle& oracle, const SimOptions& opts) {
    validate_policy_config(cfg, k);
    Simulator sim(cfg, trace, k, oracle, opts);
    return sim.run();
}

SimReport simulate(const PolicyConfig& cfg, const Trace& trace, std::uint32_t k,
                   const OracleSpec& oracle_spec, const SimOptions& opts) {
    auto oracle = make_oracle(oracle_spec, trace);
    return simulate(cfg, trace, k, *oracle, opts);
}

namespace {

class BruteForce {
  public:
    BruteForce(const Trace& trace, std::uint32_t k) : trace_(trace), k_(k) {
        for (PageId p : trace.requests()) {
            if (!index_.count(p)) {
                const auto bit = static_cast<std::uint32_t>(index_.size());
                index_.emplace(p, bit);
            }
        }
        bits_ = static_cast<std::uint32_t>(index_.size());
    }

    std::uint64_t solve() {
        if (index_.size() <= k_) return index_.size();
        return search(1, 0);
    }

  private:
    std::uint32_t search(Time t, std::uint32_t mask) {
        if (t > trace_.length()) return 0;
        const std::uint64_t key = (static_cast<std::uint64_t>(t) << bits_) | mask;
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        const std::uint32_t bit = 1u << index_.at(trace_.at(t));
        std::uint32_t best;
        if (mask & bit) {
            best = search(t + 1, mask);
        } else if (std::popcount(mask) < static_cast<int>(k_)) {
            best = 1 + search(t + 1, mask | bit);
        } else {
            best = std::numeric_limits<std::uint32_t>::max();
            std::uint32_t rest = mask;
            while (rest) {
                const std::uint32_t victim = rest & (0 - rest);
                rest ^= victim;
                best = std::min(best, 1 + search(t + 1, (mask ^ victim) | bit));
            }
        }
        memo_.emplace(key, best);
        return best;
    }

    const Trace& trace_;
    std::uint32_t k_;
    std::uint32_t bits_ = 0;
    std::unordered_map<PageId, std::uint32_t> index_;
    std::unordered_map<std::uint64_t, std::uint32_t> memo_;
};

}  // namespace

std::uint64_t brute_force_opt(const Trace& trace, std::uint32_t k) {
    if (trace.length() > 14 || k > 4 || k < 1)
        throw std::invalid_argument("exceeds brute-force budget");
    BruteForce bf(trace, k);
    return bf.solve();
}

}  // namespace cachesim
