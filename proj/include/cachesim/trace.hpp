#pragma once

// Request traces and their algorithm-independent structure: the
// next-arrival index and the phase / clean-stale decomposition that all
// marking policies share.

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cachesim {

using PageId = std::uint32_t;

// Request positions are 1-based; position 0 never occurs. A page that is
// never requested again gets the sentinel arrival time length()+1.
using Time = std::uint32_t;

class Trace {
  public:
    Time length() const { return static_cast<Time>(requests_.size()); }
    Time sentinel() const { return length() + 1; }

    PageId at(Time t) const { return requests_[t - 1]; }

    // Time of the next request to the page requested at position t,
    // or sentinel() if it never appears again.
    Time next_arrival(Time t) const { return next_arrival_[t - 1]; }

    // First request to page p strictly after time t, or sentinel().
    Time next_arrival_of(PageId p, Time t) const;

    std::uint32_t universe_size() const { return universe_size_; }
    const std::vector<PageId>& requests() const { return requests_; }

  private:
    friend Trace build_trace(std::vector<PageId> requests);

    std::vector<PageId> requests_;
    std::vector<Time> next_arrival_;
    std::unordered_map<PageId, std::vector<Time>> occurrences_;
    std::uint32_t universe_size_ = 0;
};

// Throws std::invalid_argument("empty trace") on an empty sequence.
// O(n) via a reverse scan with a last-seen map.
Trace build_trace(std::vector<PageId> requests);

struct Phase {
    Time start = 0;  // inclusive, 1-based
    Time end = 0;    // inclusive

    std::vector<PageId> distinct_order;  // distinct pages in first-request order
    std::unordered_set<PageId> distinct;
    std::unordered_map<PageId, Time> first_request;

    // Pages of this phase that were not requested in the previous phase.
    std::unordered_set<PageId> clean;
    std::uint32_t ell = 0;  // |clean|

    // All pages of the previous phase, ordered by first request within
    // this phase; pages never requested here come last in ascending id.
    std::vector<PageId> stale_order;
};

struct PhaseStructure {
    std::uint32_t k = 0;
    std::vector<Phase> phases;
};

// Greedy left-to-right maximal partition into windows of at most k
// distinct pages. Depends only on (trace, k), never on a policy.
PhaseStructure decompose_phases(const Trace& trace, std::uint32_t k);

// Stale pages of phase h (0-based) in rank order. Throws
// std::out_of_range on an invalid index.
const std::vector<PageId>& stale_rank_order(const PhaseStructure& ps, std::size_t h);

}  // namespace cachesim
