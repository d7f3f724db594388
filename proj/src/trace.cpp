#include "cachesim/trace.hpp"

#include <algorithm>
#include <stdexcept>

namespace cachesim {

Time Trace::next_arrival_of(PageId p, Time t) const {
    auto it = occurrences_.find(p);
    if (it == occurrences_.end()) return sentinel();
    const auto& occ = it->second;
    auto pos = std::upper_bound(occ.begin(), occ.end(), t);
    return pos == occ.end() ? sentinel() : *pos;
}

Trace build_trace(std::vector<PageId> requests) {
    if (requests.empty()) throw std::invalid_argument("empty trace");

    Trace tr;
    tr.requests_ = std::move(requests);
    const Time n = tr.length();
    tr.next_arrival_.assign(n, 0);

    std::unordered_map<PageId, Time> next_seen;
    for (Time t = n; t >= 1; --t) {
        PageId p = tr.requests_[t - 1];
        auto it = next_seen.find(p);
        tr.next_arrival_[t - 1] = it == next_seen.end() ? n + 1 : it->second;
        next_seen[p] = t;
    }
    tr.universe_size_ = static_cast<std::uint32_t>(next_seen.size());

    for (Time t = 1; t <= n; ++t) tr.occurrences_[tr.requests_[t - 1]].push_back(t);
    return tr;
}

PhaseStructure decompose_phases(const Trace& trace, std::uint32_t k) {
    if (k < 1) throw std::invalid_argument("cache size must be positive");

    PhaseStructure ps;
    ps.k = k;

    const Time n = trace.length();
    Phase cur;
    cur.start = 1;
    for (Time t = 1; t <= n; ++t) {
        PageId p = trace.at(t);
        if (!cur.distinct.count(p)) {
            if (cur.distinct.size() == k) {
                cur.end = t - 1;
                ps.phases.push_back(std::move(cur));
                cur = Phase{};
                cur.start = t;
            }
            cur.distinct.insert(p);
            cur.distinct_order.push_back(p);
        }
        cur.first_request.emplace(p, t);
    }
    cur.end = n;
    ps.phases.push_back(std::move(cur));

    for (std::size_t h = 0; h < ps.phases.size(); ++h) {
        Phase& ph = ps.phases[h];
        if (h == 0) {
            ph.clean = ph.distinct;
        } else {
            const Phase& prev = ps.phases[h - 1];
            for (PageId p : ph.distinct_order)
                if (!prev.distinct.count(p)) ph.clean.insert(p);

            std::vector<PageId> requested, unrequested;
            for (PageId p : prev.distinct_order)
                (ph.first_request.count(p) ? requested : unrequested).push_back(p);
            std::sort(requested.begin(), requested.end(), [&](PageId a, PageId b) {
                return ph.first_request.at(a) < ph.first_request.at(b);
            });
            std::sort(unrequested.begin(), unrequested.end());
            ph.stale_order = std::move(requested);
            ph.stale_order.insert(ph.stale_order.end(), unrequested.begin(), unrequested.end());
        }
        ph.ell = static_cast<std::uint32_t>(ph.clean.size());
    }
    return ps;
}

const std::vector<PageId>& stale_rank_order(const PhaseStructure& ps, std::size_t h) {
    if (h >= ps.phases.size()) throw std::out_of_range("invalid phase index");
    return ps.phases[h].stale_order;
}

}  // namespace cachesim
