#include "cachesim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "cachesim/rng.hpp"

namespace cachesim {

double total_error(const QueryLog& log) {
    double sum = 0;
    for (const auto& r : log.records) sum += std::abs(r.predicted - static_cast<double>(r.actual));
    return sum;
}

namespace {

class Fenwick {
  public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t i) {  // 0-based
        for (++i; i < tree_.size(); i += i & (0 - i)) ++tree_[i];
    }
    std::uint64_t prefix(std::size_t i) const {  // count of inserted indices <= i (0-based)
        std::uint64_t s = 0;
        for (++i; i > 0; i -= i & (0 - i)) s += tree_[i];
        return s;
    }

  private:
    std::vector<std::uint64_t> tree_;
};

}  // namespace

std::uint64_t count_inversions(const std::vector<QueryRecord>& records) {
    const std::size_t n = records.size();
    if (n < 2) return 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return records[a].actual < records[b].actual; });

    std::vector<double> taus(n);
    for (std::size_t i = 0; i < n; ++i) taus[i] = records[i].predicted;
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    auto tau_pos = [&](double t) {
        return static_cast<std::size_t>(std::lower_bound(taus.begin(), taus.end(), t) - taus.begin());
    };

    // Process records in arrival order; records with equal arrivals never
    // form inversions with each other, so whole groups are counted
    // against the tree before being inserted.
    Fenwick tree(taus.size());
    std::uint64_t inserted = 0, inversions = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && records[order[j]].actual == records[order[i]].actual) ++j;
        for (std::size_t g = i; g < j; ++g) {
            std::size_t pos = tau_pos(records[order[g]].predicted);
            std::uint64_t below = pos == 0 ? 0 : tree.prefix(pos - 1);
            inversions += inserted - below;  // earlier arrivals with tau >= ours
        }
        for (std::size_t g = i; g < j; ++g) {
            tree.add(tau_pos(records[order[g]].predicted));
            ++inserted;
        }
        i = j;
    }
    return inversions;
}

std::uint64_t count_inversions(const QueryLog& log) { return count_inversions(log.records); }

std::string oracle_label(const OracleSpec& spec) {
    switch (spec.kind) {
        case OracleKind::perfect: return "perfect";
        case OracleKind::mean_interval: return "mean_interval";
        case OracleKind::lognormal: {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "lognormal-sigma%g", spec.sigma);
            return buf;
        }
    }
    return "unknown";
}

double PredictionOracle::query(PageId p, Time t) {
    const Time actual = trace_.next_arrival_of(p, t);
    const double tau = predict(p, t, actual);
    log_.records.push_back({p, t, tau, actual});
    return tau;
}

namespace {

class PerfectOracle final : public PredictionOracle {
  public:
    using PredictionOracle::PredictionOracle;

  protected:
    double predict(PageId, Time, Time actual) override { return static_cast<double>(actual); }
};

// Actual arrival plus multiplicative-noise lag exp(sigma * Z). The noise
// is memoized per (page, arrival) so repeat queries about the same future
// request see the same prediction; `resample` disables the memo.
class LognormalOracle final : public PredictionOracle {
  public:
    LognormalOracle(const Trace& trace, double sigma, std::uint64_t seed, bool resample)
        : PredictionOracle(trace), sigma_(sigma), resample_(resample), rng_(seed) {}

  protected:
    double predict(PageId p, Time, Time actual) override {
        if (resample_) return static_cast<double>(actual) + draw();
        const std::uint64_t key = (static_cast<std::uint64_t>(p) << 32) | actual;
        auto it = memo_.find(key);
        if (it == memo_.end()) it = memo_.emplace(key, static_cast<double>(actual) + draw()).first;
        return it->second;
    }

  private:
    double draw() { return std::exp(sigma_ * standard_normal(rng_)); }

    double sigma_;
    bool resample_;
    Rng rng_;
    std::unordered_map<std::uint64_t, double> memo_;
};

// Off-the-shelf predictor: last request time plus the running mean
// inter-arrival gap. Pages with fewer than two observations get a
// pessimistic mean of the full trace length; never-seen pages map to the
// sentinel.
class MeanIntervalOracle final : public PredictionOracle {
  public:
    using PredictionOracle::PredictionOracle;

    void observe(PageId p, Time t) override {
        auto it = stats_.find(p);
        if (it == stats_.end()) {
            stats_.emplace(p, Stat{t, 0, 0});
            return;
        }
        it->second.gap_sum += t - it->second.last;
        it->second.gap_count += 1;
        it->second.last = t;
    }

  protected:
    double predict(PageId p, Time, Time) override {
        auto it = stats_.find(p);
        if (it == stats_.end()) return static_cast<double>(trace_.sentinel());
        const Stat& s = it->second;
        const double mean = s.gap_count == 0
                                ? static_cast<double>(trace_.length())
                                : static_cast<double>(s.gap_sum) / static_cast<double>(s.gap_count);
        return static_cast<double>(s.last) + mean;
    }

  private:
    struct Stat {
        Time last;
        std::uint64_t gap_sum;
        std::uint32_t gap_count;
    };
    std::unordered_map<PageId, Stat> stats_;
};

}  // namespace

std::unique_ptr<PredictionOracle> make_oracle(const OracleSpec& spec, const Trace& trace) {
    switch (spec.kind) {
        case OracleKind::perfect: return std::make_unique<PerfectOracle>(trace);
        case OracleKind::lognormal:
            return std::make_unique<LognormalOracle>(trace, spec.sigma, spec.seed, spec.resample);
        case OracleKind::mean_interval: return std::make_unique<MeanIntervalOracle>(trace);
    }
    return nullptr;
}

void write_query_log_csv(const QueryLog& log, std::ostream& out) {
    out << "page,time,predicted,actual\n";
    char buf[96];
    for (const auto& r : log.records) {
        std::snprintf(buf, sizeof(buf), "%u,%u,%.10g,%u\n", r.page, r.time, r.predicted, r.actual);
        out << buf;
    }
}

}  // namespace cachesim
