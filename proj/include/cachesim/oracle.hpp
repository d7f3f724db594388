#pragma once

// Prediction oracles: sources of predicted next-arrival times. Every
// query is logged with the true arrival so that the prediction error and
// the inversion count of a run can be computed exactly afterwards.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cachesim/trace.hpp"

namespace cachesim {

struct QueryRecord {
    PageId page = 0;
    Time time = 0;          // when the query was made
    double predicted = 0;   // tau, >= 1
    Time actual = 0;        // true next arrival, sentinel-capped
};

struct QueryLog {
    std::vector<QueryRecord> records;
    std::size_t size() const { return records.size(); }
};

// Sum of |predicted - actual| over all records. Exact for integer-valued
// predictions within the double integer range.
double total_error(const QueryLog& log);

// Number of unordered record pairs whose predicted order contradicts
// their actual order (predicted_i >= predicted_j but actual_i < actual_j).
// O(n log n); tests cross-check against a quadratic scan.
std::uint64_t count_inversions(const std::vector<QueryRecord>& records);
std::uint64_t count_inversions(const QueryLog& log);

enum class OracleKind { perfect, lognormal, mean_interval };

struct OracleSpec {
    OracleKind kind = OracleKind::perfect;
    double sigma = 0.0;        // lognormal only; sigma = 0 gives a constant +1 offset
    std::uint64_t seed = 0;    // lognormal only
    bool resample = false;     // lognormal: fresh noise per call instead of per (page, arrival)
};

std::string oracle_label(const OracleSpec& spec);

class PredictionOracle {
  public:
    explicit PredictionOracle(const Trace& trace) : trace_(trace) {}
    virtual ~PredictionOracle() = default;

    // Predicted time of the next request to p after t. Appends one
    // record per call, repeat queries included.
    double query(PageId p, Time t);

    // Request-stream hook; called once per served request.
    virtual void observe(PageId /*p*/, Time /*t*/) {}

    const QueryLog& log() const { return log_; }

  protected:
    virtual double predict(PageId p, Time t, Time actual) = 0;
    const Trace& trace_;

  private:
    QueryLog log_;
};

std::unique_ptr<PredictionOracle> make_oracle(const OracleSpec& spec, const Trace& trace);

// Columns: page,time,predicted,actual.
void write_query_log_csv(const QueryLog& log, std::ostream& out);

}  // namespace cachesim
