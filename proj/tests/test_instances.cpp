#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "cachesim/instances.hpp"
#include "cachesim/policy.hpp"
#include "test_util.hpp"

using namespace cachesim;

TEST_CASE("lower-bound phase unrolls the repeated blocks") {
    // k=2, fresh page c=2, permutation (p1=a=0, p2=b=1)
    CHECK(lower_bound_phase(2, {0, 1}) == std::vector<PageId>{2, 2, 2, 1});

    // Full trace for that permutation: [a, b, c, c, c, b]. With a seeded
    // generator the k=2 permutation is one of two; check both shapes.
    const Trace tr = lower_bound_instance({2, 2, 0});
    REQUIRE(tr.length() == 6);
    const auto& reqs = tr.requests();
    CHECK(reqs[0] == 0);
    CHECK(reqs[1] == 1);
    CHECK(reqs[2] == 2);
    CHECK(reqs[3] == 2);
    CHECK(reqs[4] == 2);
    CHECK((reqs[5] == 0 || reqs[5] == 1));  // p2 of the drawn permutation

    // k=3 shape: f, <f>^3 p3, <f p3>^3 p2
    CHECK(lower_bound_phase(9, {0, 1, 2}) ==
          std::vector<PageId>{9, 9, 9, 9, 2, 9, 2, 9, 2, 9, 2, 1});
}

TEST_CASE("lower-bound instances have the closed-form length") {
    for (std::uint32_t k : {2u, 3u, 5u, 8u}) {
        for (std::uint32_t H : {1u, 2u, 6u}) {
            const Trace tr = lower_bound_instance({k, H, 7});
            const std::uint64_t expected =
                k + static_cast<std::uint64_t>(H - 1) * lower_bound_phase_length(k);
            REQUIRE(tr.length() == expected);
        }
    }
    CHECK(lower_bound_phase_length(2) == 4);
    CHECK(lower_bound_phase_length(3) == 12);
}

TEST_CASE("lower-bound phases hold k distinct pages with exactly one clean") {
    Rng rng(55);
    for (std::uint64_t iter = 0; iter < 50; ++iter) {
        const auto k = 2 + static_cast<std::uint32_t>(bounded_uniform(rng, 15));
        const auto H = 1 + static_cast<std::uint32_t>(bounded_uniform(rng, 20));
        const Trace tr = lower_bound_instance({k, H, iter});
        const auto ps = decompose_phases(tr, k);
        REQUIRE(ps.phases.size() == H);
        REQUIRE(ps.phases[0].ell == k);
        for (std::size_t h = 1; h < ps.phases.size(); ++h) {
            REQUIRE(ps.phases[h].distinct.size() == k);
            REQUIRE(ps.phases[h].ell == 1);
        }
    }
}

TEST_CASE("the offline optimum pays one miss per phase after the first") {
    for (std::uint32_t k : {2u, 4u, 8u}) {
        for (std::uint32_t H : {2u, 5u}) {
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                const Trace tr = lower_bound_instance({k, H, seed});
                const auto report =
                    simulate(PolicyConfig::make(PolicyKind::fif), tr, k, OracleSpec{});
                REQUIRE(report.misses == k + H - 1);
            }
        }
    }
}

TEST_CASE("zipf: uniform at s=0, constant at universe 1, seed-deterministic") {
    const Trace uniform = zipf_trace(100000, 4, 0.0, 17);
    std::vector<std::uint64_t> counts(4, 0);
    for (PageId p : uniform.requests()) ++counts[p];
    for (std::uint64_t c : counts) {
        const double f = static_cast<double>(c) / 100000.0;
        // 3 sigma around 1/4
        CHECK(f > 0.25 - 3 * 0.00137);
        CHECK(f < 0.25 + 3 * 0.00137);
    }

    const Trace constant = zipf_trace(50, 1, 2.0, 3);
    for (PageId p : constant.requests()) REQUIRE(p == 0);

    const Trace a = zipf_trace(500, 20, 0.8, 11);
    const Trace b = zipf_trace(500, 20, 0.8, 11);
    CHECK(a.requests() == b.requests());

    // Skew favors low ids.
    const Trace skew = zipf_trace(100000, 10, 1.2, 5);
    std::vector<std::uint64_t> skew_counts(10, 0);
    for (PageId p : skew.requests()) ++skew_counts[p];
    CHECK(skew_counts[0] > 2 * skew_counts[9]);
}

TEST_CASE("ingest interns keys in first-appearance order") {
    testutil::TempFile csv("cachesim_ingest_basic.csv");
    testutil::write_file(csv.path(), "ride_id,station\n1,s1\n2,s2\n3,s1\n");
    IngestionSpec spec{csv.path(), "station", 25000, 0};
    const auto result = ingest_csv(spec);
    CHECK(result.trace.requests() == std::vector<PageId>{0, 1, 0});
    CHECK(result.keys == std::vector<std::string>{"s1", "s2"});
    CHECK(result.skipped_rows == 0);

    spec.limit = 2;
    CHECK(ingest_csv(spec).trace.requests() == std::vector<PageId>{0, 1});
}

TEST_CASE("ingest handles quoted fields and counts malformed rows") {
    testutil::TempFile csv("cachesim_ingest_quoted.csv");
    testutil::write_file(csv.path(),
               "id,station name\r\n"
               "1,\"W 52 St & 11 Ave\"\r\n"
               "2,\"8 Ave \"\"north\"\", NYC\"\r\n"
               "badrow\r\n"
               "4,\r\n"
               "5,\"W 52 St & 11 Ave\"\r\n");
    const auto result = ingest_csv({csv.path(), "station name", 25000, 0});
    CHECK(result.trace.requests() == std::vector<PageId>{0, 1, 0});
    CHECK(result.keys[1] == "8 Ave \"north\", NYC");
    CHECK(result.skipped_rows == 2);
}

TEST_CASE("ingest errors carry distinct codes") {
    CHECK_THROWS_AS(ingest_csv({"/nonexistent/never.csv", "x", 10, 0}), IngestError);
    try {
        ingest_csv({"/nonexistent/never.csv", "x", 10, 0});
    } catch (const IngestError& e) {
        CHECK(e.code == IngestError::Code::missing_file);
    }

    testutil::TempFile csv("cachesim_ingest_errors.csv");
    testutil::write_file(csv.path(), "a,b\n1,2\n");
    try {
        ingest_csv({csv.path(), "missing", 10, 0});
        FAIL("expected missing_column");
    } catch (const IngestError& e) {
        CHECK(e.code == IngestError::Code::missing_column);
    }

    testutil::TempFile empty("cachesim_ingest_empty.csv");
    testutil::write_file(empty.path(), "a,b\n");
    try {
        ingest_csv({empty.path(), "a", 10, 0});
        FAIL("expected zero_rows");
    } catch (const IngestError& e) {
        CHECK(e.code == IngestError::Code::zero_rows);
    }
}

TEST_CASE("an instance below the distinct-page floor is flagged trivial") {
    testutil::TempFile csv("cachesim_ingest_trivial.csv");
    std::string content = "id,station\n";
    for (int i = 0; i < 499; ++i) content += std::to_string(i) + ",s" + std::to_string(i) + "\n";
    testutil::write_file(csv.path(), content);
    const auto result = ingest_csv({csv.path(), "station", 25000, 500});
    CHECK(result.trace.universe_size() == 499);
    CHECK(result.trivial(500));
    CHECK(!result.trivial(499));
}

TEST_CASE("trace files round-trip the request sequence") {
    testutil::TempFile trace_file("cachesim_trace_roundtrip.txt");
    testutil::TempFile map_file("cachesim_trace_roundtrip.map.json");
    testutil::TempFile csv("cachesim_trace_roundtrip.csv");
    testutil::write_file(csv.path(), "k\nx\ny\nx\nz\n");
    const auto ingested = ingest_csv({csv.path(), "k", 100, 0});
    write_trace_file(ingested.trace, trace_file.path());
    write_intern_map(ingested.keys, map_file.path());

    const Trace reloaded = load_trace_file(trace_file.path());
    CHECK(reloaded.requests() == ingested.trace.requests());

    std::ifstream map_in(map_file.path());
    std::string map_text((std::istreambuf_iterator<char>(map_in)),
                         std::istreambuf_iterator<char>());
    CHECK(map_text.find("\"x\"") != std::string::npos);
    CHECK(map_text.find("\"z\"") != std::string::npos);
}

TEST_CASE("generator parameter validation") {
    CHECK_THROWS_AS(lower_bound_instance({1, 5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(lower_bound_instance({4, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(zipf_trace(0, 5, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(zipf_trace(5, 0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(zipf_trace(5, 5, -1.0, 0), std::invalid_argument);
}
