#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mlru/traffic.hpp"

using namespace mlru;
using Catch::Approx;

TEST_CASE("zipf popularities", "[traffic]") {
    const Catalogue zipf1 = zipf_popularities(3, 1.0);
    CHECK(zipf1.popularity(1) == Approx(6.0 / 11.0).epsilon(1e-12));
    CHECK(zipf1.popularity(2) == Approx(3.0 / 11.0).epsilon(1e-12));
    CHECK(zipf1.popularity(3) == Approx(2.0 / 11.0).epsilon(1e-12));

    const Catalogue flat = zipf_popularities(7, 0.0);
    for (std::uint32_t j = 1; j <= 7; ++j)
        CHECK(flat.popularity(j) == Approx(1.0 / 7.0).epsilon(1e-12));

    const Catalogue skew = zipf_popularities(100, 0.78);
    CHECK(skew.popularity(1) / skew.popularity(2) ==
          Approx(std::pow(2.0, 0.78)).epsilon(1e-12));
    CHECK(skew.popularity(1) / skew.popularity(2) < 2.0);

    CHECK_THROWS_AS(zipf_popularities(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(zipf_popularities(3, -0.1), std::invalid_argument);
}

TEST_CASE("catalogue validation", "[traffic]") {
    CHECK_THROWS_AS(Catalogue(std::vector<double>{0.2, 0.5, 0.3}),
                    std::invalid_argument); // not sorted
    CHECK_THROWS_AS(Catalogue(std::vector<double>{0.5, 0.3}),
                    std::invalid_argument); // does not sum to 1
    const Catalogue ok(std::vector<double>{0.6, 0.4});
    CHECK(ok.top_mass(1) == Approx(0.6));
    CHECK(ok.top_mass(2) == Approx(1.0));
    CHECK(ok.top_mass(5) == Approx(1.0));
    CHECK(ok.top_mass(0) == 0.0);
}

TEST_CASE("irm stream: count scaling and basic shape", "[traffic]") {
    // reference arithmetic: lambda_u A B T_s for a month-long window run
    const double month = 30.0 * 24.0 * 3600.0;
    const double expected = 0.023 * 12.0 * 12.0 * month;
    CHECK(expected == Approx(8.622e6).epsilon(0.005));

    Rng rng(1);
    const Catalogue cat = zipf_popularities(50, 0.78);
    const Window window{12.0, 12.0, 0.0};
    const RequestStream stream = generate_irm_stream(0.023, window, 3000.0, cat, rng);
    const double mean = 0.023 * 144.0 * 3000.0;
    CHECK(std::abs(static_cast<double>(stream.size()) - mean) <
          4.0 * std::sqrt(mean));
    CHECK(std::is_sorted(stream.requests.begin(), stream.requests.end(),
                         [](const Request& a, const Request& b) {
                             return a.time < b.time;
                         }));
    for (const Request& r : stream.requests) {
        CHECK(r.time >= 0.0);
        CHECK(r.time <= 3000.0);
        CHECK(r.where.x >= 0.0);
        CHECK(r.where.x <= 12.0);
        CHECK(r.where.y >= 0.0);
        CHECK(r.where.y <= 12.0);
        CHECK(r.object >= 1);
        CHECK(r.object <= 50);
    }
}

TEST_CASE("irm stream: single-object catalogue marks everything 1", "[traffic]") {
    Rng rng(2);
    const Catalogue cat(std::vector<double>{1.0});
    const RequestStream stream =
        generate_irm_stream(1.0, Window{2.0, 2.0, 0.0}, 100.0, cat, rng);
    REQUIRE(stream.size() > 0);
    for (const Request& r : stream.requests) CHECK(r.object == 1);
}

TEST_CASE("irm marks pass a chi-square goodness-of-fit check", "[traffic]") {
    Rng rng(3);
    const std::size_t f = 50;
    const Catalogue cat = zipf_popularities(f, 0.78);
    const RequestStream stream =
        generate_irm_stream(0.023, Window{12.0, 12.0, 0.0}, 3.0e5, cat, rng);
    REQUIRE(stream.size() > 900000);
    std::vector<double> counts(f, 0.0);
    for (const Request& r : stream.requests) counts[r.object - 1] += 1.0;
    double chi2 = 0.0;
    const double n = static_cast<double>(stream.size());
    for (std::size_t j = 0; j < f; ++j) {
        const double expect = n * cat.popularity(static_cast<std::uint32_t>(j + 1));
        chi2 += (counts[j] - expect) * (counts[j] - expect) / expect;
    }
    CHECK(chi2 < 74.919); // chi-square 99th percentile, 49 dof
}

TEST_CASE("irm counts have poisson dispersion and thin per object", "[traffic]") {
    Rng rng(4);
    const Catalogue cat = zipf_popularities(3, 1.0);
    const Window window{4.0, 4.0, 0.0};
    const int reps = 400;
    std::vector<double> totals, firsts;
    for (int i = 0; i < reps; ++i) {
        const RequestStream stream = generate_irm_stream(0.5, window, 20.0, cat, rng);
        totals.push_back(static_cast<double>(stream.size()));
        double first = 0.0;
        for (const Request& r : stream.requests)
            // thinning check on a sub-window: object 1 requests, left half
            if (r.object == 1 && r.where.x < 2.0) first += 1.0;
        firsts.push_back(first);
    }
    const auto mean_of = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    const auto var_of = [&](const std::vector<double>& v, double m) {
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return ss / (v.size() - 1);
    };
    const double mt = mean_of(totals);
    CHECK(mt == Approx(0.5 * 16.0 * 20.0).epsilon(0.05));
    CHECK(var_of(totals, mt) / mt == Approx(1.0).margin(0.25));
    const double mf = mean_of(firsts);
    // independent thinning: object-1 requests on half the window form a
    // Poisson process of intensity a_1 lambda_u
    CHECK(mf == Approx((6.0 / 11.0) * 0.5 * 8.0 * 20.0).epsilon(0.07));
    CHECK(var_of(firsts, mf) / mf == Approx(1.0).margin(0.25));
}

TEST_CASE("irm marking is exchangeable", "[traffic]") {
    Rng rng(5);
    const Catalogue cat = zipf_popularities(10, 0.9);
    RequestStream stream =
        generate_irm_stream(1.0, Window{3.0, 3.0, 0.0}, 200.0, cat, rng);
    std::map<std::uint32_t, int> before;
    for (const Request& r : stream.requests) ++before[r.object];
    std::reverse(stream.requests.begin(), stream.requests.end());
    std::map<std::uint32_t, int> after;
    for (const Request& r : stream.requests) ++after[r.object];
    CHECK(before == after);
}

TEST_CASE("temporal traffic: derived popularity and request bounds", "[traffic]") {
    TemporalTrafficConfig config;
    config.object_rate = 240.0;
    config.mean_lifespan = 100.0;
    config.request_rate = 4000.0;
    config.duration = 60.0;
    config.window = Window{7.0711, 5.6569, 0.0};
    CHECK(config.mean_popularity() == Approx(4000.0 / 240.0));
    CHECK(config.mean_popularity() == Approx(16.7).margin(0.05));

    Rng rng(6);
    const TemporalTrace trace = generate_temporal_trace(config, rng);
    CHECK(std::is_sorted(trace.stream.requests.begin(), trace.stream.requests.end(),
                         [](const Request& a, const Request& b) {
                             return a.time < b.time;
                         }));
    for (const Request& r : trace.stream.requests) {
        const double birth = trace.birth[r.object - 1];
        const double death = birth + trace.lifespan[r.object - 1];
        CHECK(r.time >= birth);
        CHECK(r.time <= std::min(death, config.duration) + 1e-12);
        CHECK(r.where.x <= config.window.width);
        CHECK(r.where.y <= config.window.height);
    }
}

TEST_CASE("temporal traffic: total request rate accounting", "[traffic]") {
    TemporalTrafficConfig config;
    config.object_rate = 240.0;
    config.mean_lifespan = 10.0;
    config.request_rate = 4000.0;
    config.duration = 400.0;
    config.window = Window{7.0711, 5.6569, 0.0};
    Rng rng(7);
    const TemporalTrace trace = generate_temporal_trace(config, rng);
    const double rate =
        static_cast<double>(trace.stream.size()) / config.duration;
    CHECK(rate == Approx(4000.0).epsilon(0.03));
}

TEST_CASE("temporal traffic: vanishing lifespan collapses to the birth instant",
          "[traffic]") {
    TemporalTrafficConfig config;
    config.object_rate = 10.0;
    config.mean_lifespan = 1e-13;
    config.request_rate = 100.0;
    config.duration = 20.0;
    config.window = Window{2.0, 2.0, 0.0};
    Rng rng(8);
    const TemporalTrace trace = generate_temporal_trace(config, rng);
    REQUIRE(trace.stream.size() > 0);
    for (const Request& r : trace.stream.requests)
        CHECK(r.time == Approx(trace.birth[r.object - 1]).margin(1e-9));
}
