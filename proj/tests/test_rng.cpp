#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mlru/rng.hpp"

using namespace mlru;

TEST_CASE("uniform stays in [0,1) and reproduces under the same seed", "[rng]") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        all_equal = all_equal && (x == b.uniform());
        any_diff = any_diff || (x != c.uniform());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("poisson sampler matches mean and variance", "[rng]") {
    for (const double mean : {0.5, 3.0, 40.0, 5000.0}) {
        Rng rng(7);
        const int n = 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(rng.poisson(mean));
            sum += k;
            sum2 += k * k;
        }
        const double m = sum / n;
        const double var = sum2 / n - m * m;
        // mean of n draws ~ Normal(mean, mean/n): 4 sigma band
        const double tol = 4.0 * std::sqrt(mean / n);
        CHECK(std::abs(m - mean) < tol);
        CHECK(var / mean > 0.9);
        CHECK(var / mean < 1.1);
    }
}

TEST_CASE("exponential sampler has the requested mean", "[rng]") {
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.exponential(2.5);
    CHECK(std::abs(sum / n - 2.5) < 0.04);
}

TEST_CASE("cdf pick reproduces the distribution", "[rng]") {
    const std::vector<double> cdf{0.5, 0.8, 1.0};
    Rng rng(3);
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.pick(cdf)];
    CHECK(std::abs(counts[0] / double(n) - 0.5) < 0.01);
    CHECK(std::abs(counts[1] / double(n) - 0.3) < 0.01);
    CHECK(std::abs(counts[2] / double(n) - 0.2) < 0.01);
}

TEST_CASE("derived streams are independent of each other", "[rng]") {
    Rng a = derive_rng(99, 1);
    Rng b = derive_rng(99, 2);
    CHECK(a.uniform() != b.uniform());
}
