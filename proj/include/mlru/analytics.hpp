#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mlru/geometry.hpp"
#include "mlru/traffic.hpp"

namespace mlru {

/// Characteristic-time solution of the Che fixed point.
struct CheSolution {
    double characteristic_time = 0.0; // +inf sentinel when K >= F
    double residual = 0.0;
    std::vector<double> per_object_hit;

    bool saturated() const { return std::isinf(characteristic_time); }
};

/// Solve sum_j (1 - exp(-rate a_j T)) = K for T by bisection. The left side
/// is strictly increasing in T, so the root is unique; for K >= F there is no
/// finite root and the saturated sentinel is returned.
inline CheSolution solve_characteristic_time(const Catalogue& catalogue, double rate,
                                             std::size_t capacity) {
    if (!(rate > 0.0))
        throw std::invalid_argument("characteristic time needs a positive request rate");
    if (capacity == 0)
        throw std::invalid_argument("cache capacity must be >= 1");
    const auto& pop = catalogue.popularities();

    CheSolution solution;
    if (capacity >= pop.size()) {
        solution.characteristic_time = std::numeric_limits<double>::infinity();
        solution.per_object_hit.assign(pop.size(), 1.0);
        solution.residual =
            static_cast<double>(pop.size()) - static_cast<double>(capacity);
        return solution;
    }

    const double target = static_cast<double>(capacity);
    const auto occupancy = [&](double t) {
        double sum = 0.0;
        for (double aj : pop) sum += -std::expm1(-rate * aj * t);
        return sum;
    };

    double hi = 1.0 / rate;
    while (occupancy(hi) < target) hi *= 2.0;
    double lo = 0.0;
    double mid = hi, value = 0.0;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        value = occupancy(mid);
        if (std::abs(value - target) < 1e-9) break;
        if (value < target)
            lo = mid;
        else
            hi = mid;
    }
    solution.characteristic_time = mid;
    solution.residual = value - target;
    solution.per_object_hit.resize(pop.size());
    for (std::size_t j = 0; j < pop.size(); ++j)
        solution.per_object_hit[j] = -std::expm1(-rate * pop[j] * mid);
    return solution;
}

/// Single LRU cache under IRM: P_hit = sum_j a_j (1 - exp(-rate a_j T_C)).
inline double che_single_hit(const Catalogue& catalogue, double rate,
                             std::size_t capacity) {
    const CheSolution sol = solve_characteristic_time(catalogue, rate, capacity);
    const auto& pop = catalogue.popularities();
    double hit = 0.0;
    for (std::size_t j = 0; j < pop.size(); ++j)
        hit += pop[j] * sol.per_object_hit[j];
    return hit;
}

/// CIA validity: coverage cells must dominate Voronoi cells, pi R_b^2 > |V|.
inline bool cia_applicable(double voronoi_area, double coverage_radius) {
    return M_PI * coverage_radius * coverage_radius > voronoi_area;
}

/// multi-LRU-One through the cache independence approximation: each cache
/// runs single-LRU on its Voronoi traffic (rate lambda_u |V|), and a user
/// covered by m cells misses only if all m independent caches miss.
inline double che_multi_one_hit(const Catalogue& catalogue, double lambda_u,
                                double voronoi_area, const CoverageProfile& profile,
                                std::size_t capacity) {
    if (!(voronoi_area > 0.0))
        throw std::invalid_argument("voronoi area must be positive");
    const double rate = lambda_u * voronoi_area;
    const CheSolution sol = solve_characteristic_time(catalogue, rate, capacity);
    const auto& pop = catalogue.popularities();
    double hit = 0.0;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const double exponent_unit = sol.saturated()
                                         ? std::numeric_limits<double>::infinity()
                                         : pop[j] * rate * sol.characteristic_time;
        double per_object = 0.0;
        for (std::size_t m = 1; m < profile.pmf.size(); ++m)
            per_object +=
                profile.pmf[m] * -std::expm1(-static_cast<double>(m) * exponent_unit);
        hit += pop[j] * per_object;
    }
    return hit;
}

/// Union-of-discs surface heuristic: |A_m| = |A_max| (1 - e^(-m rho)) with
/// |A_max| = (5/3)^2 pi R_b^2 and rho = -ln(1 - |A_1|/|A_max|) = ln(25/16),
/// so the m = 1 value is exactly one disc.
struct SurfaceModel {
    double coverage_radius = 0.0;
    double decay_rate = 0.0;     // rho
    double max_area = 0.0;       // |A_max|, the m -> infinity asymptote
    std::vector<double> areas;   // |A_m|, m = 0..M
};

inline SurfaceModel build_surface_model(double coverage_radius,
                                        std::size_t max_coverage) {
    if (!(coverage_radius > 0.0))
        throw std::invalid_argument("coverage radius must be positive");
    SurfaceModel model;
    model.coverage_radius = coverage_radius;
    const double disc = M_PI * coverage_radius * coverage_radius;
    model.max_area = disc * (5.0 / 3.0) * (5.0 / 3.0);
    model.decay_rate = -std::log(1.0 - disc / model.max_area); // ln(25/16)
    model.areas.resize(max_coverage + 1);
    for (std::size_t m = 0; m <= max_coverage; ++m)
        model.areas[m] =
            model.max_area * -std::expm1(-model.decay_rate * static_cast<double>(m));
    return model;
}

/// multi-LRU-All through the cache similarity approximation: every cache sees
/// the traffic of its whole coverage cell (rate lambda_u pi R_b^2), and a user
/// covered by m cells misses only if no same-object request fell in the union
/// surface |A_m| within the characteristic time.
inline double che_multi_all_hit(const Catalogue& catalogue, double lambda_u,
                                const SurfaceModel& surfaces,
                                const CoverageProfile& profile, std::size_t capacity) {
    const double rb = surfaces.coverage_radius;
    const double rate = lambda_u * M_PI * rb * rb;
    const CheSolution sol = solve_characteristic_time(catalogue, rate, capacity);
    const auto& pop = catalogue.popularities();
    const std::size_t m_max = std::min(profile.pmf.size(), surfaces.areas.size());
    double hit = 0.0;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const double base = sol.saturated() ? std::numeric_limits<double>::infinity()
                                            : pop[j] * lambda_u * sol.characteristic_time;
        double per_object = 0.0;
        for (std::size_t m = 1; m < m_max; ++m)
            per_object += profile.pmf[m] * -std::expm1(-surfaces.areas[m] * base);
        hit += pop[j] * per_object;
    }
    return hit;
}

inline double che_multi_all_hit(const Catalogue& catalogue, double lambda_u,
                                double coverage_radius, const CoverageProfile& profile,
                                std::size_t capacity) {
    const SurfaceModel surfaces =
        build_surface_model(coverage_radius, profile.max_coverage());
    return che_multi_all_hit(catalogue, lambda_u, surfaces, profile, capacity);
}

enum class TwoCachePolicy { One, All };

/// Two-cache network in which both caches cover the whole area |A| = 2|V|.
/// One: T_C from the Voronoi rate, total hit over the doubled area (CIA).
/// All: both caches behave as one cache fed by the whole area (CSA, exact).
inline double two_cache_hit(TwoCachePolicy policy, const Catalogue& catalogue,
                            double lambda_u, double voronoi_area,
                            std::size_t capacity) {
    if (!(voronoi_area > 0.0))
        throw std::invalid_argument("voronoi area must be positive");
    if (capacity >= catalogue.size())
        throw std::invalid_argument("two_cache_hit requires K < F");
    const double total_area = 2.0 * voronoi_area;
    const double solve_rate =
        lambda_u * (policy == TwoCachePolicy::One ? voronoi_area : total_area);
    const CheSolution sol = solve_characteristic_time(catalogue, solve_rate, capacity);
    const auto& pop = catalogue.popularities();
    double hit = 0.0;
    for (double aj : pop)
        hit += aj * -std::expm1(-aj * lambda_u * total_area * sol.characteristic_time);
    return hit;
}

/// Monte Carlo estimate of the expected union surface |A_m| of the m Boolean
/// discs covering a typical point, for PPP stations. Entries with no observed
/// sample stay NaN.
inline std::vector<double> monte_carlo_union_areas(double lambda_b,
                                                   double coverage_radius,
                                                   std::size_t max_coverage,
                                                   std::size_t n_fields, Rng& rng) {
    if (!(lambda_b > 0.0) || !(coverage_radius > 0.0))
        throw std::invalid_argument("monte_carlo_union_areas: bad arguments");
    const double half = 4.0 * coverage_radius;
    std::vector<double> sum(max_coverage + 1, 0.0);
    std::vector<std::uint64_t> count(max_coverage + 1, 0);
    std::vector<Point> covering;
    for (std::size_t trial = 0; trial < n_fields; ++trial) {
        covering.clear();
        const std::uint64_t n = rng.poisson(lambda_b * 4.0 * half * half);
        for (std::uint64_t i = 0; i < n; ++i) {
            const Point s{rng.uniform(-half, half), rng.uniform(-half, half)};
            if (s.x * s.x + s.y * s.y < coverage_radius * coverage_radius)
                covering.push_back(s);
        }
        const std::size_t m = std::min(covering.size(), max_coverage);
        if (m == 0) {
            ++count[0];
            continue;
        }
        // union area of the covering discs, by sampling their bounding box
        const double box = 2.0 * coverage_radius;
        constexpr std::size_t probes = 4096;
        std::size_t inside = 0;
        for (std::size_t k = 0; k < probes; ++k) {
            const Point p{rng.uniform(-box, box), rng.uniform(-box, box)};
            for (const Point& s : covering) {
                if (squared_distance(p, s) < coverage_radius * coverage_radius) {
                    ++inside;
                    break;
                }
            }
        }
        sum[m] += 4.0 * box * box * static_cast<double>(inside) /
                  static_cast<double>(probes);
        ++count[m];
    }
    std::vector<double> area(max_coverage + 1,
                             std::numeric_limits<double>::quiet_NaN());
    area[0] = 0.0;
    for (std::size_t m = 1; m <= max_coverage; ++m)
        if (count[m] > 0) area[m] = sum[m] / static_cast<double>(count[m]);
    return area;
}

} // namespace mlru
