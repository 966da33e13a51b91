#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mlru/analytics.hpp"
#include "mlru/geometry.hpp"
#include "mlru/policies.hpp"
#include "mlru/rng.hpp"
#include "mlru/traffic.hpp"

namespace mlru {

enum class TrafficKind { Irm, Temporal };

/// Everything a simulation run needs. Defaults follow the reference setup:
/// 12x12 km window, lambda_b = 0.5, F = 10^4, gamma = 0.78, desk-scaled to
/// about 10^6 requests over 20 replications.
struct ExperimentConfig {
    FieldKind geometry = FieldKind::Ppp;
    double station_intensity = 0.5;   // lambda_b [km^-2]
    double coverage_radius = 1.13;    // R_b [km]
    double window_width = 12.0;       // inner window [km]
    double window_height = 12.0;
    double margin = -1.0;             // station over-generation margin; <0 = R_b

    double request_intensity = 0.023; // lambda_u [km^-2 s^-1]
    double duration = 0.0;            // seconds; <=0 derives from target_requests
    double target_requests = 1e6;

    std::size_t catalogue_size = 10000;
    double zipf_exponent = 0.78;

    std::size_t cache_capacity = 100; // K
    double alpha = 0.0;               // if >0, K = round(alpha * F)

    PolicyKind policy;
    TrafficKind traffic = TrafficKind::Irm;
    TemporalTrafficConfig temporal;

    std::size_t replications = 20;
    std::uint64_t base_seed = 1;
    double warmup_fraction = 0.0;     // fraction of the horizon left uncounted
    std::size_t gfi_probe_points = 10000;
    std::size_t max_coverage = 50;    // M
    std::size_t mc_profile_samples = 200000;
    std::size_t threads = 0;          // 0 = hardware concurrency

    // fixed station layout (e.g. the two-cache network); overrides sampling
    std::vector<Point> explicit_stations;

    std::size_t effective_capacity() const {
        if (alpha > 0.0)
            return std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::llround(alpha * static_cast<double>(catalogue_size))));
        return cache_capacity;
    }

    double effective_margin() const {
        return margin < 0.0 ? coverage_radius : margin;
    }

    Window field_window() const {
        if (traffic == TrafficKind::Temporal)
            return Window{temporal.window.width, temporal.window.height,
                          effective_margin()};
        return Window{window_width, window_height, effective_margin()};
    }

    double effective_duration() const {
        if (traffic == TrafficKind::Temporal) return temporal.duration;
        if (duration > 0.0) return duration;
        return target_requests / (request_intensity * window_width * window_height);
    }

    void validate() const {
        policy.validate();
        Window{window_width, window_height, std::max(0.0, effective_margin())}.validate();
        if (!(station_intensity > 0.0) || !(coverage_radius > 0.0))
            throw std::invalid_argument("geometry parameters must be positive");
        if (traffic == TrafficKind::Irm) {
            if (!(request_intensity > 0.0) || !(effective_duration() > 0.0))
                throw std::invalid_argument("traffic parameters must be positive");
            if (catalogue_size == 0)
                throw std::invalid_argument("catalogue must not be empty");
            if (effective_capacity() == 0 || effective_capacity() > catalogue_size)
                throw std::invalid_argument("cache capacity must be in [1, F]");
        } else {
            temporal.validate();
            if (policy.is_static())
                throw std::invalid_argument(
                    "static policies need a fixed catalogue; temporal traffic is "
                    "restricted to the LRU family");
        }
        if (replications == 0)
            throw std::invalid_argument("at least one replication required");
        if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
            throw std::invalid_argument("warmup fraction must be in [0,1)");
        if (alpha < 0.0 || alpha > 1.0)
            throw std::invalid_argument("alpha must be in (0,1]");
    }
};

struct HitReport {
    std::uint64_t requests = 0; // counted (post-warmup) requests
    std::uint64_t hits = 0;
    double hit_probability = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> per_replication;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci95_half_width = 0.0;
    std::uint64_t base_seed = 0;
};

/// Shared inputs of the static policies, reused across replications.
struct StaticContext {
    CoverageProfile profile;
    std::vector<double> pbp_inclusion;
};

inline StationField make_station_field(const ExperimentConfig& config, Rng& rng) {
    const Window window = config.field_window();
    if (!config.explicit_stations.empty()) {
        StationField field;
        field.positions = config.explicit_stations;
        field.intensity = config.station_intensity;
        field.coverage_radius = config.coverage_radius;
        field.window = window;
        field.kind = config.geometry;
        return field;
    }
    if (config.geometry == FieldKind::Ppp)
        return sample_ppp_stations(config.station_intensity, window,
                                   config.coverage_radius, rng);
    return build_lattice_stations(config.station_intensity, window,
                                  config.coverage_radius, rng);
}

/// Coverage profile matching the configured geometry: analytic Poisson pmf
/// for PPP, Monte Carlo for the lattice (deterministic in the base seed).
inline CoverageProfile experiment_coverage_profile(const ExperimentConfig& config) {
    if (config.geometry == FieldKind::Ppp)
        return coverage_profile_ppp_boolean(config.station_intensity,
                                            config.coverage_radius,
                                            config.max_coverage);
    Rng rng = derive_rng(config.base_seed ^ 0x9e0f11eULL, 0xbeefULL);
    ExperimentConfig probe = config;
    return coverage_profile_monte_carlo(
        [&probe](Rng& r) { return make_station_field(probe, r); },
        config.coverage_radius, config.max_coverage, config.mc_profile_samples, rng);
}

inline StaticContext make_static_context(const ExperimentConfig& config) {
    StaticContext ctx;
    ctx.profile = experiment_coverage_profile(config);
    if (config.policy.family == PolicyKind::Family::Pbp) {
        const Catalogue catalogue =
            zipf_popularities(config.catalogue_size, config.zipf_exponent);
        ctx.pbp_inclusion =
            pbp_solve(catalogue, ctx.profile, config.effective_capacity());
    }
    return ctx;
}

namespace detail {

inline std::vector<CacheInventory> build_caches(const ExperimentConfig& config,
                                                const StationField& field,
                                                const Catalogue& catalogue,
                                                const StaticContext* ctx,
                                                Rng& rng_policy) {
    using Family = PolicyKind::Family;
    const std::size_t k = config.effective_capacity();
    const std::size_t n = field.size();
    const auto hint = static_cast<std::uint32_t>(
        config.traffic == TrafficKind::Irm ? config.catalogue_size : 0);

    std::vector<CacheInventory> caches;
    caches.reserve(n);
    switch (config.policy.family) {
    case Family::Lfu: {
        const CacheInventory filled = lfu_fill(catalogue, k);
        caches.assign(n, filled);
        break;
    }
    case Family::Pbp: {
        std::vector<double> inclusion;
        const std::vector<double>* b = ctx ? &ctx->pbp_inclusion : nullptr;
        if (!b || b->empty()) {
            const StaticContext local = make_static_context(config);
            inclusion = local.pbp_inclusion;
            b = &inclusion;
        }
        for (std::size_t s = 0; s < n; ++s)
            caches.push_back(pbp_sample(*b, k, rng_policy));
        break;
    }
    case Family::Gfi: {
        std::vector<Point> probes(config.gfi_probe_points);
        for (auto& p : probes)
            p = {rng_policy.uniform(0.0, field.window.width),
                 rng_policy.uniform(0.0, field.window.height)};
        caches = gfi_place(field, probes, catalogue, k);
        break;
    }
    default:
        for (std::size_t s = 0; s < n; ++s) caches.emplace_back(k, hint);
        break;
    }
    return caches;
}

struct ReplayCounters {
    std::uint64_t requests = 0;
    std::uint64_t hits = 0;
};

inline void replay_request(const PolicyKind& policy,
                           std::vector<CacheInventory>& caches,
                           const CoverageIndex& index, Point where,
                           std::uint32_t object, bool counted, Rng& rng_policy,
                           std::vector<std::uint32_t>& covering, HitOutcome& outcome,
                           ReplayCounters& counters) {
    index.covering(where, covering);
    const std::optional<std::uint32_t> closest =
        covering.empty() ? std::nullopt
                         : std::optional<std::uint32_t>(covering.front());
    handle_request(policy, caches, covering, closest, object, rng_policy, outcome);
    if (counted) {
        ++counters.requests;
        counters.hits += outcome.hit ? 1 : 0;
    }
}

} // namespace detail

/// One seeded replication: sample the field, replay the request stream in
/// time order, count hits after the warm-up point. Identical (config, seed)
/// pairs give identical reports.
inline HitReport run_replication(const ExperimentConfig& config, std::uint64_t seed,
                                 const StaticContext* ctx = nullptr) {
    config.validate();
    Rng rng_scene = derive_rng(seed, 0x5ce9e5a1ULL);
    Rng rng_policy = derive_rng(seed, 0x9011c7b3ULL);

    const StationField field = make_station_field(config, rng_scene);
    const CoverageIndex index(field);
    const Catalogue catalogue =
        config.traffic == TrafficKind::Irm
            ? zipf_popularities(config.catalogue_size, config.zipf_exponent)
            : Catalogue(std::vector<double>{1.0});

    std::vector<CacheInventory> caches =
        detail::build_caches(config, field, catalogue, ctx, rng_policy);

    detail::ReplayCounters counters;
    std::vector<std::uint32_t> covering;
    HitOutcome outcome;

    const double horizon = config.effective_duration();
    const double warmup_until = config.warmup_fraction * horizon;

    if (config.traffic == TrafficKind::Irm) {
        const double area = config.window_width * config.window_height;
        const double rate = config.request_intensity * area;
        const double expected = rate * horizon;
        const std::size_t n_chunks =
            std::max<std::size_t>(1, static_cast<std::size_t>(expected / 262144.0) + 1);
        const double chunk_span = horizon / static_cast<double>(n_chunks);
        std::vector<double> times;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const double lo = chunk_span * static_cast<double>(c);
            const double hi = c + 1 == n_chunks ? horizon : lo + chunk_span;
            const std::uint64_t n = rng_scene.poisson(rate * (hi - lo));
            times.resize(n);
            for (auto& t : times) t = rng_scene.uniform(lo, hi);
            std::sort(times.begin(), times.end());
            for (double t : times) {
                const Point where{rng_scene.uniform(0.0, config.window_width),
                                  rng_scene.uniform(0.0, config.window_height)};
                const std::uint32_t object = catalogue.sample(rng_scene);
                detail::replay_request(config.policy, caches, index, where, object,
                                       t >= warmup_until, rng_policy, covering,
                                       outcome, counters);
            }
        }
    } else {
        TemporalTrafficConfig temporal = config.temporal;
        temporal.window = Window{temporal.window.width, temporal.window.height, 0.0};
        const TemporalTrace trace = generate_temporal_trace(temporal, rng_scene);
        for (const Request& r : trace.stream.requests)
            detail::replay_request(config.policy, caches, index, r.where, r.object,
                                   r.time >= warmup_until, rng_policy, covering,
                                   outcome, counters);
    }

    HitReport report;
    report.base_seed = seed;
    report.requests = counters.requests;
    report.hits = counters.hits;
    if (counters.requests > 0)
        report.hit_probability = static_cast<double>(counters.hits) /
                                 static_cast<double>(counters.requests);
    report.per_replication = {report.hit_probability};
    report.mean = report.hit_probability;
    return report;
}

/// Replications with seeds base_seed + i, run in parallel, aggregated into a
/// mean and a normal-approximation 95% confidence half-width.
inline HitReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    StaticContext ctx;
    const StaticContext* ctx_ptr = nullptr;
    if (config.policy.family == PolicyKind::Family::Pbp) {
        ctx = make_static_context(config);
        ctx_ptr = &ctx;
    }

    const std::size_t n = config.replications;
    std::vector<HitReport> partial(n);
    std::vector<std::exception_ptr> errors(n);
    const std::size_t hw = config.threads > 0
                               ? config.threads
                               : std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(n, hw);

    const auto body = [&](std::size_t worker) {
        for (std::size_t i = worker; i < n; i += workers) {
            try {
                partial[i] = run_replication(config, config.base_seed + i, ctx_ptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    HitReport report;
    report.base_seed = config.base_seed;
    report.per_replication.reserve(n);
    double sum = 0.0;
    for (const HitReport& r : partial) {
        report.requests += r.requests;
        report.hits += r.hits;
        report.per_replication.push_back(r.hit_probability);
        sum += r.hit_probability;
    }
    if (report.requests > 0)
        report.hit_probability =
            static_cast<double>(report.hits) / static_cast<double>(report.requests);
    report.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double p : report.per_replication) ss += (p - report.mean) * (p - report.mean);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        report.ci95_half_width = 1.96 * sd / std::sqrt(static_cast<double>(n));
    }
    return report;
}

enum class SweepVariable { CoverageRadius, ZipfExponent, Alpha, InsertProbability };

struct SweepPoint {
    double value = 0.0;
    double mean_coverage = 0.0; // N_bs for the point's geometry
    HitReport report;
};

inline ExperimentConfig apply_sweep_value(ExperimentConfig config, SweepVariable var,
                                          double value) {
    switch (var) {
    case SweepVariable::CoverageRadius: config.coverage_radius = value; break;
    case SweepVariable::ZipfExponent: config.zipf_exponent = value; break;
    case SweepVariable::Alpha: config.alpha = value; break;
    case SweepVariable::InsertProbability: config.policy.insert_probability = value; break;
    }
    return config;
}

/// One aggregated report per sweep value. Seeds are offset per point so no
/// replication stream is reused across points; the N_bs column comes from the
/// analytic profile (PPP) or a seeded Monte Carlo profile (lattice).
inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& config,
                                         SweepVariable var,
                                         const std::vector<double>& values) {
    if (values.empty())
        throw std::invalid_argument("sweep needs at least one value");
    std::vector<SweepPoint> points;
    points.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ExperimentConfig point_config = apply_sweep_value(config, var, values[i]);
        point_config.base_seed =
            config.base_seed + static_cast<std::uint64_t>(i) * config.replications;
        SweepPoint point;
        point.value = values[i];
        ExperimentConfig profile_config = point_config;
        profile_config.base_seed = config.base_seed; // N_bs independent of the point
        point.mean_coverage =
            mean_coverage_number(experiment_coverage_profile(profile_config));
        point.report = run_experiment(point_config);
        points.push_back(std::move(point));
    }
    return points;
}

} // namespace mlru
