#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mlru/geometry.hpp"
#include "mlru/rng.hpp"

namespace mlru {

/// Object popularity vector, non-increasing, summing to 1. Object ids are
/// 1-based ranks: object 1 is the most popular.
class Catalogue {
public:
    Catalogue() = default;

    explicit Catalogue(std::vector<double> popularities)
        : popularity_(std::move(popularities)) {
        if (popularity_.empty())
            throw std::invalid_argument("catalogue must not be empty");
        double total = 0.0;
        for (std::size_t j = 0; j < popularity_.size(); ++j) {
            if (!(popularity_[j] > 0.0))
                throw std::invalid_argument("popularities must be positive");
            if (j > 0 && popularity_[j] > popularity_[j - 1] + 1e-12)
                throw std::invalid_argument("popularities must be non-increasing");
            total += popularity_[j];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("popularities must sum to 1");
        cdf_.resize(popularity_.size());
        std::partial_sum(popularity_.begin(), popularity_.end(), cdf_.begin());
        cdf_.back() = 1.0;
    }

    std::size_t size() const { return popularity_.size(); }

    /// Popularity a_j of object id j (1-based).
    double popularity(std::uint32_t object) const { return popularity_[object - 1]; }

    const std::vector<double>& popularities() const { return popularity_; }

    /// Total popularity mass of the n most popular objects.
    double top_mass(std::size_t n) const {
        if (n == 0) return 0.0;
        return cdf_[std::min(n, cdf_.size()) - 1];
    }

    std::uint32_t sample(Rng& rng) const {
        return static_cast<std::uint32_t>(rng.pick(cdf_) + 1);
    }

private:
    std::vector<double> popularity_;
    std::vector<double> cdf_;
};

/// Zipf popularities a_j = j^-gamma / sum_k k^-gamma.
inline Catalogue zipf_popularities(std::size_t catalogue_size, double gamma) {
    if (catalogue_size == 0)
        throw std::invalid_argument("catalogue size must be >= 1");
    if (gamma < 0.0)
        throw std::invalid_argument("zipf exponent must be >= 0");
    std::vector<double> weights(catalogue_size);
    double norm = 0.0;
    for (std::size_t j = 0; j < catalogue_size; ++j) {
        weights[j] = std::pow(static_cast<double>(j + 1), -gamma);
        norm += weights[j];
    }
    for (double& w : weights) w /= norm;
    return Catalogue(std::move(weights));
}

struct Request {
    double time = 0.0;
    Point where;
    std::uint32_t object = 0;
};

/// Time-sorted marked request events.
struct RequestStream {
    std::vector<Request> requests;
    double intensity = 0.0; // lambda_u, requests per km^2 per time unit
    double duration = 0.0;

    std::size_t size() const { return requests.size(); }
};

inline void sort_by_time(std::vector<Request>& requests) {
    std::stable_sort(requests.begin(), requests.end(),
                     [](const Request& a, const Request& b) { return a.time < b.time; });
}

/// Spatial IRM: Poisson(lambda_u * |W| * duration) requests, times uniform on
/// [0,duration], locations uniform on the inner window, marks i.i.d. from the
/// catalogue.
inline RequestStream generate_irm_stream(double lambda_u, const Window& window,
                                         double duration, const Catalogue& catalogue,
                                         Rng& rng) {
    window.validate();
    if (!(lambda_u > 0.0) || !(duration > 0.0))
        throw std::invalid_argument("request intensity and duration must be positive");

    RequestStream stream;
    stream.intensity = lambda_u;
    stream.duration = duration;
    const std::uint64_t n = rng.poisson(lambda_u * window.inner_area() * duration);
    stream.requests.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Request r;
        r.time = rng.uniform(0.0, duration);
        r.where = {rng.uniform(0.0, window.width), rng.uniform(0.0, window.height)};
        r.object = catalogue.sample(rng);
        stream.requests.push_back(r);
    }
    sort_by_time(stream.requests);
    return stream;
}

/// Traffic with temporal locality: objects are born, live a random lifespan,
/// and attract a Poisson number of requests while alive. `pulse_decay`
/// shapes the request density inside a lifespan: 0 keeps it flat, d > 0
/// weights it by e^(-d s / tau_j), front-loading the object's burst the way
/// shot-noise traffic models do.
struct TemporalTrafficConfig {
    double object_rate = 240.0;    // lambda_obj, births per time unit
    double mean_lifespan = 100.0;  // tau bar
    double request_rate = 4000.0;  // lambda_u, total requests per time unit
    double duration = 180.0;       // T
    Window window{7.0711, 5.6569, 0.0};
    double pulse_decay = 0.0;

    double mean_popularity() const { return request_rate / object_rate; }

    void validate() const {
        window.validate();
        if (!(object_rate > 0.0) || !(mean_lifespan > 0.0) ||
            !(request_rate > 0.0) || !(duration > 0.0))
            throw std::invalid_argument("temporal traffic parameters must be positive");
        if (pulse_decay < 0.0)
            throw std::invalid_argument("pulse decay must be non-negative");
    }
};

struct TemporalTrace {
    std::vector<double> birth;    // per object id - 1
    std::vector<double> lifespan;
    RequestStream stream;
};

/// Object births form a Poisson process of rate lambda_obj on [0,T]; each
/// object draws an Exponential(tau bar) lifespan and Poisson(P bar) requests
/// whose times are uniform over [birth, min(birth+lifespan, T)].
inline TemporalTrace generate_temporal_trace(const TemporalTrafficConfig& config,
                                             Rng& rng) {
    config.validate();
    TemporalTrace trace;
    trace.stream.intensity =
        config.request_rate / config.window.inner_area();
    trace.stream.duration = config.duration;

    const std::uint64_t n_objects = rng.poisson(config.object_rate * config.duration);
    trace.birth.resize(n_objects);
    for (auto& b : trace.birth) b = rng.uniform(0.0, config.duration);
    std::sort(trace.birth.begin(), trace.birth.end());

    trace.lifespan.resize(n_objects);
    const double mean_requests = config.mean_popularity();
    const double decay = config.pulse_decay;
    for (std::uint64_t id = 1; id <= n_objects; ++id) {
        const double birth = trace.birth[id - 1];
        const double life = rng.exponential(config.mean_lifespan);
        trace.lifespan[id - 1] = life;
        const double end = std::min(birth + life, config.duration);
        const std::uint64_t n_req = rng.poisson(mean_requests);
        for (std::uint64_t k = 0; k < n_req; ++k) {
            Request r;
            if (end <= birth) {
                r.time = birth;
            } else if (decay == 0.0) {
                r.time = rng.uniform(birth, end);
            } else {
                // truncated exponential on [0, span]
                const double span = end - birth;
                const double u = rng.uniform();
                r.time = birth - span / decay *
                                     std::log1p(-u * (1.0 - std::exp(-decay)));
            }
            r.where = {rng.uniform(0.0, config.window.width),
                       rng.uniform(0.0, config.window.height)};
            r.object = static_cast<std::uint32_t>(id);
            trace.stream.requests.push_back(r);
        }
    }
    sort_by_time(trace.stream.requests);
    return trace;
}

inline RequestStream generate_temporal_stream(const TemporalTrafficConfig& config,
                                              Rng& rng) {
    return generate_temporal_trace(config, rng).stream;
}

} // namespace mlru
