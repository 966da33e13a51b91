#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlru/geometry.hpp"
#include "mlru/traffic.hpp"

namespace mlru {

/// LRU-ordered cache inventory, MRU first, at most `capacity` distinct
/// objects. Backed by an intrusive doubly-linked list keyed by object id
/// (ids are 1-based, slot 0 is the sentinel), so touch/insert/contains are
/// O(1) without hashing.
class CacheInventory {
public:
    explicit CacheInventory(std::size_t capacity, std::uint32_t max_object_hint = 0)
        : capacity_(capacity) {
        if (capacity_ == 0)
            throw std::invalid_argument("cache capacity must be >= 1");
        reserve_ids(max_object_hint);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }

    bool contains(std::uint32_t object) const {
        return object < present_.size() && present_[object];
    }

    /// Move a present object to the MRU position. Returns false on miss.
    bool touch(std::uint32_t object) {
        if (!contains(object)) return false;
        unlink(object);
        link_front(object);
        return true;
    }

    /// Insert an absent object at MRU; evicts and returns the LRU object if
    /// the cache was full. Inserting a present object is a caller bug.
    std::optional<std::uint32_t> insert(std::uint32_t object) {
        if (object == 0)
            throw std::invalid_argument("object ids are 1-based");
        if (contains(object))
            throw std::logic_error("insert of present object (use touch)");
        reserve_ids(object);
        link_front(object);
        present_[object] = 1;
        ++size_;
        if (size_ <= capacity_) return std::nullopt;
        const std::uint32_t victim = prev_[0];
        unlink(victim);
        present_[victim] = 0;
        --size_;
        return victim;
    }

    /// Contents MRU-first.
    std::vector<std::uint32_t> items() const {
        std::vector<std::uint32_t> out;
        out.reserve(size_);
        for (std::uint32_t cur = next_[0]; cur != 0; cur = next_[cur])
            out.push_back(cur);
        return out;
    }

private:
    void reserve_ids(std::uint32_t max_object) {
        const std::size_t need = static_cast<std::size_t>(max_object) + 1;
        if (next_.size() >= need && !next_.empty()) return;
        const std::size_t n = std::max<std::size_t>(need, 16);
        next_.resize(n, 0);
        prev_.resize(n, 0);
        present_.resize(n, 0);
    }

    void link_front(std::uint32_t object) {
        const std::uint32_t head = next_[0];
        next_[object] = head;
        prev_[object] = 0;
        prev_[head] = object;
        next_[0] = object;
    }

    void unlink(std::uint32_t object) {
        const std::uint32_t p = prev_[object];
        const std::uint32_t n = next_[object];
        next_[p] = n;
        prev_[n] = p;
    }

    std::size_t capacity_;
    std::size_t size_ = 0;
    std::vector<std::uint32_t> next_{0};
    std::vector<std::uint32_t> prev_{0};
    std::vector<std::uint8_t> present_{1};
};

inline bool lru_touch(CacheInventory& inventory, std::uint32_t object) {
    return inventory.touch(object);
}

inline std::optional<std::uint32_t> lru_insert(CacheInventory& inventory,
                                               std::uint32_t object) {
    return inventory.insert(object);
}

struct PolicyKind {
    enum class Family {
        SingleLru,
        QLru,
        Lfu,
        MultiLruOne,
        MultiLruAll,
        QMultiLruAll,
        Pbp,
        Gfi,
    };

    Family family = Family::SingleLru;
    double insert_probability = 1.0; // q, used by QLru and QMultiLruAll

    bool is_static() const {
        return family == Family::Lfu || family == Family::Pbp || family == Family::Gfi;
    }

    void validate() const {
        if (!(insert_probability > 0.0) || insert_probability > 1.0)
            throw std::invalid_argument("insert probability must be in (0,1]");
    }
};

struct HitOutcome {
    bool hit = false;
    std::optional<std::uint32_t> serving_station;
    std::vector<std::uint32_t> insertions;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> evictions; // (station, object)

    void reset() {
        hit = false;
        serving_station.reset();
        insertions.clear();
        evictions.clear();
    }
};

/// Apply one request to the caches of the covering stations.
///
/// `covering` lists covering station indices nearest first; `closest_overall`
/// is the Voronoi station (it may not cover the user, in which case every
/// policy leaves the caches alone and the request is a miss).
///
/// Hit accounting: the multi-LRU and static policies serve from any covering
/// cache; single-LRU and q-LRU only ever consult the closest covering
/// station, for the hit as well as for the update.
inline void handle_request(const PolicyKind& policy,
                           std::vector<CacheInventory>& caches,
                           std::span<const std::uint32_t> covering,
                           std::optional<std::uint32_t> closest_overall,
                           std::uint32_t object, Rng& rng, HitOutcome& out) {
    out.reset();
    for (std::uint32_t s : covering)
        if (s >= caches.size())
            throw std::out_of_range("covering station index out of range");
    if (closest_overall && *closest_overall >= caches.size())
        throw std::out_of_range("closest station index out of range");
    if (covering.empty()) return; // uncovered: miss, no action

    using Family = PolicyKind::Family;
    const auto record_insert = [&](std::uint32_t station) {
        if (auto evicted = caches[station].insert(object)) {
            out.evictions.emplace_back(station, *evicted);
        }
        out.insertions.push_back(station);
    };

    switch (policy.family) {
    case Family::SingleLru:
    case Family::QLru: {
        const std::uint32_t station = covering.front();
        if (caches[station].touch(object)) {
            out.hit = true;
            out.serving_station = station;
        } else if (policy.family == Family::SingleLru ||
                   rng.uniform() < policy.insert_probability) {
            record_insert(station);
        }
        return;
    }
    case Family::MultiLruOne: {
        // Action stays local to the nearest covering cache: it is refreshed
        // when it holds the object itself, a miss anywhere inserts there, and
        // a hit served by a farther cache moves nothing.
        for (std::uint32_t s : covering) {
            if (caches[s].contains(object)) {
                out.hit = true;
                out.serving_station = s; // nearest holding cache
                if (s == covering.front()) caches[s].touch(object);
                return;
            }
        }
        record_insert(covering.front());
        return;
    }
    case Family::MultiLruAll:
    case Family::QMultiLruAll: {
        for (std::uint32_t s : covering) {
            if (caches[s].touch(object)) {
                if (!out.hit) {
                    out.hit = true;
                    out.serving_station = s;
                }
            }
        }
        if (out.hit) return;
        for (std::uint32_t s : covering) {
            if (policy.family == Family::MultiLruAll ||
                rng.uniform() < policy.insert_probability) {
                record_insert(s);
            }
        }
        return;
    }
    case Family::Lfu:
    case Family::Pbp:
    case Family::Gfi: {
        for (std::uint32_t s : covering) {
            if (caches[s].contains(object)) {
                out.hit = true;
                out.serving_station = s;
                return;
            }
        }
        return;
    }
    }
}

inline HitOutcome handle_request(const PolicyKind& policy,
                                 std::vector<CacheInventory>& caches,
                                 std::span<const std::uint32_t> covering,
                                 std::optional<std::uint32_t> closest_overall,
                                 std::uint32_t object, Rng& rng) {
    HitOutcome out;
    handle_request(policy, caches, covering, closest_overall, object, rng, out);
    return out;
}

/// LFU static placement: the K most popular objects.
inline CacheInventory lfu_fill(const Catalogue& catalogue, std::size_t capacity) {
    if (capacity > catalogue.size())
        throw std::invalid_argument("lfu_fill: capacity exceeds catalogue");
    CacheInventory inventory(capacity, static_cast<std::uint32_t>(catalogue.size()));
    for (std::uint32_t j = static_cast<std::uint32_t>(capacity); j >= 1; --j)
        inventory.insert(j);
    return inventory;
}

/// Hit probability upper bound: a user covered by m cells can at best see the
/// mK most popular objects spread over those caches.
inline double hit_upper_bound(const Catalogue& catalogue,
                              const CoverageProfile& profile, std::size_t capacity) {
    double bound = 0.0;
    for (std::size_t m = 1; m < profile.pmf.size(); ++m)
        bound += profile.pmf[m] * catalogue.top_mass(m * capacity);
    return bound;
}

namespace detail {

// g(x) = sum_m p_m m x^(m-1): derivative kernel of the PBP objective.
struct PbpKernel {
    std::vector<double> coeff; // coeff[i] = p_{i+1} (i+1)

    explicit PbpKernel(const CoverageProfile& profile) {
        coeff.resize(profile.pmf.size() > 1 ? profile.pmf.size() - 1 : 1, 0.0);
        for (std::size_t m = 1; m < profile.pmf.size(); ++m)
            coeff[m - 1] = profile.pmf[m] * static_cast<double>(m);
    }

    double value(double x) const {
        double v = 0.0;
        for (std::size_t i = coeff.size(); i-- > 0;) v = v * x + coeff[i];
        return v;
    }

    double derivative(double x) const {
        double v = 0.0;
        for (std::size_t i = coeff.size(); i-- > 1;)
            v = v * x + coeff[i] * static_cast<double>(i);
        return v;
    }

    // g is increasing on [0,1]; solve g(x) = target with Newton + bisection
    // safeguards, warm-started from `x0`.
    double invert(double target, double x0) const {
        double lo = 0.0, hi = 1.0;
        double x = std::clamp(x0, 0.0, 1.0);
        for (int it = 0; it < 100; ++it) {
            const double f = value(x) - target;
            if (std::abs(f) < 1e-13) return x;
            if (f > 0.0)
                hi = x;
            else
                lo = x;
            const double d = derivative(x);
            double next = d > 0.0 ? x - f / d : x;
            if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
            x = next;
        }
        return x;
    }
};

} // namespace detail

/// Probabilistic block placement: per-object inclusion probabilities b
/// maximising sum_j a_j (1 - sum_m p_m (1-b_j)^m) subject to sum b = K,
/// 0 <= b <= 1. Concave and separable, solved through the KKT conditions
/// with a bisection on the multiplier.
inline std::vector<double> pbp_solve(const Catalogue& catalogue,
                                     const CoverageProfile& profile,
                                     std::size_t capacity) {
    const std::size_t f = catalogue.size();
    if (capacity == 0 || capacity > f)
        throw std::invalid_argument("pbp_solve: capacity must be in [1, F]");
    if (capacity == f) return std::vector<double>(f, 1.0);

    const detail::PbpKernel kernel(profile);
    const double g0 = kernel.value(0.0); // = p_1
    const double g1 = kernel.value(1.0); // = mean coverage
    if (!(g1 > 0.0))
        throw std::invalid_argument("pbp_solve: profile has no coverage mass");
    const auto& pop = catalogue.popularities();

    // single-coverage profile: the objective is linear in b, optimum = top-K
    if (g1 - g0 <= 1e-14 * g1) {
        std::vector<double> indicator(f, 0.0);
        for (std::size_t j = 0; j < capacity; ++j) indicator[j] = 1.0;
        return indicator;
    }

    // b_j(mu): 1 while a_j g(0) >= mu, 0 once a_j g(1) <= mu, else interior.
    const auto mass_at = [&](double mu, std::vector<double>* out) {
        double total = 0.0;
        double warm = 1.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double aj = pop[j];
            double b;
            if (aj * g0 >= mu)
                b = 1.0;
            else if (aj * g1 <= mu)
                b = 0.0;
            else {
                warm = kernel.invert(mu / aj, warm);
                b = 1.0 - warm;
            }
            if (out) (*out)[j] = b;
            total += b;
        }
        return total;
    };

    double mu_lo = 0.0, mu_hi = pop.front() * g1;
    for (int it = 0; it < 200 && mu_hi - mu_lo > 1e-15 * (1.0 + mu_hi); ++it) {
        const double mu = 0.5 * (mu_lo + mu_hi);
        if (mass_at(mu, nullptr) > static_cast<double>(capacity))
            mu_lo = mu;
        else
            mu_hi = mu;
    }
    std::vector<double> b(f);
    mass_at(0.5 * (mu_lo + mu_hi), &b);

    // Remove the residual bisection slack on the budget constraint.
    double total = 0.0;
    for (double v : b) total += v;
    const double gap = static_cast<double>(capacity) - total;
    if (std::abs(gap) > 1e-6)
        throw std::logic_error("pbp_solve: multiplier bisection did not converge");
    if (std::abs(gap) > 0.0) {
        for (std::size_t j = 0; j < f; ++j) {
            const double adj = std::clamp(b[j] + gap, 0.0, 1.0) - b[j];
            if (adj != 0.0) {
                b[j] += adj;
                break;
            }
        }
    }
    return b;
}

/// Draw an inventory of exactly K distinct objects with marginal inclusion
/// probabilities b (sum b = K): arcs of length b_j laid around a circle of
/// circumference K, sampled at K unit-spaced cross-sections.
inline CacheInventory pbp_sample(const std::vector<double>& inclusion,
                                 std::size_t capacity, Rng& rng) {
    long double total = 0.0L;
    for (double v : inclusion) {
        if (v < -1e-9 || v > 1.0 + 1e-9)
            throw std::invalid_argument("pbp_sample: inclusion probability outside [0,1]");
        total += v;
    }
    if (std::abs(static_cast<double>(total) - static_cast<double>(capacity)) > 1e-6)
        throw std::invalid_argument("pbp_sample: inclusion probabilities must sum to K");

    CacheInventory inventory(capacity, static_cast<std::uint32_t>(inclusion.size()));
    const double u = rng.uniform();
    long double cum = 0.0L;
    std::size_t taken = 0;
    std::vector<std::uint32_t> chosen;
    for (std::size_t j = 0; j < inclusion.size() && taken < capacity; ++j) {
        cum += inclusion[j];
        if (static_cast<long double>(u) + static_cast<long double>(taken) < cum) {
            chosen.push_back(static_cast<std::uint32_t>(j + 1));
            ++taken;
        }
    }
    // guard against the last arc being missed to floating point round-off
    for (std::uint32_t j = static_cast<std::uint32_t>(inclusion.size());
         taken < capacity && j >= 1; --j) {
        if (inclusion[j - 1] > 0.0 &&
            std::find(chosen.begin(), chosen.end(), j) == chosen.end()) {
            chosen.push_back(j);
            ++taken;
        }
    }
    for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) inventory.insert(*it);
    return inventory;
}

/// Greedy full-information placement: repeatedly add the (station, object)
/// pair with the largest marginal gain in probe-point hit mass until every
/// cache holds K objects. Lazy greedy with optimistic per-station frontiers;
/// ties resolved by (station, object).
inline std::vector<CacheInventory> gfi_place(const StationField& field,
                                             const std::vector<Point>& probe_points,
                                             const Catalogue& catalogue,
                                             std::size_t capacity) {
    if (probe_points.empty())
        throw std::invalid_argument("gfi_place: probe points required");
    const std::size_t n_stations = field.size();
    const std::size_t f = catalogue.size();
    const auto& pop = catalogue.popularities();

    CoverageIndex index(field);
    std::vector<std::vector<std::uint32_t>> points_of(n_stations);
    {
        std::vector<std::uint32_t> cov;
        for (std::uint32_t p = 0; p < probe_points.size(); ++p) {
            index.covering(probe_points[p], cov);
            for (std::uint32_t s : cov) points_of[s].push_back(p);
        }
    }

    // available[point][object] bitset: object reachable from that point
    const std::size_t words = (f + 64) / 64;
    std::vector<std::uint64_t> available(probe_points.size() * words, 0);
    const auto is_available = [&](std::uint32_t point, std::uint32_t object) {
        const std::size_t bit = object - 1;
        return (available[point * words + bit / 64] >> (bit % 64)) & 1u;
    };
    const auto mark_available = [&](std::uint32_t point, std::uint32_t object) {
        const std::size_t bit = object - 1;
        available[point * words + bit / 64] |= std::uint64_t(1) << (bit % 64);
    };

    struct Candidate {
        double gain;
        std::uint32_t station;
        std::uint32_t object; // == popularity rank
        bool frontier;
    };
    const auto lower_priority = [](const Candidate& a, const Candidate& b) {
        if (a.gain != b.gain) return a.gain < b.gain;
        if (a.station != b.station) return a.station > b.station;
        return a.object > b.object;
    };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(lower_priority)>
        heap(lower_priority);

    std::vector<CacheInventory> caches;
    caches.reserve(n_stations);
    std::vector<std::size_t> filled(n_stations, 0);
    const std::size_t per_station = std::min(capacity, f);
    for (std::uint32_t s = 0; s < n_stations; ++s) {
        caches.emplace_back(std::max<std::size_t>(capacity, 1),
                            static_cast<std::uint32_t>(f));
        if (!points_of[s].empty())
            heap.push({pop[0] * static_cast<double>(points_of[s].size()), s, 1, true});
    }

    const auto true_gain = [&](std::uint32_t s, std::uint32_t object) {
        std::size_t cnt = 0;
        for (std::uint32_t p : points_of[s])
            if (!is_available(p, object)) ++cnt;
        return pop[object - 1] * static_cast<double>(cnt);
    };

    while (!heap.empty()) {
        const Candidate top = heap.top();
        heap.pop();
        const std::uint32_t s = top.station;
        if (top.frontier && top.object < f && filled[s] < per_station)
            heap.push({pop[top.object] * static_cast<double>(points_of[s].size()), s,
                       top.object + 1, true});
        if (filled[s] >= per_station || caches[s].contains(top.object)) continue;
        const double gain = true_gain(s, top.object);
        if (!heap.empty() && lower_priority({gain, s, top.object, false}, heap.top())) {
            heap.push({gain, s, top.object, false});
            continue;
        }
        caches[s].insert(top.object);
        ++filled[s];
        for (std::uint32_t p : points_of[s]) mark_available(p, top.object);
    }
    return caches;
}

} // namespace mlru
