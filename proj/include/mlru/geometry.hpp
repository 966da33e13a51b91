#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mlru/rng.hpp"

namespace mlru {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double squared_distance(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Rectangular simulation window [0,width] x [0,height] in km. Stations are
/// over-generated on the window enlarged by `margin` on each side; requests
/// arrive on the inner window only.
struct Window {
    double width = 12.0;
    double height = 12.0;
    double margin = 0.0;

    double inner_area() const { return width * height; }
    double expanded_area() const {
        return (width + 2.0 * margin) * (height + 2.0 * margin);
    }

    void validate() const {
        if (!(width > 0.0) || !(height > 0.0))
            throw std::invalid_argument("window sides must be positive");
        if (margin < 0.0)
            throw std::invalid_argument("window margin must be non-negative");
    }
};

enum class FieldKind { Ppp, Lattice };

/// Realised transmitter positions with their generation parameters.
struct StationField {
    std::vector<Point> positions;
    double intensity = 0.0;        // lambda_b, stations per km^2
    double coverage_radius = 0.0;  // R_b, km (Boolean disc)
    Window window;
    FieldKind kind = FieldKind::Ppp;

    std::size_t size() const { return positions.size(); }
};

/// pmf of the coverage number m = 0..M; tail mass folded into the M bin.
struct CoverageProfile {
    std::vector<double> pmf; // index m

    std::size_t max_coverage() const { return pmf.empty() ? 0 : pmf.size() - 1; }

    void validate() const {
        if (pmf.empty())
            throw std::invalid_argument("empty coverage profile");
        double total = 0.0;
        for (double p : pmf) {
            if (p < -1e-12 || p > 1.0 + 1e-12)
                throw std::invalid_argument("coverage pmf entry outside [0,1]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("coverage pmf does not sum to 1");
    }
};

inline double mean_coverage_number(const CoverageProfile& profile) {
    double mean = 0.0;
    for (std::size_t m = 1; m < profile.pmf.size(); ++m)
        mean += static_cast<double>(m) * profile.pmf[m];
    return mean;
}

inline void check_field_inputs(double lambda_b, const Window& window) {
    window.validate();
    if (!(lambda_b > 0.0))
        throw std::invalid_argument("station intensity must be positive");
}

/// Homogeneous PPP on the margin-expanded window: Poisson count with mean
/// lambda_b * expanded area, positions i.i.d. uniform.
inline StationField sample_ppp_stations(double lambda_b, const Window& window,
                                        double coverage_radius, Rng& rng) {
    check_field_inputs(lambda_b, window);
    const double lo_x = -window.margin;
    const double lo_y = -window.margin;
    const double hi_x = window.width + window.margin;
    const double hi_y = window.height + window.margin;

    StationField field;
    field.intensity = lambda_b;
    field.coverage_radius = coverage_radius;
    field.window = window;
    field.kind = FieldKind::Ppp;

    const std::uint64_t n = rng.poisson(lambda_b * window.expanded_area());
    field.positions.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        field.positions.push_back({rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)});
    return field;
}

/// Square lattice with spacing eta = lambda_b^(-1/2) and a fixed translation.
/// Grid points are kept on the half-open expanded window, so an aligned grid
/// is not double-counted on the far edges.
inline StationField build_lattice_stations(double lambda_b, const Window& window,
                                           double coverage_radius, Point translation) {
    check_field_inputs(lambda_b, window);
    const double eta = 1.0 / std::sqrt(lambda_b);
    const double lo_x = -window.margin;
    const double lo_y = -window.margin;
    const double hi_x = window.width + window.margin;
    const double hi_y = window.height + window.margin;

    StationField field;
    field.intensity = lambda_b;
    field.coverage_radius = coverage_radius;
    field.window = window;
    field.kind = FieldKind::Lattice;

    const auto first_index = [eta](double lo, double offset) {
        return static_cast<long>(std::ceil((lo - offset) / eta - 1e-12));
    };
    for (long i = first_index(lo_x, translation.x);; ++i) {
        const double x = translation.x + static_cast<double>(i) * eta;
        if (x >= hi_x) break;
        for (long j = first_index(lo_y, translation.y);; ++j) {
            const double y = translation.y + static_cast<double>(j) * eta;
            if (y >= hi_y) break;
            field.positions.push_back({x, y});
        }
    }
    return field;
}

/// Stationary version: common random translation uniform in [0,eta)^2.
inline StationField build_lattice_stations(double lambda_b, const Window& window,
                                           double coverage_radius, Rng& rng) {
    check_field_inputs(lambda_b, window);
    const double eta = 1.0 / std::sqrt(lambda_b);
    const Point u{rng.uniform(0.0, eta), rng.uniform(0.0, eta)};
    return build_lattice_stations(lambda_b, window, coverage_radius, u);
}

/// Indices of stations whose coverage disc contains `point` (d < R_b strictly),
/// nearest first; distance ties broken by lower index.
inline std::vector<std::uint32_t> covering_stations(const StationField& field,
                                                    Point point) {
    const double r2 = field.coverage_radius * field.coverage_radius;
    std::vector<std::pair<double, std::uint32_t>> found;
    for (std::uint32_t i = 0; i < field.positions.size(); ++i) {
        const double d2 = squared_distance(field.positions[i], point);
        if (d2 < r2) found.emplace_back(d2, i);
    }
    std::sort(found.begin(), found.end());
    std::vector<std::uint32_t> ids;
    ids.reserve(found.size());
    for (const auto& [d2, i] : found) ids.push_back(i);
    return ids;
}

/// Voronoi station of `point`: minimal distance, ties to the lowest index.
inline std::uint32_t closest_station(const StationField& field, Point point) {
    if (field.positions.empty())
        throw std::invalid_argument("closest_station on empty field");
    std::uint32_t best = 0;
    double best_d2 = squared_distance(field.positions[0], point);
    for (std::uint32_t i = 1; i < field.positions.size(); ++i) {
        const double d2 = squared_distance(field.positions[i], point);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

/// Uniform-grid bucket index with cell size R_b: a covering query touches at
/// most the 3x3 neighbourhood of the query cell. Matches covering_stations()
/// exactly, including order.
class CoverageIndex {
public:
    explicit CoverageIndex(const StationField& field)
        : positions_(field.positions),
          radius2_(field.coverage_radius * field.coverage_radius),
          cell_(field.coverage_radius > 0.0 ? field.coverage_radius : 1.0) {
        origin_x_ = -field.window.margin - cell_;
        origin_y_ = -field.window.margin - cell_;
        const double span_x = field.window.width + 2.0 * field.window.margin + 2.0 * cell_;
        const double span_y = field.window.height + 2.0 * field.window.margin + 2.0 * cell_;
        nx_ = static_cast<std::size_t>(span_x / cell_) + 2;
        ny_ = static_cast<std::size_t>(span_y / cell_) + 2;

        // CSR layout: counting pass, then fill
        std::vector<std::uint32_t> counts(nx_ * ny_ + 1, 0);
        cell_of_.resize(positions_.size());
        for (std::size_t i = 0; i < positions_.size(); ++i) {
            cell_of_[i] = cell_index(positions_[i].x, positions_[i].y);
            ++counts[cell_of_[i] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        offsets_ = counts;
        ids_.resize(positions_.size());
        std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::uint32_t i = 0; i < positions_.size(); ++i)
            ids_[cursor[cell_of_[i]]++] = i;
    }

    /// Fills `out` with covering station ids, nearest first.
    void covering(Point p, std::vector<std::uint32_t>& out) const {
        out.clear();
        scratch_.clear();
        const long cx = static_cast<long>(std::floor((p.x - origin_x_) / cell_));
        const long cy = static_cast<long>(std::floor((p.y - origin_y_) / cell_));
        for (long gx = cx - 1; gx <= cx + 1; ++gx) {
            if (gx < 0 || gx >= static_cast<long>(nx_)) continue;
            for (long gy = cy - 1; gy <= cy + 1; ++gy) {
                if (gy < 0 || gy >= static_cast<long>(ny_)) continue;
                const std::size_t c = static_cast<std::size_t>(gx) * ny_ +
                                      static_cast<std::size_t>(gy);
                for (std::uint32_t k = offsets_[c]; k < offsets_[c + 1]; ++k) {
                    const std::uint32_t i = ids_[k];
                    const double d2 = squared_distance(positions_[i], p);
                    if (d2 < radius2_) scratch_.emplace_back(d2, i);
                }
            }
        }
        std::sort(scratch_.begin(), scratch_.end());
        for (const auto& [d2, i] : scratch_) out.push_back(i);
    }

    std::size_t count_covering(Point p) const {
        std::size_t n = 0;
        const long cx = static_cast<long>(std::floor((p.x - origin_x_) / cell_));
        const long cy = static_cast<long>(std::floor((p.y - origin_y_) / cell_));
        for (long gx = cx - 1; gx <= cx + 1; ++gx) {
            if (gx < 0 || gx >= static_cast<long>(nx_)) continue;
            for (long gy = cy - 1; gy <= cy + 1; ++gy) {
                if (gy < 0 || gy >= static_cast<long>(ny_)) continue;
                const std::size_t c = static_cast<std::size_t>(gx) * ny_ +
                                      static_cast<std::size_t>(gy);
                for (std::uint32_t k = offsets_[c]; k < offsets_[c + 1]; ++k)
                    if (squared_distance(positions_[ids_[k]], p) < radius2_) ++n;
            }
        }
        return n;
    }

private:
    std::size_t cell_index(double x, double y) const {
        const auto gx = static_cast<std::size_t>(
            std::clamp(std::floor((x - origin_x_) / cell_), 0.0,
                       static_cast<double>(nx_ - 1)));
        const auto gy = static_cast<std::size_t>(
            std::clamp(std::floor((y - origin_y_) / cell_), 0.0,
                       static_cast<double>(ny_ - 1)));
        return gx * ny_ + gy;
    }

    std::vector<Point> positions_;
    double radius2_;
    double cell_;
    double origin_x_ = 0.0, origin_y_ = 0.0;
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<std::uint32_t> ids_;
    std::vector<std::uint32_t> cell_of_;
    mutable std::vector<std::pair<double, std::uint32_t>> scratch_;
};

/// Boolean/PPP coverage number is Poisson(nu) with nu = lambda_b pi R_b^2.
/// The truncated tail is folded into p_M so the pmf keeps total mass 1.
inline CoverageProfile coverage_profile_ppp_boolean(double lambda_b, double coverage_radius,
                                                    std::size_t max_coverage) {
    if (!(lambda_b > 0.0) || !(coverage_radius > 0.0) || max_coverage < 1)
        throw std::invalid_argument("coverage_profile_ppp_boolean: bad arguments");
    const double nu = lambda_b * M_PI * coverage_radius * coverage_radius;
    CoverageProfile profile;
    profile.pmf.resize(max_coverage + 1, 0.0);
    double term = std::exp(-nu); // p_0
    double below = 0.0;
    for (std::size_t m = 0; m < max_coverage; ++m) {
        profile.pmf[m] = term;
        below += term;
        term *= nu / static_cast<double>(m + 1);
    }
    profile.pmf[max_coverage] = std::max(0.0, 1.0 - below);
    return profile;
}

/// Empirical coverage pmf: probe points uniform on the inner window of freshly
/// sampled fields (whose margin should be >= R_b so no edge bias enters).
inline CoverageProfile coverage_profile_monte_carlo(
    const std::function<StationField(Rng&)>& field_sampler, double coverage_radius,
    std::size_t max_coverage, std::size_t n_samples, Rng& rng) {
    if (max_coverage < 1 || n_samples == 0)
        throw std::invalid_argument("coverage_profile_monte_carlo: bad arguments");
    constexpr std::size_t probes_per_field = 512;
    std::vector<std::uint64_t> histogram(max_coverage + 1, 0);
    std::size_t done = 0;
    while (done < n_samples) {
        StationField field = field_sampler(rng);
        field.coverage_radius = coverage_radius;
        const CoverageIndex index(field);
        const std::size_t batch = std::min(probes_per_field, n_samples - done);
        for (std::size_t s = 0; s < batch; ++s) {
            const Point p{rng.uniform(0.0, field.window.width),
                          rng.uniform(0.0, field.window.height)};
            const std::size_t m = index.count_covering(p);
            ++histogram[std::min(m, max_coverage)];
        }
        done += batch;
    }
    CoverageProfile profile;
    profile.pmf.resize(max_coverage + 1);
    for (std::size_t m = 0; m <= max_coverage; ++m)
        profile.pmf[m] = static_cast<double>(histogram[m]) / static_cast<double>(n_samples);
    return profile;
}

/// Boolean disc radius from an SNR threshold: R_b(T) = T^(-1/beta) / B.
inline double radius_from_snr_threshold(double threshold, double path_loss_exponent,
                                        double attenuation) {
    if (!(threshold > 0.0) || !(path_loss_exponent > 2.0) || !(attenuation > 0.0))
        throw std::invalid_argument("radius_from_snr_threshold: bad arguments");
    return std::pow(threshold, -1.0 / path_loss_exponent) / attenuation;
}

} // namespace mlru
