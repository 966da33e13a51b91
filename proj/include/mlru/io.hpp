#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlru/engine.hpp"
#include "mlru/geometry.hpp"
#include "mlru/policies.hpp"
#include "mlru/traffic.hpp"

namespace mlru {

/// Shortest round-trip decimal form, '.' decimal point, no locale. Keeps CSV
/// output byte-stable across reruns.
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string policy_name(const PolicyKind& policy) {
    using Family = PolicyKind::Family;
    switch (policy.family) {
    case Family::SingleLru: return "single-lru";
    case Family::QLru: return "q-lru";
    case Family::Lfu: return "lfu";
    case Family::MultiLruOne: return "multi-lru-one";
    case Family::MultiLruAll: return "multi-lru-all";
    case Family::QMultiLruAll: return "q-multi-lru-all";
    case Family::Pbp: return "pbp";
    case Family::Gfi: return "gfi";
    }
    return "unknown";
}

inline PolicyKind parse_policy(const std::string& name, double q = 1.0) {
    using Family = PolicyKind::Family;
    PolicyKind policy;
    policy.insert_probability = q;
    if (name == "single-lru") policy.family = Family::SingleLru;
    else if (name == "q-lru") policy.family = Family::QLru;
    else if (name == "lfu") policy.family = Family::Lfu;
    else if (name == "multi-lru-one") policy.family = Family::MultiLruOne;
    else if (name == "multi-lru-all") policy.family = Family::MultiLruAll;
    else if (name == "q-multi-lru-all") policy.family = Family::QMultiLruAll;
    else if (name == "pbp") policy.family = Family::Pbp;
    else if (name == "gfi") policy.family = Family::Gfi;
    else throw std::invalid_argument("unknown policy: " + name);
    return policy;
}

/// Write a whole file atomically (temp file + rename).
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// station fields
// ---------------------------------------------------------------------------

inline std::string station_field_csv(const StationField& field) {
    std::ostringstream out;
    out << "index,x,y\n";
    for (std::size_t i = 0; i < field.positions.size(); ++i)
        out << i << ',' << format_double(field.positions[i].x) << ','
            << format_double(field.positions[i].y) << '\n';
    return out.str();
}

inline nlohmann::json station_field_header(const StationField& field,
                                           std::uint64_t seed) {
    return nlohmann::json{
        {"lambda_b", field.intensity},
        {"rb", field.coverage_radius},
        {"kind", field.kind == FieldKind::Ppp ? "ppp" : "lattice"},
        {"window", {{"width", field.window.width},
                    {"height", field.window.height},
                    {"margin", field.window.margin}}},
        {"seed", seed},
        {"stations", field.positions.size()},
    };
}

inline void write_station_field(const StationField& field, std::uint64_t seed,
                                const std::filesystem::path& csv_path,
                                const std::filesystem::path& json_path) {
    write_file_atomic(csv_path, station_field_csv(field));
    write_file_atomic(json_path, station_field_header(field, seed).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// traffic
// ---------------------------------------------------------------------------

inline std::string catalogue_csv(const Catalogue& catalogue) {
    std::ostringstream out;
    out << "rank,popularity\n";
    const auto& pop = catalogue.popularities();
    for (std::size_t j = 0; j < pop.size(); ++j)
        out << (j + 1) << ',' << format_double(pop[j]) << '\n';
    return out.str();
}

inline std::string request_stream_csv(const RequestStream& stream) {
    std::ostringstream out;
    out << "t,x,y,object_id\n";
    for (const Request& r : stream.requests)
        out << format_double(r.time) << ',' << format_double(r.where.x) << ','
            << format_double(r.where.y) << ',' << r.object << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// inventories
// ---------------------------------------------------------------------------

inline std::string inventories_csv(const std::vector<CacheInventory>& caches) {
    std::ostringstream out;
    out << "station,rank,object\n";
    for (std::size_t s = 0; s < caches.size(); ++s) {
        const auto items = caches[s].items();
        for (std::size_t r = 0; r < items.size(); ++r)
            out << s << ',' << r << ',' << items[r] << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

struct ResultRow {
    double sweep_value = 0.0;
    double n_bs_mean = 0.0;
    std::string policy;
    double p_hit_mean = 0.0;
    double ci95 = 0.0;
    std::uint64_t n_replications = 0;
    std::uint64_t seed = 0;
};

inline std::string result_rows_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "sweep_value,N_bs_mean,policy,p_hit_mean,ci95,n_replications,seed\n";
    for (const ResultRow& r : rows)
        out << format_double(r.sweep_value) << ',' << format_double(r.n_bs_mean) << ','
            << r.policy << ',' << format_double(r.p_hit_mean) << ','
            << format_double(r.ci95) << ',' << r.n_replications << ',' << r.seed
            << '\n';
    return out.str();
}

inline nlohmann::json result_rows_json(const std::vector<ResultRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ResultRow& r : rows)
        arr.push_back({{"sweep_value", r.sweep_value},
                       {"N_bs_mean", r.n_bs_mean},
                       {"policy", r.policy},
                       {"p_hit_mean", r.p_hit_mean},
                       {"ci95", r.ci95},
                       {"n_replications", r.n_replications},
                       {"seed", r.seed}});
    return arr;
}

struct CurveRow {
    double sweep_value = 0.0;
    std::string policy;
    double p_hit = 0.0;
    double characteristic_time = 0.0;
};

inline std::string curve_rows_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream out;
    out << "sweep_value,policy,P_hit,T_C\n";
    for (const CurveRow& r : rows)
        out << format_double(r.sweep_value) << ',' << r.policy << ','
            << format_double(r.p_hit) << ',' << format_double(r.characteristic_time)
            << '\n';
    return out.str();
}

} // namespace mlru
