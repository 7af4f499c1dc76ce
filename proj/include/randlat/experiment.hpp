#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "randlat/csv.hpp"
#include "randlat/ergodic.hpp"
#include "randlat/moments.hpp"
#include "randlat/screening.hpp"
#include "randlat/tiling.hpp"
#include "randlat/version.hpp"

namespace randlat {

using json = nlohmann::json;

// Spec-file violations; carries the full list, not just the first.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "spec validation failed:";
        for (const auto& e : v) s += "\n  - " + e;
        return s;
    }
    std::vector<std::string> violations_;
};

namespace spec_detail {

inline void check_keys(const json& obj, const std::string& path,
                       const std::set<std::string>& allowed, std::vector<std::string>& errs) {
    if (!obj.is_object()) {
        errs.push_back(path + ": expected an object");
        return;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            errs.push_back(path + ": unknown key '" + it.key() + "'");
}

inline double num(const json& obj, const std::string& path, const std::string& key,
                  std::vector<std::string>& errs, double fallback,
                  bool required = false) {
    if (!obj.contains(key)) {
        if (required) errs.push_back(path + "." + key + ": required");
        return fallback;
    }
    if (!obj[key].is_number()) {
        errs.push_back(path + "." + key + ": expected a number");
        return fallback;
    }
    return obj[key].get<double>();
}

inline std::uint64_t uint_of(const json& obj, const std::string& path, const std::string& key,
                             std::vector<std::string>& errs, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        std::int64_t s = v.get<std::int64_t>();
        if (s >= 0) return static_cast<std::uint64_t>(s);
    }
    errs.push_back(path + "." + key + ": expected a nonnegative integer");
    return fallback;
}

inline std::string str_of(const json& obj, const std::string& path, const std::string& key,
                          std::vector<std::string>& errs, const std::string& fallback,
                          bool required = false) {
    if (!obj.contains(key)) {
        if (required) errs.push_back(path + "." + key + ": required");
        return fallback;
    }
    if (!obj[key].is_string()) {
        errs.push_back(path + "." + key + ": expected a string");
        return fallback;
    }
    return obj[key].get<std::string>();
}

inline std::vector<double> num_array(const json& obj, const std::string& path,
                                     const std::string& key, std::vector<std::string>& errs) {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    if (!obj[key].is_array()) {
        errs.push_back(path + "." + key + ": expected an array of numbers");
        return out;
    }
    for (const auto& v : obj[key]) {
        if (!v.is_number()) {
            errs.push_back(path + "." + key + ": expected numbers");
            return {};
        }
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::optional<Vec3> vec3_of(const json& obj, const std::string& path,
                                   const std::string& key, std::vector<std::string>& errs) {
    if (!obj.contains(key)) return std::nullopt;
    auto a = num_array(obj, path, key, errs);
    if (a.size() != 3) {
        errs.push_back(path + "." + key + ": expected 3 numbers");
        return std::nullopt;
    }
    return Vec3{a[0], a[1], a[2]};
}

inline std::optional<Box3> box_of(const json& obj, const std::string& path,
                                  std::vector<std::string>& errs) {
    check_keys(obj, path, {"lo", "hi"}, errs);
    auto lo = vec3_of(obj, path, "lo", errs);
    auto hi = vec3_of(obj, path, "hi", errs);
    if (!lo || !hi) {
        errs.push_back(path + ": requires lo and hi");
        return std::nullopt;
    }
    Box3 b{*lo, *hi};
    if (!b.valid()) errs.push_back(path + ": box is empty or degenerate");
    return b;
}

inline std::optional<DisplacementLaw> displacement_of(const json& obj, const std::string& path,
                                                      std::vector<std::string>& errs) {
    std::string type = str_of(obj, path, "type", errs, "", true);
    if (type == "point_mass") {
        check_keys(obj, path, {"type"}, errs);
        return DisplacementLaw::point_mass();
    }
    if (type == "gaussian") {
        check_keys(obj, path, {"type", "sigma", "cutoff"}, errs);
        double sigma = num(obj, path, "sigma", errs, 0.0, true);
        double cutoff = num(obj, path, "cutoff", errs, 0.0);
        if (!(sigma > 0)) {
            errs.push_back(path + ".sigma: must be > 0");
            return std::nullopt;
        }
        return DisplacementLaw::gaussian_isotropic(sigma, cutoff);
    }
    if (type == "uniform_ball") {
        check_keys(obj, path, {"type", "rho"}, errs);
        double rho = num(obj, path, "rho", errs, 0.0, true);
        if (!(rho > 0)) {
            errs.push_back(path + ".rho: must be > 0");
            return std::nullopt;
        }
        return DisplacementLaw::uniform_ball(rho);
    }
    if (type == "compact_in_cell") {
        check_keys(obj, path, {"type", "box"}, errs);
        if (!obj.contains("box")) {
            errs.push_back(path + ".box: required");
            return std::nullopt;
        }
        auto b = box_of(obj["box"], path + ".box", errs);
        if (!b) return std::nullopt;
        try {
            return DisplacementLaw::compact_in_cell(*b);
        } catch (const std::invalid_argument& e) {
            errs.push_back(path + ".box: " + std::string(e.what()));
            return std::nullopt;
        }
    }
    if (type == "mixture") {
        check_keys(obj, path, {"type", "parts"}, errs);
        if (!obj.contains("parts") || !obj["parts"].is_array()) {
            errs.push_back(path + ".parts: expected an array");
            return std::nullopt;
        }
        std::vector<std::pair<double, DisplacementLaw>> parts;
        std::size_t i = 0;
        for (const auto& part : obj["parts"]) {
            std::string ppath = path + ".parts[" + std::to_string(i++) + "]";
            check_keys(part, ppath, {"weight", "law"}, errs);
            double w = num(part, ppath, "weight", errs, 0.0, true);
            if (!part.contains("law")) {
                errs.push_back(ppath + ".law: required");
                continue;
            }
            auto law = displacement_of(part["law"], ppath + ".law", errs);
            if (law) parts.emplace_back(w, *law);
        }
        try {
            return DisplacementLaw::mixture(std::move(parts));
        } catch (const std::invalid_argument& e) {
            errs.push_back(path + ": " + std::string(e.what()));
            return std::nullopt;
        }
    }
    errs.push_back(path + ".type: unknown displacement law '" + type + "'");
    return std::nullopt;
}

inline std::optional<ChargeLaw> charge_of(const json& obj, const std::string& path,
                                          std::vector<std::string>& errs) {
    std::string type = str_of(obj, path, "type", errs, "", true);
    try {
        if (type == "constant") {
            check_keys(obj, path, {"type", "Z"}, errs);
            return ChargeLaw::constant(num(obj, path, "Z", errs, 0.0, true));
        }
        if (type == "uniform") {
            check_keys(obj, path, {"type", "Z_min", "Z_max"}, errs);
            return ChargeLaw::uniform_interval(num(obj, path, "Z_min", errs, 0.0, true),
                                               num(obj, path, "Z_max", errs, 0.0, true));
        }
        if (type == "vacancy") {
            check_keys(obj, path, {"type", "p_vac", "Z"}, errs);
            return ChargeLaw::vacancy(num(obj, path, "p_vac", errs, 0.0, true),
                                      num(obj, path, "Z", errs, 0.0, true));
        }
    } catch (const std::invalid_argument& e) {
        errs.push_back(path + ": " + std::string(e.what()));
        return std::nullopt;
    }
    errs.push_back(path + ".type: unknown charge law '" + type + "'");
    return std::nullopt;
}

inline std::optional<ModelSpec> model_of(const json& obj, const std::string& path,
                                         std::vector<std::string>& errs) {
    check_keys(obj, path, {"type", "displacement", "charge", "intensity"}, errs);
    std::string type = str_of(obj, path, "type", errs, "lattice");
    ModelSpec m;
    if (type == "poisson") {
        m.poisson = true;
        m.intensity = num(obj, path, "intensity", errs, 1.0);
        if (!(m.intensity > 0)) errs.push_back(path + ".intensity: must be > 0");
    } else if (type != "lattice") {
        errs.push_back(path + ".type: expected 'lattice' or 'poisson'");
    }
    if (obj.contains("displacement")) {
        auto law = displacement_of(obj["displacement"], path + ".displacement", errs);
        if (law) m.displacement = *law;
    }
    if (obj.contains("charge")) {
        auto law = charge_of(obj["charge"], path + ".charge", errs);
        if (law) m.charge = *law;
    }
    if (m.poisson && obj.contains("displacement"))
        errs.push_back(path + ": a poisson model takes no displacement law");
    return errs.empty() ? std::optional<ModelSpec>(m) : std::nullopt;
}

inline std::optional<DomainShape> domain_of(const json& obj, const std::string& path,
                                            std::vector<std::string>& errs) {
    std::string shape = str_of(obj, path, "shape", errs, "", true);
    try {
        if (shape == "cube") {
            check_keys(obj, path, {"shape", "side", "center"}, errs);
            double side = num(obj, path, "side", errs, 0.0, true);
            Vec3 center = vec3_of(obj, path, "center", errs).value_or(Vec3{});
            if (!(side > 0)) {
                errs.push_back(path + ".side: must be > 0");
                return std::nullopt;
            }
            return DomainShape::cube(side, center);
        }
        if (shape == "box") {
            check_keys(obj, path, {"shape", "extents", "center"}, errs);
            auto e = vec3_of(obj, path, "extents", errs);
            Vec3 center = vec3_of(obj, path, "center", errs).value_or(Vec3{});
            if (!e) return std::nullopt;
            return DomainShape::box(*e, center);
        }
        if (shape == "ball") {
            check_keys(obj, path, {"shape", "radius", "center"}, errs);
            double r = num(obj, path, "radius", errs, 0.0, true);
            Vec3 center = vec3_of(obj, path, "center", errs).value_or(Vec3{});
            if (!(r > 0)) {
                errs.push_back(path + ".radius: must be > 0");
                return std::nullopt;
            }
            return DomainShape::ball(r, center);
        }
        if (shape == "simplex") {
            check_keys(obj, path, {"shape", "vertices"}, errs);
            if (!obj.contains("vertices") || !obj["vertices"].is_array() ||
                obj["vertices"].size() != 4) {
                errs.push_back(path + ".vertices: expected 4 vertices");
                return std::nullopt;
            }
            std::array<Vec3, 4> v;
            for (int i = 0; i < 4; ++i) {
                auto a = obj["vertices"][i];
                if (!a.is_array() || a.size() != 3 || !a[0].is_number()) {
                    errs.push_back(path + ".vertices: each vertex needs 3 numbers");
                    return std::nullopt;
                }
                v[i] = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
            }
            return DomainShape::simplex(v);
        }
        if (shape == "cell_union") {
            check_keys(obj, path, {"shape", "cells"}, errs);
            if (!obj.contains("cells") || !obj["cells"].is_array() || obj["cells"].empty()) {
                errs.push_back(path + ".cells: expected a nonempty array of [i,j,k]");
                return std::nullopt;
            }
            std::vector<Vec3i> cells;
            for (const auto& c : obj["cells"]) {
                if (!c.is_array() || c.size() != 3 || !c[0].is_number_integer()) {
                    errs.push_back(path + ".cells: each cell needs 3 integers");
                    return std::nullopt;
                }
                cells.push_back(
                    {c[0].get<std::int64_t>(), c[1].get<std::int64_t>(), c[2].get<std::int64_t>()});
            }
            return DomainShape::cell_union(cells);
        }
    } catch (const std::invalid_argument& e) {
        errs.push_back(path + ": " + std::string(e.what()));
        return std::nullopt;
    }
    errs.push_back(path + ".shape: unknown shape '" + shape + "'");
    return std::nullopt;
}

inline StatisticSpec statistic_of(const json& params, const std::string& path,
                                  std::vector<std::string>& errs) {
    StatisticSpec st;
    std::string name = str_of(params, path, "statistic", errs, "X0");
    if (name == "X0") st.kind = StatisticSpec::Kind::X0;
    else if (name == "X1") st.kind = StatisticSpec::Kind::X1;
    else if (name == "Xp") st.kind = StatisticSpec::Kind::XpTruncated;
    else if (name == "delta") st.kind = StatisticSpec::Kind::DeltaAtOrigin;
    else if (name == "inv_delta") st.kind = StatisticSpec::Kind::InvDeltaAtOrigin;
    else if (name == "charge_per_cell") st.kind = StatisticSpec::Kind::ChargePerCell;
    else errs.push_back(path + ".statistic: unknown statistic '" + name + "'");
    st.xp_exponent = num(params, path, "xp_p", errs, 2.0);
    st.eps = num(params, path, "eps", errs, 0.5);
    if (!(st.eps > 0)) errs.push_back(path + ".eps: must be > 0");
    return st;
}

}  // namespace spec_detail

inline const std::set<std::string>& experiment_kinds() {
    static const std::set<std::string> kinds{"sample",  "stats",  "moments", "tails",
                                             "geometry", "tiling", "energy",  "ergodic",
                                             "thermo",  "gap"};
    return kinds;
}

// Full validation pass; returns every violation found (empty means valid).
inline std::vector<std::string> validate_spec(const json& spec) {
    using namespace spec_detail;
    std::vector<std::string> errs;
    check_keys(spec, "$", {"kind", "seed", "threads", "out", "model", "domain", "params"}, errs);
    std::string kind = str_of(spec, "$", "kind", errs, "", true);
    if (!kind.empty() && !experiment_kinds().count(kind))
        errs.push_back("$.kind: unknown experiment kind '" + kind + "'");
    uint_of(spec, "$", "seed", errs, 0);
    uint_of(spec, "$", "threads", errs, 0);
    if (spec.contains("out")) str_of(spec, "$", "out", errs, "");

    const bool needs_model = kind == "sample" || kind == "stats" || kind == "moments" ||
                             kind == "tails" || kind == "ergodic" || kind == "thermo" ||
                             kind == "energy" || kind == "gap";
    const bool needs_domain =
        kind == "geometry" || kind == "tiling" || kind == "energy" || kind == "gap";
    if (needs_model) {
        if (!spec.contains("model")) errs.push_back("$.model: required for kind '" + kind + "'");
        else model_of(spec["model"], "$.model", errs);
    } else if (spec.contains("model")) {
        errs.push_back("$.model: not accepted for kind '" + kind + "'");
    }
    if (needs_domain) {
        if (!spec.contains("domain"))
            errs.push_back("$.domain: required for kind '" + kind + "'");
        else domain_of(spec["domain"], "$.domain", errs);
    } else if (spec.contains("domain")) {
        errs.push_back("$.domain: not accepted for kind '" + kind + "'");
    }

    json params = spec.contains("params") ? spec["params"] : json::object();
    const std::string p = "$.params";
    if (kind == "sample" || kind == "stats") {
        check_keys(params, p, {"window", "margin", "eps", "p_list"}, errs);
        if (!params.contains("window")) errs.push_back(p + ".window: required");
        else box_of(params["window"], p + ".window", errs);
        double margin = num(params, p, "margin", errs, 0.0);
        if (!(margin >= 0)) errs.push_back(p + ".margin: must be >= 0");
        if (kind == "stats") {
            double eps = num(params, p, "eps", errs, 0.5);
            if (!(eps > 0)) errs.push_back(p + ".eps: must be > 0");
        }
    } else if (kind == "moments") {
        check_keys(params, p,
                   {"task", "statistic", "exponent", "xp_p", "eps", "replicas", "checkpoints",
                    "p"},
                   errs);
        std::string task = str_of(params, p, "task", errs, "estimate");
        if (task != "estimate" && task != "x0_norm_bound" && task != "x1_implies_x0" &&
            task != "stabilization")
            errs.push_back(p + ".task: unknown task '" + task + "'");
        statistic_of(params, p, errs);
        std::uint64_t replicas = uint_of(params, p, "replicas", errs, 1000);
        if (task != "stabilization" && replicas < 30)
            errs.push_back(p + ".replicas: moment estimation requires >= 30 replicas");
        double expo = num(params, p, "exponent", errs, 1.0);
        if (!(expo > 0)) errs.push_back(p + ".exponent: must be > 0");
        double pp = num(params, p, "p", errs, 2.0);
        if (!(pp >= 1)) errs.push_back(p + ".p: must be >= 1");
        if (task == "stabilization") {
            auto cps = num_array(params, p, "checkpoints", errs);
            if (cps.size() < 2) errs.push_back(p + ".checkpoints: need >= 2 checkpoints");
        }
    } else if (kind == "tails") {
        check_keys(params, p, {"statistic", "xp_p", "eps", "mode", "grid", "replicas", "min_hits"},
                   errs);
        statistic_of(params, p, errs);
        std::string mode = str_of(params, p, "mode", errs, "exceedance");
        if (mode != "exceedance" && mode != "small_ball")
            errs.push_back(p + ".mode: expected 'exceedance' or 'small_ball'");
        auto grid = num_array(params, p, "grid", errs);
        if (grid.size() < 4) errs.push_back(p + ".grid: need >= 4 grid points");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] > 0)) {
                errs.push_back(p + ".grid: entries must be > 0");
                break;
            }
            if (i > 0 && !(grid[i] > grid[i - 1])) {
                errs.push_back(p + ".grid: must increase strictly");
                break;
            }
        }
        uint_of(params, p, "replicas", errs, 10000);
    } else if (kind == "geometry") {
        check_keys(params, p, {"task", "t", "t_grid", "n_mc", "cone_epsilon", "n_samples"},
                   errs);
        std::string task = str_of(params, p, "task", errs, "", true);
        if (task == "collar") {
            double t = num(params, p, "t", errs, -1.0, true);
            if (!(t >= 0)) errs.push_back(p + ".t: must be >= 0");
            if (uint_of(params, p, "n_mc", errs, 100000) < 10000)
                errs.push_back(p + ".n_mc: collar estimates require >= 1e4 samples");
        } else if (task == "fisher") {
            auto grid = num_array(params, p, "t_grid", errs);
            if (grid.empty()) errs.push_back(p + ".t_grid: required");
            for (double t : grid)
                if (!(t > 0 && t <= 0.2)) {
                    errs.push_back(p + ".t_grid: entries must lie in (0, 0.2]");
                    break;
                }
        } else if (task == "cone") {
            if (!(num(params, p, "cone_epsilon", errs, 0.0, true) > 0))
                errs.push_back(p + ".cone_epsilon: must be > 0");
        } else if (task != "regularized") {
            errs.push_back(p + ".task: unknown geometry task '" + task + "'");
        }
    } else if (kind == "tiling") {
        check_keys(params, p, {"task", "ell", "ell_grid", "n_g", "n_mc", "n_pose"}, errs);
        std::string task = str_of(params, p, "task", errs, "identity");
        if (task != "identity" && task != "classify")
            errs.push_back(p + ".task: unknown tiling task '" + task + "'");
        if (task == "identity" && uint_of(params, p, "n_g", errs, 1000) < 1000)
            errs.push_back(p + ".n_g: the identity check requires >= 1e3 group samples");
        double ell = num(params, p, "ell", errs, 1.0);
        if (!(ell >= 1)) errs.push_back(p + ".ell: must be >= 1");
        for (double e : num_array(params, p, "ell_grid", errs))
            if (!(e >= 1)) {
                errs.push_back(p + ".ell_grid: entries must be >= 1");
                break;
            }
    } else if (kind == "energy") {
        check_keys(params, p, {"task", "window", "margin", "cone_epsilon", "c_kin", "Z"}, errs);
        std::string task = str_of(params, p, "task", errs, "trial");
        if (task != "trial" && task != "screening" && task != "lieb_yau")
            errs.push_back(p + ".task: unknown energy task '" + task + "'");
        if (!params.contains("window")) errs.push_back(p + ".window: required");
        else box_of(params["window"], p + ".window", errs);
        if (!(num(params, p, "cone_epsilon", errs, 0.5) > 0))
            errs.push_back(p + ".cone_epsilon: must be > 0");
    } else if (kind == "ergodic") {
        check_keys(params, p,
                   {"task", "statistic", "xp_p", "eps", "family", "sizes", "replicas"}, errs);
        std::string task = str_of(params, p, "task", errs, "average");
        if (task != "average" && task != "neutrality")
            errs.push_back(p + ".task: unknown ergodic task '" + task + "'");
        statistic_of(params, p, errs);
        std::string family = str_of(params, p, "family", errs, "cubes");
        if (family != "cubes" && family != "balls")
            errs.push_back(p + ".family: expected 'cubes' or 'balls'");
        auto sizes = num_array(params, p, "sizes", errs);
        if (sizes.empty()) errs.push_back(p + ".sizes: required");
        for (std::size_t i = 1; i < sizes.size(); ++i)
            if (!(sizes[i] > sizes[i - 1])) {
                errs.push_back(p + ".sizes: must increase strictly");
                break;
            }
        if (uint_of(params, p, "replicas", errs, 100) < 2)
            errs.push_back(p + ".replicas: need >= 2");
    } else if (kind == "thermo") {
        check_keys(params, p, {"family", "sizes", "cone_epsilon", "c_kin", "replicas"}, errs);
        auto sizes = num_array(params, p, "sizes", errs);
        if (sizes.empty()) errs.push_back(p + ".sizes: required");
        if (uint_of(params, p, "replicas", errs, 48) < 30)
            errs.push_back(p + ".replicas: the scaling scan requires >= 30 replicas");
        if (!(num(params, p, "cone_epsilon", errs, 0.5) > 0))
            errs.push_back(p + ".cone_epsilon: must be > 0");
    } else if (kind == "gap") {
        check_keys(params, p,
                   {"window", "margin", "ell_grid", "ell", "C_gs", "cone_epsilon", "c_kin",
                    "n_g"},
                   errs);
        if (!params.contains("window")) errs.push_back(p + ".window: required");
        else box_of(params["window"], p + ".window", errs);
        if (uint_of(params, p, "n_g", errs, 500) < 500)
            errs.push_back(p + ".n_g: the gap diagnostic requires >= 500 group samples");
    }
    return errs;
}

struct OutputRecord {
    std::string file;
    std::uint64_t checksum = 0;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string kind;
    json spec_echo;
    std::string library_version = version();
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
    std::vector<OutputRecord> outputs;
    double wall_clock_seconds = 0.0;

    json to_json() const {
        json j;
        j["kind"] = kind;
        j["spec"] = spec_echo;
        j["library_version"] = library_version;
        j["master_seed"] = master_seed;
        j["threads"] = threads;
        j["seed_derivation"] =
            "replica r of an experiment draws from the stream keyed by "
            "fmix-chain(master_seed, replica_label, r); per-site draws are keyed by "
            "(seed, stream_label, site)";
        j["outputs"] = json::array();
        for (const auto& o : outputs) {
            char hex[32];
            std::snprintf(hex, sizeof(hex), "0x%016llx",
                          static_cast<unsigned long long>(o.checksum));
            j["outputs"].push_back(
                {{"file", o.file}, {"fnv1a64", hex}, {"bytes", o.bytes}});
        }
        j["wall_clock_seconds"] = wall_clock_seconds;
        return j;
    }
};

namespace spec_detail {

class Sink {
public:
    explicit Sink(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw std::ios_base::failure("cannot create output directory: " + dir_.string());
    }

    template <class Fn>
    OutputRecord write_csv(const std::string& name, Fn&& fill) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::ios_base::failure("cannot open output file: " + name);
        CsvWriter w(os);
        fill(w);
        os.flush();
        if (!os) throw std::ios_base::failure("write failure on: " + name);
        return {name, w.checksum(), w.bytes_written()};
    }

    OutputRecord write_text(const std::string& name, const std::string& text) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::ios_base::failure("cannot open output file: " + name);
        os << text;
        os.flush();
        if (!os) throw std::ios_base::failure("write failure on: " + name);
        Fnv1a64 h;
        h.update(text);
        return {name, h.digest(), text.size()};
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

}  // namespace spec_detail

// Runs a validated experiment spec; writes CSV outputs plus manifest.json
// under the output directory and returns the manifest.
inline RunManifest run_experiment(const json& spec, const std::string& out_dir = "",
                                  std::optional<std::uint64_t> seed_override = {},
                                  std::optional<unsigned> threads_override = {}) {
    using namespace spec_detail;
    auto started = std::chrono::steady_clock::now();
    {
        auto errs = validate_spec(spec);
        if (!errs.empty()) throw SchemaError(errs);
    }
    std::vector<std::string> scratch;
    const std::string kind = spec["kind"].get<std::string>();
    const json params = spec.contains("params") ? spec["params"] : json::object();

    RunManifest manifest;
    manifest.kind = kind;
    manifest.spec_echo = spec;
    manifest.master_seed =
        seed_override.value_or(uint_of(spec, "$", "seed", scratch, 0));
    manifest.threads = static_cast<unsigned>(
        threads_override.value_or(uint_of(spec, "$", "threads", scratch, 0)));
    const std::uint64_t seed = manifest.master_seed;
    const unsigned threads = manifest.threads;

    std::string dir = !out_dir.empty() ? out_dir
                                       : str_of(spec, "$", "out", scratch, "runs/" + kind);
    Sink sink{dir};

    ModelSpec model;
    if (spec.contains("model")) model = *model_of(spec["model"], "$.model", scratch);
    std::optional<DomainShape> domain;
    if (spec.contains("domain")) domain = domain_of(spec["domain"], "$.domain", scratch);

    auto box_param = [&](const char* key) {
        return *box_of(params[key], std::string("$.params.") + key, scratch);
    };

    if (kind == "sample") {
        Box3 window = box_param("window");
        double margin = num(params, "$", "margin", scratch, 0.0);
        NuclearConfiguration cfg = model.realize(window, margin, seed);
        manifest.outputs.push_back(sink.write_csv(
            "nuclei.csv", [&](CsvWriter& w) { export_nuclei_csv_writer(cfg, w); }));
        manifest.outputs.push_back(sink.write_text("descriptor.json", cfg.descriptor + "\n"));
    } else if (kind == "stats") {
        Box3 window = box_param("window");
        double margin = num(params, "$", "margin", scratch, 0.0);
        double eps = num(params, "$", "eps", scratch, 0.5);
        auto p_list = num_array(params, "$", "p_list", scratch);
        if (p_list.empty()) p_list = {1.0, 2.0};
        NuclearConfiguration cfg = model.realize(window, margin, seed);
        CellIndex index(cfg);
        manifest.outputs.push_back(sink.write_csv("cells.csv", [&](CsvWriter& w) {
            w.header("i", "j", "k", "X0", "X1", "Xp2", "flag");
            for (const Vec3i& j : interior_cells(cfg)) {
                auto st = cell_statistics(index, j, eps, p_list);
                w.row(st.cell.x, st.cell.y, st.cell.z, static_cast<std::int64_t>(st.x0), st.x1,
                      st.xp.size() > 1 ? st.xp[1].second : st.xp[0].second,
                      st.margin_truncated ? 1 : 0);
            }
        }));
    } else if (kind == "moments") {
        std::string task = str_of(params, "$", "task", scratch, "estimate");
        StatisticSpec st = statistic_of(params, "$", scratch);
        std::size_t replicas = uint_of(params, "$", "replicas", scratch, 1000);
        if (task == "estimate") {
            double exponent = num(params, "$", "exponent", scratch, 1.0);
            auto e = estimate_moment(model, st, exponent, replicas, seed, threads);
            manifest.outputs.push_back(sink.write_csv("moments.csv", [&](CsvWriter& w) {
                w.header("statistic", "exponent", "replicas", "mean", "std_error", "ci_level",
                         "ci_lo", "ci_hi", "seed");
                w.row(e.statistic, e.exponent, e.replicas, e.mean, e.std_error, e.ci_level,
                      e.ci_lo, e.ci_hi, e.master_seed);
            }));
        } else if (task == "stabilization") {
            auto cps_d = num_array(params, "$", "checkpoints", scratch);
            std::vector<std::size_t> cps;
            for (double c : cps_d) cps.push_back(static_cast<std::size_t>(c));
            double exponent = num(params, "$", "exponent", scratch, 1.0);
            auto rep = stabilization_scan(model, st, exponent, cps, seed, threads);
            manifest.outputs.push_back(sink.write_csv("stabilization.csv", [&](CsvWriter& w) {
                w.header("replicas", "mean", "ci_width");
                for (std::size_t i = 0; i < rep.checkpoints.size(); ++i)
                    w.row(rep.checkpoints[i], rep.means[i], rep.ci_widths[i]);
            }));
        } else if (task == "x0_norm_bound") {
            double pexp = num(params, "$", "p", scratch, 2.0);
            auto rep = check_x0_norm_bound(model, pexp, replicas, seed, threads);
            manifest.outputs.push_back(sink.write_csv("x0_norm_bound.csv", [&](CsvWriter& w) {
                w.header("p", "lhs", "lhs_se", "rhs", "rhs_tail_bound", "rhs_exact", "holds");
                w.row(pexp, rep.lhs, rep.lhs_se, rep.rhs, rep.rhs_tail_bound,
                      rep.rhs_exact ? 1 : 0, rep.holds ? 1 : 0);
            }));
        } else {  // x1_implies_x0
            double pexp = num(params, "$", "p", scratch, 2.0);
            auto rep = check_x1_implies_x0(model, pexp, replicas, seed, threads);
            manifest.outputs.push_back(sink.write_csv("x1_implies_x0.csv", [&](CsvWriter& w) {
                w.header("p", "lhs", "rhs", "combined_se", "holds");
                w.row(pexp, rep.lhs, rep.rhs, rep.combined_se, rep.holds ? 1 : 0);
            }));
        }
    } else if (kind == "tails") {
        StatisticSpec st = statistic_of(params, "$", scratch);
        auto grid = num_array(params, "$", "grid", scratch);
        std::size_t replicas = uint_of(params, "$", "replicas", scratch, 10000);
        std::size_t min_hits = uint_of(params, "$", "min_hits", scratch, 50);
        auto mode = str_of(params, "$", "mode", scratch, "exceedance") == "small_ball"
                        ? TailFit::Mode::SmallBall
                        : TailFit::Mode::Exceedance;
        auto fit = tail_exponent(model, st, grid, replicas, seed, mode, threads, min_hits);
        manifest.outputs.push_back(sink.write_csv("tail_points.csv", [&](CsvWriter& w) {
            w.header("threshold", "hits", "probability");
            for (std::size_t i = 0; i < fit.thresholds.size(); ++i)
                w.row(fit.thresholds[i], fit.hits[i], fit.probabilities[i]);
        }));
        manifest.outputs.push_back(sink.write_csv("tail_fit.csv", [&](CsvWriter& w) {
            w.header("mode", "slope", "slope_se", "r2", "points_used", "replicas", "warnings");
            std::string warn;
            for (const auto& s : fit.warnings) warn += (warn.empty() ? "" : "; ") + s;
            w.row(mode == TailFit::Mode::SmallBall ? "small_ball" : "exceedance",
                  fit.slope, fit.slope_se, fit.r2, fit.points_used, fit.replicas, warn);
        }));
    } else if (kind == "geometry") {
        std::string task = str_of(params, "$", "task", scratch, "collar");
        if (task == "collar") {
            double t = num(params, "$", "t", scratch, 0.01);
            std::size_t n_mc = uint_of(params, "$", "n_mc", scratch, 100000);
            auto c = collar_volume(*domain, t, n_mc, seed);
            manifest.outputs.push_back(sink.write_csv("collar.csv", [&](CsvWriter& w) {
                w.header("t", "collar_volume", "std_error");
                w.row(t, c.volume, c.std_error);
            }));
        } else if (task == "fisher") {
            auto grid = num_array(params, "$", "t_grid", scratch);
            std::size_t n_mc = uint_of(params, "$", "n_mc", scratch, 200000);
            auto f = fisher_a_estimate(*domain, grid, n_mc, seed);
            manifest.outputs.push_back(sink.write_csv("fisher.csv", [&](CsvWriter& w) {
                w.header("t", "ratio", "ratio_se");
                for (std::size_t i = 0; i < f.t_grid.size(); ++i)
                    w.row(f.t_grid[i], f.ratios[i], f.ratio_se[i]);
            }));
            manifest.outputs.push_back(sink.write_csv("fisher_a.csv", [&](CsvWriter& w) {
                w.header("a", "a_std_error");
                w.row(f.a, f.a_std_error);
            }));
        } else if (task == "cone") {
            double eps = num(params, "$", "cone_epsilon", scratch, 0.5);
            std::size_t n = uint_of(params, "$", "n_samples", scratch, 1000);
            auto r = cone_check(*domain, eps, n, seed);
            manifest.outputs.push_back(sink.write_csv("cone.csv", [&](CsvWriter& w) {
                w.header("pass", "checked_inside", "checked_outside", "witness_count");
                w.row(r.pass ? 1 : 0, r.checked_inside, r.checked_outside,
                      r.witnesses.size());
            }));
            manifest.outputs.push_back(sink.write_csv("cone_witnesses.csv", [&](CsvWriter& w) {
                w.header("x", "y", "z");
                for (const Vec3& p : r.witnesses) w.row(p.x, p.y, p.z);
            }));
        } else {  // regularized
            auto rv = regularized_volume(*domain, LatticeSpec::cubic());
            manifest.outputs.push_back(sink.write_csv("regularized.csv", [&](CsvWriter& w) {
                w.header("cell_count", "regularized_volume", "domain_volume");
                w.row(rv.cell_count, rv.volume, domain->volume());
            }));
        }
    } else if (kind == "tiling") {
        std::string task = str_of(params, "$", "task", scratch, "identity");
        auto ells = num_array(params, "$", "ell_grid", scratch);
        if (ells.empty()) ells = {num(params, "$", "ell", scratch, 1.0)};
        if (task == "identity") {
            std::size_t n_g = uint_of(params, "$", "n_g", scratch, 1000);
            std::size_t n_mc = uint_of(params, "$", "n_mc", scratch, 200);
            manifest.outputs.push_back(sink.write_csv("identity.csv", [&](CsvWriter& w) {
                w.header("ell", "lhs_volume", "rhs_estimate", "rhs_se", "rel_error");
                for (double ell : ells) {
                    auto rep = tiling_volume_identity(*domain, TilingSpec(ell), n_g, n_mc, seed);
                    w.row(ell, rep.lhs, rep.rhs, rep.rhs_std_error, rep.rel_error);
                }
            }));
        } else {
            std::size_t n_pose = uint_of(params, "$", "n_pose", scratch, 32);
            manifest.outputs.push_back(sink.write_csv("cells.csv", [&](CsvWriter& w) {
                w.header("ell", "domain_volume", "inner_cells", "boundary_cells");
                for (double ell : ells) {
                    auto cls = classify_cells(*domain, TilingSpec(ell), seed, n_pose);
                    w.row(ell, domain->volume(), cls.inner, cls.boundary);
                }
            }));
        }
    } else if (kind == "energy") {
        Box3 window = box_param("window");
        double margin = num(params, "$", "margin", scratch, 2.0);
        double eps = num(params, "$", "cone_epsilon", scratch, 0.5);
        double c_kin = num(params, "$", "c_kin", scratch, 1.0);
        std::string task = str_of(params, "$", "task", scratch, "trial");
        NuclearConfiguration cfg = model.realize(window, margin, seed);
        if (task == "screening") {
            auto clouds = build_screening(cfg, *domain, eps, seed);
            manifest.outputs.push_back(sink.write_csv("clouds.csv", [&](CsvWriter& w) {
                w.header("nucleus_x", "nucleus_y", "nucleus_z", "charge", "center_x",
                         "center_y", "center_z", "radius", "on_top");
                for (const auto& c : clouds)
                    w.row(c.nucleus_position.x, c.nucleus_position.y, c.nucleus_position.z,
                          c.nucleus_charge, c.center.x, c.center.y, c.center.z, c.radius,
                          c.on_top ? 1 : 0);
            }));
        } else if (task == "lieb_yau") {
            double z = num(params, "$", "Z", scratch, model.charge.z_max());
            double v = lieb_yau_term(cfg, *domain, z);
            manifest.outputs.push_back(sink.write_csv("lieb_yau.csv", [&](CsvWriter& w) {
                w.header("Z", "lieb_yau_term");
                w.row(z, v);
            }));
        } else {
            auto rep = trial_energy(cfg, *domain, eps, c_kin);
            manifest.outputs.push_back(sink.write_csv("energy.csv", [&](CsvWriter& w) {
                w.header("kinetic", "boundary", "total", "lieb_yau", "nuclei_in_domain",
                         "collar_nuclei", "cone_epsilon", "c_kin", "margin_truncated");
                w.row(rep.kinetic, rep.boundary, rep.total(),
                      rep.lieb_yau_defined ? rep.lieb_yau : 0.0, rep.nuclei_in_domain,
                      rep.collar_nuclei, rep.cone_epsilon, rep.c_kin,
                      rep.any_margin_truncated ? 1 : 0);
            }));
            manifest.outputs.push_back(sink.write_csv("energy_cells.csv", [&](CsvWriter& w) {
                w.header("i", "j", "k", "kinetic", "boundary", "lieb_yau");
                for (const auto& c : rep.per_cell)
                    w.row(c.cell.x, c.cell.y, c.cell.z, c.kinetic, c.boundary, c.lieb_yau);
            }));
        }
    } else if (kind == "ergodic") {
        std::string task = str_of(params, "$", "task", scratch, "average");
        auto sizes = num_array(params, "$", "sizes", scratch);
        auto family = str_of(params, "$", "family", scratch, "cubes");
        DomainSequence seq = family == "balls" ? DomainSequence::balls(sizes)
                                               : DomainSequence::cubes(sizes);
        std::size_t replicas = uint_of(params, "$", "replicas", scratch, 100);
        if (task == "average") {
            StatisticSpec st = statistic_of(params, "$", scratch);
            auto res = ergodic_average(model, st, seq, seed, replicas, threads);
            manifest.outputs.push_back(sink.write_csv("ergodic.csv", [&](CsvWriter& w) {
                w.header("size", "volume", "sites", "trace_average", "cross_mean", "l1_error",
                         "l1_error_se");
                for (const auto& r : res)
                    w.row(r.size, r.volume, r.site_count, r.trace_average, r.cross_mean,
                          r.l1_error, r.l1_error_se);
            }));
        } else {
            auto res = neutrality_estimate(model, seq, replicas, seed, threads);
            manifest.outputs.push_back(sink.write_csv("neutrality.csv", [&](CsvWriter& w) {
                w.header("size", "volume", "mean", "std_error", "ci_lo", "ci_hi");
                for (const auto& r : res)
                    w.row(r.size, r.volume, r.estimate.mean, r.estimate.std_error,
                          r.estimate.ci_lo, r.estimate.ci_hi);
            }));
        }
    } else if (kind == "thermo") {
        auto sizes = num_array(params, "$", "sizes", scratch);
        DomainSequence seq = DomainSequence::cubes(sizes);
        double eps = num(params, "$", "cone_epsilon", scratch, 0.5);
        double c_kin = num(params, "$", "c_kin", scratch, 1.0);
        std::size_t replicas = uint_of(params, "$", "replicas", scratch, 48);
        auto series = thermo_scan(model, seq, eps, c_kin, replicas, seed, threads);
        manifest.outputs.push_back(sink.write_csv("thermo.csv", [&](CsvWriter& w) {
            w.header("L", "volume", "mean", "l1_dev", "mean_se", "ci99_lo", "ci99_hi",
                     "kinetic_mean", "boundary_mean", "replicas", "fisher_a");
            double z = normal_quantile(0.995);
            for (std::size_t i = 0; i < series.per_size.size(); ++i) {
                const auto& s = series.per_size[i];
                w.row(s.size, s.volume, s.mean, s.l1_dev, s.mean_se, s.mean - z * s.mean_se,
                      s.mean + z * s.mean_se, s.kinetic_mean, s.boundary_mean, s.replicas,
                      series.fisher_a[i]);
            }
        }));
        manifest.outputs.push_back(sink.write_csv("thermo_fit.csv", [&](CsvWriter& w) {
            w.header("fitted_limit", "fitted_correction", "fitted_limit_all_sizes",
                     "fit_residual_at_largest", "l1_decay_slope", "l1_decay_slope_se");
            w.row(series.fitted_limit, series.fitted_correction,
                  series.fitted_limit_all_sizes, series.fit_residual_at_largest,
                  series.l1_decay_slope, series.l1_decay_slope_se);
        }));
    } else if (kind == "gap") {
        Box3 window = box_param("window");
        double margin = num(params, "$", "margin", scratch, 2.0);
        double eps = num(params, "$", "cone_epsilon", scratch, 0.5);
        double c_kin = num(params, "$", "c_kin", scratch, 1.0);
        double c_gs = num(params, "$", "C_gs", scratch, 1.0);
        std::size_t n_g = uint_of(params, "$", "n_g", scratch, 500);
        auto ells = num_array(params, "$", "ell_grid", scratch);
        if (ells.empty()) ells = {num(params, "$", "ell", scratch, 2.0)};
        NuclearConfiguration cfg = model.realize(window, margin, seed);
        manifest.outputs.push_back(sink.write_csv("gap.csv", [&](CsvWriter& w) {
            w.header("ell", "lhs", "rhs", "gap", "integral_mean", "integral_se");
            for (double ell : ells) {
                auto rep = graf_schenker_gap(cfg, *domain, TilingSpec(ell), c_gs, eps, c_kin,
                                             n_g, seed);
                w.row(ell, rep.lhs, rep.rhs, rep.gap, rep.integral_mean, rep.integral_se);
            }
        }));
    }

    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::string mtext = manifest.to_json().dump(2) + "\n";
    sink.write_text("manifest.json", mtext);
    return manifest;
}

}  // namespace randlat
