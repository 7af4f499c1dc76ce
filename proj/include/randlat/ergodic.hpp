#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "randlat/cell_statistics.hpp"
#include "randlat/domain.hpp"
#include "randlat/moments.hpp"
#include "randlat/parallel.hpp"
#include "randlat/screening.hpp"
#include "randlat/tiling.hpp"

namespace randlat {

// A growing family of domains with bounded distortion: each member is
// contained in a ball of radius proportional to the cube root of its volume.
struct DomainSequence {
    enum class Family { Cubes, Balls };
    Family family = Family::Cubes;
    std::vector<double> sizes;  // cube sides or ball radii, increasing

    static DomainSequence cubes(std::vector<double> sides) {
        DomainSequence s;
        s.family = Family::Cubes;
        s.sizes = std::move(sides);
        s.validate();
        return s;
    }
    static DomainSequence balls(std::vector<double> radii) {
        DomainSequence s;
        s.family = Family::Balls;
        s.sizes = std::move(radii);
        s.validate();
        return s;
    }

    void validate() const {
        if (sizes.empty()) throw std::invalid_argument("DomainSequence: empty size grid");
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (!(sizes[i] > 0)) throw std::invalid_argument("DomainSequence: sizes must be > 0");
            if (i > 0 && !(sizes[i] > sizes[i - 1]))
                throw std::invalid_argument("DomainSequence: volumes must increase strictly");
        }
    }

    std::size_t count() const { return sizes.size(); }

    // Cubes sit on the cell grid (centers at half-integer offsets) so their
    // boundaries never split cells.
    DomainShape shape(std::size_t i) const {
        if (family == Family::Cubes)
            return DomainShape::cube(sizes[i], {0.5, 0.5, 0.5});
        return DomainShape::ball(sizes[i]);
    }

    // diam(D) |D|^(-1/3), the distortion bound of the family.
    double containment_constant() const {
        double c = 0;
        for (std::size_t i = 0; i < count(); ++i) {
            DomainShape d = shape(i);
            Box3 bb = d.bounding_box();
            c = std::max(c, bb.extent().norm() / std::cbrt(d.volume()));
        }
        return c;
    }
};

struct ErgodicSizeResult {
    double size = 0.0;
    double volume = 0.0;
    std::size_t site_count = 0;
    double trace_average = 0.0;  // single-realization average (replica 0)
    double cross_mean = 0.0;     // mean over replicas
    double l1_error = 0.0;       // mean |avg_r - cross_mean|
    double l1_error_se = 0.0;
};

// Spatial averages (1/|D_n|) sum over lattice sites k in D_n of the statistic
// at cell k, for one traced realization and across replicas.
inline std::vector<ErgodicSizeResult> ergodic_average(const ModelSpec& model,
                                                      const StatisticSpec& stat,
                                                      const DomainSequence& seq,
                                                      std::uint64_t omega_seed,
                                                      std::size_t replicas,
                                                      unsigned threads = 0) {
    if (replicas < 1) throw std::invalid_argument("ergodic_average: need >= 1 replica");
    const std::size_t n_sizes = seq.count();
    DomainShape largest = seq.shape(n_sizes - 1);
    Box3 bb = largest.bounding_box();
    // Window aligned outward to whole cells so every site of the largest
    // domain has a statistics-ready cell.
    Box3 window{{std::floor(bb.lo.x) - 0.5, std::floor(bb.lo.y) - 0.5,
                 std::floor(bb.lo.z) - 0.5},
                {std::ceil(bb.hi.x) + 0.5, std::ceil(bb.hi.y) + 0.5,
                 std::ceil(bb.hi.z) + 0.5}};
    double margin = model.protocol_margin();

    // site lists per size (sites are shared across replicas)
    std::vector<std::vector<Vec3i>> sites(n_sizes);
    {
        Vec3i lo = LatticeSpec::cubic().cell_of(window.lo);
        Vec3i hi = LatticeSpec::cubic().cell_of(window.hi);
        for (std::int64_t x = lo.x; x <= hi.x; ++x)
            for (std::int64_t y = lo.y; y <= hi.y; ++y)
                for (std::int64_t z = lo.z; z <= hi.z; ++z)
                    for (std::size_t i = 0; i < n_sizes; ++i) {
                        Vec3 p{static_cast<double>(x), static_cast<double>(y),
                               static_cast<double>(z)};
                        if (seq.shape(i).contains(p)) sites[i].push_back({x, y, z});
                    }
    }

    std::vector<std::vector<double>> avgs(n_sizes,
                                          std::vector<double>(replicas, 0.0));
    parallel_for(replicas, threads, [&](std::size_t r) {
        std::uint64_t rs = r == 0 ? omega_seed
                                  : MomentEstimate::replica_seed(omega_seed, r);
        NuclearConfiguration cfg = model.realize(window, margin, rs);
        CellIndex index(cfg);
        std::unordered_map<Vec3i, double, Vec3iHash> cache;
        for (std::size_t i = 0; i < n_sizes; ++i) {
            std::vector<double> vals;
            vals.reserve(sites[i].size());
            for (const Vec3i& k : sites[i]) {
                auto it = cache.find(k);
                if (it == cache.end())
                    it = cache.emplace(k, detail::cell_value(index, k, stat)).first;
                vals.push_back(it->second);
            }
            avgs[i][r] = vals.empty() ? 0.0 : pairwise_sum(vals) / seq.shape(i).volume();
        }
    });

    std::vector<ErgodicSizeResult> out(n_sizes);
    for (std::size_t i = 0; i < n_sizes; ++i) {
        ErgodicSizeResult& e = out[i];
        e.size = seq.sizes[i];
        e.volume = seq.shape(i).volume();
        e.site_count = sites[i].size();
        e.trace_average = avgs[i][0];
        auto s = summarize(avgs[i]);
        e.cross_mean = s.mean;
        std::vector<double> devs(replicas);
        for (std::size_t r = 0; r < replicas; ++r) devs[r] = std::abs(avgs[i][r] - s.mean);
        auto ds = summarize(devs);
        e.l1_error = ds.mean;
        e.l1_error_se = ds.std_error;
    }
    return out;
}

struct NeutralitySizeResult {
    double size = 0.0;
    double volume = 0.0;
    SampleSummary estimate;  // of (1/|D|) sum of charges in D
};

// Charge density per volume across domain sizes; converges to the mean charge
// per unit cell.
inline std::vector<NeutralitySizeResult> neutrality_estimate(const ModelSpec& model,
                                                             const DomainSequence& seq,
                                                             std::size_t replicas,
                                                             std::uint64_t seed,
                                                             unsigned threads = 0) {
    if (replicas < 2) throw std::invalid_argument("neutrality_estimate: need >= 2 replicas");
    std::vector<NeutralitySizeResult> out(seq.count());
    for (std::size_t i = 0; i < seq.count(); ++i) {
        DomainShape d = seq.shape(i);
        Box3 bb = d.bounding_box();
        Box3 window{bb.lo, bb.hi};
        double margin = model.displacement.max_cutoff();
        if (model.poisson) margin = 0.0;
        std::vector<double> density(replicas);
        parallel_for(replicas, threads, [&](std::size_t r) {
            NuclearConfiguration cfg =
                model.realize(window, margin, MomentEstimate::replica_seed(seed, r));
            std::vector<double> charges;
            for (std::size_t n = 0; n < cfg.size(); ++n) {
                const Nucleus& nuc = cfg.nuclei[n];
                if (d.contains_parts(cfg.lattice.site_position(nuc.site), nuc.disp))
                    charges.push_back(nuc.charge);
            }
            density[r] = charges.empty() ? 0.0 : pairwise_sum(charges) / d.volume();
        });
        out[i].size = seq.sizes[i];
        out[i].volume = d.volume();
        out[i].estimate = summarize(density);
    }
    return out;
}

struct ScalingSizeResult {
    double size = 0.0;
    double volume = 0.0;
    std::size_t replicas = 0;
    double mean = 0.0;      // mean of F/|D|
    double l1_dev = 0.0;    // mean |F/|D| - mean|
    double mean_se = 0.0;
    double kinetic_mean = 0.0;   // per-volume kinetic component
    double boundary_mean = 0.0;  // per-volume boundary component
};

struct ScalingSeries {
    std::vector<ScalingSizeResult> per_size;
    std::vector<double> fisher_a;    // boundary-regularity audit per size
    double fitted_limit = 0.0;       // Richardson from the two largest sizes
    double fitted_correction = 0.0;  // coefficient of the |D|^(-1/3) term
    double fit_residual_at_largest = 0.0;  // of the all-sizes least-squares fit
    double fitted_limit_all_sizes = 0.0;
    double l1_decay_slope = 0.0;  // of log l1_dev against log |D|
    double l1_decay_slope_se = 0.0;
};

// Per-volume trial energy across growing domains: means, fluctuation sizes,
// and the extrapolated infinite-volume value assuming a surface correction
// proportional to |D|^(-1/3).
inline ScalingSeries thermo_scan(const ModelSpec& model, const DomainSequence& seq,
                                 double cone_epsilon, double c_kin, std::size_t replicas,
                                 std::uint64_t seed, unsigned threads = 0) {
    if (replicas < 30) throw std::invalid_argument("thermo_scan: need >= 30 replicas");
    ScalingSeries series;
    series.per_size.resize(seq.count());
    for (std::size_t i = 0; i < seq.count(); ++i) {
        DomainShape d = seq.shape(i);
        // boundary-regularity audit of the sequence member
        series.fisher_a.push_back(
            fisher_a_estimate(d, {0.01, 0.02}, 30000, derive_key(seed, stream::mc, i)).a);
        Box3 window = d.bounding_box();
        double margin = std::max(model.displacement.max_cutoff(),
                                 model.poisson ? 0.0 : 0.5) +
                        1.0 + cone_epsilon;
        std::vector<double> density(replicas), kin(replicas), bnd(replicas);
        parallel_for(replicas, threads, [&](std::size_t r) {
            NuclearConfiguration cfg =
                model.realize(window, margin, MomentEstimate::replica_seed(seed, r));
            auto rep = trial_energy(cfg, d, cone_epsilon, c_kin);
            density[r] = rep.total() / d.volume();
            kin[r] = rep.kinetic / d.volume();
            bnd[r] = rep.boundary / d.volume();
        });
        auto s = summarize(density);
        ScalingSizeResult& res = series.per_size[i];
        res.size = seq.sizes[i];
        res.volume = d.volume();
        res.replicas = replicas;
        res.mean = s.mean;
        res.mean_se = s.std_error;
        std::vector<double> devs(replicas);
        for (std::size_t r = 0; r < replicas; ++r) devs[r] = std::abs(density[r] - s.mean);
        res.l1_dev = mean_of(devs);
        res.kinetic_mean = mean_of(kin);
        res.boundary_mean = mean_of(bnd);
    }

    const std::size_t n = series.per_size.size();
    if (n >= 2) {
        // Richardson step from the two largest sizes: m = f + b V^{-1/3}.
        const auto& a = series.per_size[n - 2];
        const auto& b = series.per_size[n - 1];
        double xa = std::pow(a.volume, -1.0 / 3.0), xb = std::pow(b.volume, -1.0 / 3.0);
        series.fitted_correction = (a.mean - b.mean) / (xa - xb);
        series.fitted_limit = b.mean - series.fitted_correction * xb;
    }
    if (n >= 3) {
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = std::pow(series.per_size[i].volume, -1.0 / 3.0);
            ys[i] = series.per_size[i].mean;
        }
        auto f = ols_fit(xs, ys);
        series.fitted_limit_all_sizes = f.intercept;
        series.fit_residual_at_largest =
            ys[n - 1] - (f.intercept + f.slope * xs[n - 1]);
        // fluctuation decay
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < n; ++i) {
            if (series.per_size[i].l1_dev <= 0) continue;
            lx.push_back(std::log(series.per_size[i].volume));
            ly.push_back(std::log(series.per_size[i].l1_dev));
        }
        if (lx.size() >= 2) {
            auto lf = ols_fit(lx, ly);
            series.l1_decay_slope = lf.slope;
            series.l1_decay_slope_se = lf.slope_se;
        }
    }
    return series;
}

struct GapReport {
    double lhs = 0.0;            // F(omega, D)
    double integral_mean = 0.0;  // MC of sum_j F(omega, D cap pose_j) / |l simplex|
    double integral_se = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  // lhs - rhs, reported as a diagnostic (no sign asserted)
    std::size_t nuclei_in_domain = 0;
};

// Diagnostic gap between the trial energy of D and its simplex-average lower
// combination: rhs = (1 - C/l) < integral > - (C/l) (#nuclei + |D|). The
// averaged functional here is the classical trial energy, so the gap's sign
// carries no claim; the report is descriptive.
inline GapReport graf_schenker_gap(const NuclearConfiguration& config, const DomainShape& d,
                                   const TilingSpec& tiling, double c_gs, double cone_epsilon,
                                   double c_kin, std::size_t n_g, std::uint64_t seed) {
    if (n_g < 500) throw std::invalid_argument("graf_schenker_gap: need n_g >= 500");
    CellIndex index(config);
    GapReport rep;
    auto full = trial_energy(index, d, cone_epsilon, c_kin);
    rep.lhs = full.total();
    rep.nuclei_in_domain = full.nuclei_in_domain;

    // Precompute per-nucleus data shared by every pose.
    struct NucInfo {
        Vec3 pos;
        double charge = 0;
        double kin_term = 0;   // c_kin z^(5/3) / delta'^2
        double d_domain = 0;   // distance to the boundary of D
        bool in_domain = false;
    };
    std::vector<NucInfo> info(config.size());
    for (std::size_t i = 0; i < config.size(); ++i) {
        const Nucleus& nuc = config.nuclei[i];
        NucInfo& ni = info[i];
        ni.pos = config.position(i);
        ni.charge = nuc.charge;
        Vec3 site = config.lattice.site_position(nuc.site);
        ni.in_domain = d.contains_parts(site, nuc.disp);
        if (!ni.in_domain) continue;
        double dp = std::min(index.nearest_neighbor(i).delta, cone_epsilon);
        ni.kin_term = c_kin * std::pow(nuc.charge, 5.0 / 3.0) / (dp * dp);
        ni.d_domain = d.boundary_distance_parts(site, nuc.disp);
    }

    const double ell = tiling.scale;
    std::vector<double> per_g(n_g);
    for (std::size_t gi = 0; gi < n_g; ++gi) {
        GroupElement g =
            sample_group_element(config.lattice, TranslationMode::CellTranslation,
                                 derive_key(seed, stream::rotation, gi));
        std::array<Vec3, 4> w;
        Box3 sb{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
        for (int i = 0; i < 4; ++i) {
            w[i] = g.rotation * (tiling.simplex[i] * ell);
            sb.lo = {std::min(sb.lo.x, w[i].x), std::min(sb.lo.y, w[i].y),
                     std::min(sb.lo.z, w[i].z)};
            sb.hi = {std::max(sb.hi.x, w[i].x), std::max(sb.hi.y, w[i].y),
                     std::max(sb.hi.z, w[i].z)};
        }
        Mat3 tmat;
        tmat.c[0] = w[1] - w[0];
        tmat.c[1] = w[2] - w[0];
        tmat.c[2] = w[3] - w[0];
        Mat3 tinv = tmat.inverse();
        static const int tetra_faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
        std::array<Vec3, 4> face_n;
        std::array<double, 4> face_d;
        Vec3 centroid = (w[0] + w[1] + w[2] + w[3]) * 0.25;
        for (int f = 0; f < 4; ++f) {
            Vec3 nrm = (w[tetra_faces[f][1]] - w[tetra_faces[f][0]])
                           .cross(w[tetra_faces[f][2]] - w[tetra_faces[f][0]])
                           .normalized();
            double dd = nrm.dot(w[tetra_faces[f][0]]);
            if (nrm.dot(centroid) > dd) {
                nrm = -nrm;
                dd = -dd;
            }
            face_n[f] = nrm;
            face_d[f] = dd;
        }

        // Assign every in-domain nucleus to the lattice translates of the
        // pose that contain it.
        std::unordered_map<Vec3i, std::vector<std::size_t>, Vec3iHash> pose_members;
        for (std::size_t i = 0; i < config.size(); ++i) {
            if (!info[i].in_domain) continue;
            Vec3 y = info[i].pos - g.translation;
            Vec3 lo = y - sb.hi, hi = y - sb.lo;
            for (std::int64_t jx = static_cast<std::int64_t>(std::ceil(lo.x));
                 jx <= static_cast<std::int64_t>(std::floor(hi.x)); ++jx)
                for (std::int64_t jy = static_cast<std::int64_t>(std::ceil(lo.y));
                     jy <= static_cast<std::int64_t>(std::floor(hi.y)); ++jy)
                    for (std::int64_t jz = static_cast<std::int64_t>(std::ceil(lo.z));
                         jz <= static_cast<std::int64_t>(std::floor(hi.z)); ++jz) {
                        Vec3 q{y.x - static_cast<double>(jx), y.y - static_cast<double>(jy),
                               y.z - static_cast<double>(jz)};
                        Vec3 b = tinv * (q - w[0]);
                        if (b.x >= 0 && b.y >= 0 && b.z >= 0 && b.x + b.y + b.z <= 1.0)
                            pose_members[{jx, jy, jz}].push_back(i);
                    }
        }

        double sum_f = 0;
        for (auto& [j, members] : pose_members) {
            // distance of a member to the pose boundary (inside by construction)
            auto pose_depth = [&](const Vec3& p) {
                Vec3 q = p - g.translation - j.to_vec3();
                double depth = 1e300;
                for (int f = 0; f < 4; ++f)
                    depth = std::min(depth, face_d[f] - face_n[f].dot(q));
                return depth;
            };
            std::vector<std::size_t> collar;
            for (std::size_t i : members) {
                sum_f += info[i].kin_term;
                double depth = std::min(info[i].d_domain, pose_depth(info[i].pos));
                if (depth <= cone_epsilon) collar.push_back(i);
            }
            for (std::size_t a = 0; a < collar.size(); ++a)
                for (std::size_t b = a + 1; b < collar.size(); ++b) {
                    double r = (info[collar[a]].pos - info[collar[b]].pos).norm();
                    sum_f += info[collar[a]].charge * info[collar[b]].charge /
                             (r * (1 + r * r));
                }
        }
        per_g[gi] = sum_f / tiling.scaled_volume();
    }
    auto s = summarize(per_g);
    rep.integral_mean = s.mean;
    rep.integral_se = s.std_error;
    rep.rhs = (1.0 - c_gs / ell) * rep.integral_mean -
              (c_gs / ell) * (static_cast<double>(rep.nuclei_in_domain) + d.volume());
    rep.gap = rep.lhs - rep.rhs;
    return rep;
}

}  // namespace randlat
