#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "randlat/lattice.hpp"
#include "randlat/laws.hpp"
#include "randlat/rng.hpp"
#include "randlat/stats.hpp"
#include "randlat/vec.hpp"

namespace randlat {

// One nucleus, stored as (source site, displacement). Positions are
// materialized as site + displacement; keeping the integer part separate makes
// lattice translations exact and lets pair distances be computed in a
// translation-invariant way.
struct Nucleus {
    Vec3i site;
    Vec3 disp;
    double charge = 0.0;
};

// A finite realization of a stationary random set of charged nuclei,
// restricted to window (+) margin.
struct NuclearConfiguration {
    LatticeSpec lattice = LatticeSpec::cubic();
    Box3 window{};
    double margin = 0.0;
    std::uint64_t seed = 0;
    // Site m draws from the stream keyed by m + key_offset; a configuration
    // shifted by k is statistically the one sampled with key_offset += k.
    Vec3i key_offset{};
    std::string descriptor;
    std::vector<Nucleus> nuclei;

    Box3 expanded_window() const { return window.expanded(margin); }
    std::size_t size() const { return nuclei.size(); }

    Vec3 position(std::size_t i) const {
        const Nucleus& n = nuclei[i];
        return lattice.site_position(n.site) + n.disp;
    }
    Vec3 position(const Nucleus& n) const {
        return lattice.site_position(n.site) + n.disp;
    }

    // Difference position(a) - position(b) computed site-relatively; the value
    // is bit-identical before and after lattice shifts of the configuration.
    Vec3 separation(const Nucleus& a, const Nucleus& b) const {
        return lattice.site_position(a.site - b.site) + (a.disp - b.disp);
    }

    double total_charge() const {
        std::vector<double> z(nuclei.size());
        for (std::size_t i = 0; i < nuclei.size(); ++i) z[i] = nuclei[i].charge;
        return z.empty() ? 0.0 : pairwise_sum(z);
    }
};

namespace detail {

inline void canonical_sort(std::vector<Nucleus>& v) {
    std::sort(v.begin(), v.end(), [](const Nucleus& a, const Nucleus& b) {
        if (a.site != b.site) return a.site < b.site;
        if (a.disp.x != b.disp.x) return a.disp.x < b.disp.x;
        if (a.disp.y != b.disp.y) return a.disp.y < b.disp.y;
        return a.disp.z < b.disp.z;
    });
}

inline std::uint64_t dbits(double x) {
    std::uint64_t u;
    static_assert(sizeof(u) == sizeof(x));
    __builtin_memcpy(&u, &x, sizeof(u));
    return u;
}

}  // namespace detail

// Draws the i.i.d. perturbed-lattice configuration restricted to
// window (+) margin. One nucleus per lattice site whose displaced position can
// reach the expanded window; per-site randomness is keyed by (seed, site), so
// the draw at a given site is the same in every window and the configuration
// is stationary by construction.
inline NuclearConfiguration sample_configuration(const LatticeSpec& lattice,
                                                 const DisplacementLaw& displacement,
                                                 const ChargeLaw& charge, const Box3& window,
                                                 double margin, std::uint64_t seed,
                                                 Vec3i key_offset = {}) {
    if (!window.valid())
        throw std::invalid_argument("sample_configuration: window is empty or degenerate");
    if (!(margin >= 0)) throw std::invalid_argument("sample_configuration: margin must be >= 0");
    if (displacement.truncated() && margin < displacement.max_cutoff()) {
        std::ostringstream os;
        os << "sample_configuration: displacement law " << displacement.describe()
           << " has unbounded support truncated at " << displacement.max_cutoff()
           << "; margin (" << margin << ") must be at least the tail cutoff so the window"
           << " sees every site that can reach it";
        throw std::invalid_argument(os.str());
    }

    NuclearConfiguration cfg;
    cfg.lattice = lattice;
    cfg.window = window;
    cfg.margin = margin;
    cfg.seed = seed;
    cfg.key_offset = key_offset;
    {
        std::ostringstream os;
        os << "{model:iid_perturbed_lattice, displacement:" << displacement.describe()
           << ", charge:" << charge.describe() << ", margin:" << margin << ", seed:" << seed
           << "}";
        cfg.descriptor = os.str();
    }

    const Box3 region = window.expanded(margin);
    const double reach = displacement.support_radius();

    // Candidate sites: fractional bounding box of the region dilated by the
    // support radius (conservative for sheared bases; exact for the cubic one).
    Vec3 flo, fhi;
    if (lattice.is_cubic()) {
        flo = region.lo - Vec3{reach, reach, reach};
        fhi = region.hi + Vec3{reach, reach, reach};
    } else {
        const Mat3& inv = lattice.inverse_basis();
        Box3 dil = region.expanded(reach);
        bool first = true;
        for (int s = 0; s < 8; ++s) {
            Vec3 c{(s & 1) ? dil.hi.x : dil.lo.x, (s & 2) ? dil.hi.y : dil.lo.y,
                   (s & 4) ? dil.hi.z : dil.lo.z};
            Vec3 f = inv * c;
            if (first) {
                flo = fhi = f;
                first = false;
            } else {
                flo = {std::min(flo.x, f.x), std::min(flo.y, f.y), std::min(flo.z, f.z)};
                fhi = {std::max(fhi.x, f.x), std::max(fhi.y, f.y), std::max(fhi.z, f.z)};
            }
        }
    }
    Vec3i jlo{static_cast<std::int64_t>(std::ceil(flo.x)),
              static_cast<std::int64_t>(std::ceil(flo.y)),
              static_cast<std::int64_t>(std::ceil(flo.z))};
    Vec3i jhi{static_cast<std::int64_t>(std::floor(fhi.x)),
              static_cast<std::int64_t>(std::floor(fhi.y)),
              static_cast<std::int64_t>(std::floor(fhi.z))};

    cfg.nuclei.reserve(static_cast<std::size_t>(
        std::max<std::int64_t>(0, (jhi.x - jlo.x + 1)) *
        std::max<std::int64_t>(0, (jhi.y - jlo.y + 1)) *
        std::max<std::int64_t>(0, (jhi.z - jlo.z + 1))));

    const std::uint64_t charge_base = derive_key(seed, stream::charge);
    const std::uint64_t disp_base = derive_key(seed, stream::displacement);
    const bool charge_trivial = charge.is_constant();
    const double z_const = charge.z_max();
    for (std::int64_t i = jlo.x; i <= jhi.x; ++i)
        for (std::int64_t j = jlo.y; j <= jhi.y; ++j)
            for (std::int64_t k = jlo.z; k <= jhi.z; ++k) {
                Vec3i m{i, j, k};
                Vec3i key_site = m + key_offset;
                double z = z_const;
                if (!charge_trivial) {
                    Stream cs(site_key(charge_base, key_site));
                    z = charge.sample(cs);
                    if (z == 0.0) continue;  // vacancy
                }
                Stream ds(site_key(disp_base, key_site));
                Vec3 r = displacement.sample(ds);
                Vec3 pos = lattice.site_position(m) + r;
                if (!region.contains(pos)) continue;
                cfg.nuclei.push_back(Nucleus{m, r, z});
            }

    // The site loop emits in lexicographic site order, which is already the
    // canonical order (one nucleus per site at most).

    // Exact positional collisions have probability zero for continuous laws;
    // the later of a colliding pair (canonical order) is redrawn once from a
    // perturbed key, and dropped if the redraw leaves the region. Candidate
    // collisions are found through a sorted position fingerprint scan.
    std::vector<std::pair<std::uint64_t, std::uint32_t>> prints(cfg.nuclei.size());
    for (std::size_t idx = 0; idx < cfg.nuclei.size(); ++idx) {
        Vec3 p = cfg.position(idx);
        prints[idx] = {fmix64(detail::dbits(p.x) ^
                              fmix64(detail::dbits(p.y) +
                                     0x9e3779b97f4a7c15ULL * detail::dbits(p.z))),
                       static_cast<std::uint32_t>(idx)};
    }
    std::sort(prints.begin(), prints.end());
    std::vector<std::size_t> drop;
    for (std::size_t i = 1; i < prints.size(); ++i) {
        if (prints[i].first != prints[i - 1].first) continue;
        std::size_t a = prints[i - 1].second, b = prints[i].second;
        if (!(cfg.position(a) == cfg.position(b))) continue;  // fingerprint collision only
        std::size_t later = std::max(a, b);
        Nucleus& n = cfg.nuclei[later];
        Stream rs(derive_key(seed, stream::resample, n.site + key_offset));
        n.disp = displacement.sample(rs);
        if (!region.contains(cfg.position(later))) {
            drop.push_back(later);
            continue;
        }
        for (std::size_t idx = 0; idx < cfg.nuclei.size(); ++idx)
            if (idx != later && cfg.position(idx) == cfg.position(later))
                throw std::runtime_error(
                    "sample_configuration: duplicate nucleus position persisted after resample");
    }
    if (!drop.empty()) {
        std::sort(drop.begin(), drop.end());
        for (auto it = drop.rbegin(); it != drop.rend(); ++it)
            cfg.nuclei.erase(cfg.nuclei.begin() + static_cast<std::ptrdiff_t>(*it));
    }
    return cfg;
}

// Lattice translation of a configuration: positions and window move by -B k,
// and the key offset advances by k so the result is exactly the configuration
// sampled in the shifted frame.
inline NuclearConfiguration shift_configuration(const NuclearConfiguration& config,
                                                const Vec3i& k) {
    NuclearConfiguration out = config;
    Vec3 t = config.lattice.site_position(k);
    out.window = config.window.translated(-t);
    out.key_offset = config.key_offset + k;
    for (Nucleus& n : out.nuclei) n.site = n.site - k;
    detail::canonical_sort(out.nuclei);
    return out;
}

// Homogeneous Poisson field on window (+) margin with i.i.d. charge marks.
inline NuclearConfiguration poisson_configuration(double intensity, const ChargeLaw& charge,
                                                  const Box3& window, double margin,
                                                  std::uint64_t seed) {
    if (!(intensity > 0))
        throw std::invalid_argument("poisson_configuration: intensity must be > 0");
    if (!(margin >= 0)) throw std::invalid_argument("poisson_configuration: margin must be >= 0");

    NuclearConfiguration cfg;
    cfg.lattice = LatticeSpec::cubic();
    cfg.window = window;
    cfg.margin = margin;
    cfg.seed = seed;
    {
        std::ostringstream os;
        os << "{model:poisson, intensity:" << intensity << ", charge:" << charge.describe()
           << ", margin:" << margin << ", seed:" << seed << "}";
        cfg.descriptor = os.str();
    }
    if (!window.valid()) return cfg;  // empty region carries no nuclei

    const Box3 region = window.expanded(margin);
    Stream s(derive_key(seed, stream::poisson));
    std::uint64_t n = s.next_poisson(intensity * region.volume());
    cfg.nuclei.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Vec3 pos = s.uniform_in_box(region);
        double z = charge.sample(s);
        if (z == 0.0) continue;
        Vec3i cell = cfg.lattice.cell_of(pos);
        cfg.nuclei.push_back(Nucleus{cell, pos - cell.to_vec3(), z});
    }
    detail::canonical_sort(cfg.nuclei);
    return cfg;
}

}  // namespace randlat
