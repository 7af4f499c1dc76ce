#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "randlat/configuration.hpp"
#include "randlat/lattice.hpp"
#include "randlat/vec.hpp"

namespace randlat {

struct NeighborDistance {
    double delta = 0.0;
    // Set when no neighbor could be certified inside window (+) margin; the
    // reported delta is then capped by the distance to the region boundary.
    bool margin_truncated = false;
};

// Immutable cell-list index over one configuration. Buckets are the lattice
// cells containing each nucleus position, laid out as a counting-sorted flat
// array over the dense cell range of the expanded window. Holds a reference:
// the configuration must outlive the index. Safe for concurrent queries after
// construction.
class CellIndex {
public:
    explicit CellIndex(const NuclearConfiguration& config) : cfg_(config) {
        const Box3 region = config.expanded_window();
        // Dense cell range covering the region (cells may stick out of it).
        grid_lo_ = config.lattice.cell_of(region.lo);
        Vec3i hi_cell = config.lattice.cell_of(region.hi);
        // Sheared bases can push positions into cells outside the corner range;
        // widen by one ring to be safe.
        grid_lo_ = grid_lo_ - Vec3i{1, 1, 1};
        hi_cell = hi_cell + Vec3i{1, 1, 1};
        dims_ = {hi_cell.x - grid_lo_.x + 1, hi_cell.y - grid_lo_.y + 1,
                 hi_cell.z - grid_lo_.z + 1};

        cells_.resize(config.size());
        std::vector<std::uint32_t> counts(cell_count() + 1, 0);
        for (std::size_t i = 0; i < config.size(); ++i) {
            const Nucleus& n = config.nuclei[i];
            Vec3i c = config.lattice.cell_of_parts(n.site, n.disp);
            cells_[i] = c;
            std::int64_t li = linear(c);
            if (li < 0)
                throw std::runtime_error("CellIndex: nucleus position outside the cell grid");
            ++counts[static_cast<std::size_t>(li) + 1];
        }
        for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
        start_ = counts;
        items_.resize(config.size());
        std::vector<std::uint32_t> cursor(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < config.size(); ++i) {
            std::size_t li = static_cast<std::size_t>(linear(cells_[i]));
            items_[cursor[li]++] = static_cast<std::uint32_t>(i);
        }
    }

    const NuclearConfiguration& config() const { return cfg_; }
    std::size_t size() const { return cfg_.size(); }
    const Vec3i& cell_of(std::size_t i) const { return cells_[i]; }

    // Nuclei indices bucketed in cell c (empty span outside the grid).
    std::pair<const std::uint32_t*, const std::uint32_t*> bucket(const Vec3i& c) const {
        std::int64_t li = linear(c);
        if (li < 0) return {nullptr, nullptr};
        std::size_t u = static_cast<std::size_t>(li);
        return {items_.data() + start_[u], items_.data() + start_[u + 1]};
    }

    // Exact nearest-neighbor distance of nucleus i within the indexed set,
    // searched over expanding Chebyshev rings of cells. Rings beyond s are at
    // Euclidean distance >= s * t from anything in the home cell (t = minimal
    // slab thickness), which gives the stopping rule.
    NeighborDistance nearest_neighbor(std::size_t i) const {
        if (cfg_.size() < 2)
            throw std::invalid_argument(
                "nearest_neighbor: undefined for configurations with fewer than 2 nuclei");
        const Nucleus& a = cfg_.nuclei[i];
        const Vec3i home = cells_[i];
        const double t = cfg_.lattice.cell_min_thickness();

        double best2 = std::numeric_limits<double>::infinity();
        const std::int64_t max_ring = std::max({dims_.x, dims_.y, dims_.z});
        for (std::int64_t s = 0; s <= max_ring; ++s) {
            if (s > 0) {
                double cutoff = static_cast<double>(s - 1) * t;
                if (best2 <= cutoff * cutoff) break;
            }
            scan_ring(home, s, [&](std::uint32_t idx) {
                if (static_cast<std::size_t>(idx) == i) return;
                double d2 = cfg_.separation(a, cfg_.nuclei[idx]).norm2();
                if (d2 < best2) best2 = d2;
            });
        }

        NeighborDistance out;
        out.delta = std::sqrt(best2);
        // The found value is exact for the indexed set; it is the true
        // nearest-neighbor distance of the underlying infinite configuration
        // whenever it does not exceed the distance to the region boundary
        // (an unseen outside nucleus can only be farther than that). Otherwise
        // flag the value: it can only overestimate, so 1/delta sums are
        // underestimated, never inflated.
        double bd = cfg_.expanded_window().interior_depth(cfg_.position(i));
        out.margin_truncated = !(out.delta <= bd);
        if (!(out.delta > 0))
            throw std::runtime_error("nearest_neighbor: nonpositive distance (duplicate nuclei?)");
        return out;
    }

    // Locates a nucleus by exact (site, displacement) identity.
    std::size_t index_of(const Nucleus& n) const {
        Vec3i c = cfg_.lattice.cell_of_parts(n.site, n.disp);
        auto [b, e] = bucket(c);
        for (auto* p = b; p != e; ++p) {
            const Nucleus& m = cfg_.nuclei[*p];
            if (m.site == n.site && m.disp == n.disp) return *p;
        }
        throw std::invalid_argument("index_of: nucleus does not belong to the indexed configuration");
    }

    Vec3i grid_lo() const { return grid_lo_; }
    Vec3i grid_dims() const { return dims_; }

private:
    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims_.x) * static_cast<std::size_t>(dims_.y) *
               static_cast<std::size_t>(dims_.z);
    }

    std::int64_t linear(const Vec3i& c) const {
        Vec3i r = c - grid_lo_;
        if (r.x < 0 || r.y < 0 || r.z < 0 || r.x >= dims_.x || r.y >= dims_.y || r.z >= dims_.z)
            return -1;
        return (r.x * dims_.y + r.y) * dims_.z + r.z;
    }

    template <class Fn>
    void scan_ring(const Vec3i& home, std::int64_t s, Fn&& fn) const {
        auto visit_cell = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
            auto [b, e] = bucket({x, y, z});
            for (auto* p = b; p != e; ++p) fn(*p);
        };
        if (s == 0) {
            visit_cell(home.x, home.y, home.z);
            return;
        }
        for (std::int64_t dx = -s; dx <= s; ++dx)
            for (std::int64_t dy = -s; dy <= s; ++dy) {
                bool face_x = (dx == -s || dx == s);
                bool face_y = (dy == -s || dy == s);
                if (face_x || face_y) {
                    for (std::int64_t dz = -s; dz <= s; ++dz)
                        visit_cell(home.x + dx, home.y + dy, home.z + dz);
                } else {
                    visit_cell(home.x + dx, home.y + dy, home.z - s);
                    visit_cell(home.x + dx, home.y + dy, home.z + s);
                }
            }
    }

    const NuclearConfiguration& cfg_;
    std::vector<Vec3i> cells_;
    Vec3i grid_lo_{}, dims_{};
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
};

inline CellIndex build_index(const NuclearConfiguration& config) { return CellIndex(config); }

inline NeighborDistance nearest_neighbor_distance(const CellIndex& index, std::size_t i) {
    return index.nearest_neighbor(i);
}
inline NeighborDistance nearest_neighbor_distance(const CellIndex& index, const Nucleus& n) {
    return index.nearest_neighbor(index.index_of(n));
}

}  // namespace randlat
