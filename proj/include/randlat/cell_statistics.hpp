#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "randlat/cell_index.hpp"
#include "randlat/stats.hpp"

namespace randlat {

// Per-cell occupation and inverse-distance statistics:
//   X0          number of nuclei in the cell,
//   X1          sum of 1/delta over those nuclei,
//   X'_p(eps)   sum of min(delta, eps)^(-p)  (truncated inverse distances).
struct CellStatistics {
    Vec3i cell{};
    std::int64_t x0 = 0;
    double x1 = 0.0;
    std::vector<std::pair<double, double>> xp;  // (p, X'_p(eps)) in p_list order
    std::vector<double> deltas;
    bool margin_truncated = false;

    double xp_value(double p) const {
        for (auto& [q, v] : xp)
            if (q == p) return v;
        throw std::invalid_argument("CellStatistics: exponent was not requested");
    }
};

// True when the whole cell W + j lies inside the window (margin cells carry
// biased nearest-neighbor distances and are rejected for statistics).
inline bool cell_inside_window(const NuclearConfiguration& cfg, const Vec3i& j) {
    Box3 cb = cfg.lattice.cell_box(j);
    return cfg.window.contains(cb.lo) &&
           cb.hi.x <= cfg.window.hi.x && cb.hi.y <= cfg.window.hi.y && cb.hi.z <= cfg.window.hi.z;
}

inline CellStatistics cell_statistics(const CellIndex& index, const Vec3i& j, double eps,
                                      const std::vector<double>& p_list = {1.0, 2.0}) {
    const NuclearConfiguration& cfg = index.config();
    if (!cell_inside_window(cfg, j))
        throw std::invalid_argument(
            "cell_statistics: cell lies in the margin region (biased distances)");
    if (!(eps > 0)) throw std::invalid_argument("cell_statistics: eps must be > 0");

    CellStatistics st;
    st.cell = j;
    auto [b, e] = index.bucket(j);
    st.deltas.reserve(static_cast<std::size_t>(e - b));
    for (auto* p = b; p != e; ++p) {
        NeighborDistance nd = index.nearest_neighbor(*p);
        st.deltas.push_back(nd.delta);
        st.margin_truncated = st.margin_truncated || nd.margin_truncated;
    }
    st.x0 = static_cast<std::int64_t>(st.deltas.size());
    std::vector<double> inv(st.deltas.size());
    for (std::size_t i = 0; i < st.deltas.size(); ++i) inv[i] = 1.0 / st.deltas[i];
    st.x1 = inv.empty() ? 0.0 : pairwise_sum(inv);
    for (double p : p_list) {
        if (!(p > 0)) throw std::invalid_argument("cell_statistics: exponents must be > 0");
        std::vector<double> terms(st.deltas.size());
        for (std::size_t i = 0; i < st.deltas.size(); ++i)
            terms[i] = std::pow(std::min(st.deltas[i], eps), -p);
        st.xp.emplace_back(p, terms.empty() ? 0.0 : pairwise_sum(terms));
    }
    return st;
}

// All cells fully inside the window, in lexicographic order.
inline std::vector<Vec3i> interior_cells(const NuclearConfiguration& cfg) {
    std::vector<Vec3i> cells;
    Box3 w = cfg.window;
    Vec3i lo = cfg.lattice.cell_of(w.lo);
    Vec3i hi = cfg.lattice.cell_of(w.hi);
    for (std::int64_t x = lo.x - 1; x <= hi.x + 1; ++x)
        for (std::int64_t y = lo.y - 1; y <= hi.y + 1; ++y)
            for (std::int64_t z = lo.z - 1; z <= hi.z + 1; ++z) {
                Vec3i j{x, y, z};
                if (cell_inside_window(cfg, j)) cells.push_back(j);
            }
    return cells;
}

}  // namespace randlat
