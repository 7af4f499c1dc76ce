#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "randlat/rng.hpp"
#include "randlat/vec.hpp"

namespace randlat {

// Law of the random displacement of one nucleus from its lattice site.
//
// Unbounded laws carry a tail cutoff: draws are conditioned to |r| <= cutoff
// (default 8 sigma for the Gaussian, truncation mass below 1e-14), which makes
// every law compactly supported in practice. The cutoff is part of the law and
// is echoed in configuration descriptors.
class DisplacementLaw {
public:
    enum class Kind { PointMass, GaussianIsotropic, UniformBall, CompactInCell, Mixture };

    static DisplacementLaw point_mass() {
        DisplacementLaw l;
        l.kind_ = Kind::PointMass;
        return l;
    }
    // sigma is the standard deviation per coordinate.
    static DisplacementLaw gaussian_isotropic(double sigma, double cutoff = 0.0) {
        if (!(sigma > 0)) throw std::invalid_argument("gaussian_isotropic: sigma must be > 0");
        DisplacementLaw l;
        l.kind_ = Kind::GaussianIsotropic;
        l.sigma_ = sigma;
        l.cutoff_ = cutoff > 0 ? cutoff : 8.0 * sigma;
        return l;
    }
    static DisplacementLaw uniform_ball(double rho) {
        if (!(rho > 0)) throw std::invalid_argument("uniform_ball: rho must be > 0");
        DisplacementLaw l;
        l.kind_ = Kind::UniformBall;
        l.rho_ = rho;
        return l;
    }
    // Uniform on a sub-box of the fundamental cell (box given in cell-local
    // coordinates; must sit inside [-1/2, 1/2)^3 for the cubic cell).
    static DisplacementLaw compact_in_cell(const Box3& sub_box) {
        if (!sub_box.valid()) throw std::invalid_argument("compact_in_cell: empty sub-box");
        for (int a = 0; a < 3; ++a)
            if (sub_box.lo[a] < -0.5 || sub_box.hi[a] > 0.5)
                throw std::invalid_argument("compact_in_cell: sub-box must lie inside the cell");
        DisplacementLaw l;
        l.kind_ = Kind::CompactInCell;
        l.box_ = sub_box;
        return l;
    }
    static DisplacementLaw mixture(std::vector<std::pair<double, DisplacementLaw>> parts) {
        if (parts.empty()) throw std::invalid_argument("mixture: no components");
        double total = 0;
        for (auto& [w, law] : parts) {
            if (!(w > 0)) throw std::invalid_argument("mixture: weights must be > 0");
            if (law.kind_ == Kind::Mixture)
                throw std::invalid_argument("mixture: nested mixtures not supported");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("mixture: weights must sum to 1");
        DisplacementLaw l;
        l.kind_ = Kind::Mixture;
        l.parts_ = std::move(parts);
        return l;
    }

    Kind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    double rho() const { return rho_; }
    const Box3& sub_box() const { return box_; }

    // True when the law needed a tail cutoff (its natural support is unbounded).
    bool truncated() const {
        if (kind_ == Kind::GaussianIsotropic) return true;
        if (kind_ == Kind::Mixture)
            for (auto& [w, law] : parts_)
                if (law.truncated()) return true;
        return false;
    }

    // Largest tail cutoff among truncated components; 0 for compact laws.
    double max_cutoff() const {
        if (kind_ == Kind::GaussianIsotropic) return cutoff_;
        if (kind_ == Kind::Mixture) {
            double c = 0;
            for (auto& [w, law] : parts_) c = std::max(c, law.max_cutoff());
            return c;
        }
        return 0.0;
    }

    // Radius of a ball (centered at the site) containing the support.
    double support_radius() const {
        switch (kind_) {
            case Kind::PointMass: return 0.0;
            case Kind::GaussianIsotropic: return cutoff_;
            case Kind::UniformBall: return rho_;
            case Kind::CompactInCell: {
                double r2 = 0;
                for (int s = 0; s < 8; ++s) {
                    Vec3 c{(s & 1) ? box_.hi.x : box_.lo.x, (s & 2) ? box_.hi.y : box_.lo.y,
                           (s & 4) ? box_.hi.z : box_.lo.z};
                    r2 = std::max(r2, c.norm2());
                }
                return std::sqrt(r2);
            }
            case Kind::Mixture: {
                double r = 0;
                for (auto& [w, law] : parts_) r = std::max(r, law.support_radius());
                return r;
            }
        }
        return 0.0;
    }
    double cutoff() const { return cutoff_; }

    Vec3 sample(Stream& s) const {
        switch (kind_) {
            case Kind::PointMass: return {0, 0, 0};
            case Kind::GaussianIsotropic:
                for (;;) {
                    Vec3 r = s.next_normal3() * sigma_;
                    if (r.norm2() <= cutoff_ * cutoff_) return r;
                }
            case Kind::UniformBall: return s.uniform_in_ball(rho_);
            case Kind::CompactInCell: return s.uniform_in_box(box_);
            case Kind::Mixture: {
                double u = s.next_double();
                double acc = 0;
                for (auto& [w, law] : parts_) {
                    acc += w;
                    if (u < acc) return law.sample(s);
                }
                return parts_.back().second.sample(s);
            }
        }
        return {0, 0, 0};
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::PointMass: os << "point_mass"; break;
            case Kind::GaussianIsotropic:
                os << "gaussian_isotropic(sigma=" << sigma_ << ",cutoff=" << cutoff_ << ")";
                break;
            case Kind::UniformBall: os << "uniform_ball(rho=" << rho_ << ")"; break;
            case Kind::CompactInCell:
                os << "compact_in_cell([" << box_.lo.x << "," << box_.hi.x << ")x[" << box_.lo.y
                   << "," << box_.hi.y << ")x[" << box_.lo.z << "," << box_.hi.z << "))";
                break;
            case Kind::Mixture: {
                os << "mixture(";
                bool first = true;
                for (auto& [w, law] : parts_) {
                    if (!first) os << ",";
                    os << w << ":" << law.describe();
                    first = false;
                }
                os << ")";
                break;
            }
        }
        return os.str();
    }

private:
    Kind kind_ = Kind::PointMass;
    double sigma_ = 0.0;
    double cutoff_ = 0.0;
    double rho_ = 0.0;
    Box3 box_{};
    std::vector<std::pair<double, DisplacementLaw>> parts_;
};

// Law of the nuclear charge mark. A zero draw means vacancy: the nucleus is
// removed from the configuration.
class ChargeLaw {
public:
    enum class Kind { Constant, UniformInterval, Vacancy };

    static ChargeLaw constant(double z) {
        if (!(z > 0)) throw std::invalid_argument("ChargeLaw::constant: Z must be > 0");
        ChargeLaw l;
        l.kind_ = Kind::Constant;
        l.z_min_ = l.z_max_ = z;
        return l;
    }
    static ChargeLaw uniform_interval(double z_min, double z_max) {
        if (!(0 < z_min && z_min <= z_max))
            throw std::invalid_argument("ChargeLaw::uniform_interval: need 0 < Z_min <= Z_max");
        ChargeLaw l;
        l.kind_ = Kind::UniformInterval;
        l.z_min_ = z_min;
        l.z_max_ = z_max;
        return l;
    }
    static ChargeLaw vacancy(double p_vac, double z) {
        if (!(p_vac >= 0 && p_vac < 1))
            throw std::invalid_argument("ChargeLaw::vacancy: need 0 <= p_vac < 1");
        if (!(z > 0)) throw std::invalid_argument("ChargeLaw::vacancy: Z must be > 0");
        ChargeLaw l;
        l.kind_ = Kind::Vacancy;
        l.p_vac_ = p_vac;
        l.z_min_ = l.z_max_ = z;
        return l;
    }

    Kind kind() const { return kind_; }
    double z_min() const { return z_min_; }
    double z_max() const { return z_max_; }
    bool is_constant() const { return kind_ == Kind::Constant; }
    double mean() const {
        switch (kind_) {
            case Kind::Constant: return z_max_;
            case Kind::UniformInterval: return 0.5 * (z_min_ + z_max_);
            case Kind::Vacancy: return (1.0 - p_vac_) * z_max_;
        }
        return 0.0;
    }

    // Returns 0 for a vacancy, otherwise a charge in [z_min, z_max].
    double sample(Stream& s) const {
        switch (kind_) {
            case Kind::Constant: return z_max_;
            case Kind::UniformInterval: return s.uniform(z_min_, z_max_);
            case Kind::Vacancy: return s.next_double() < p_vac_ ? 0.0 : z_max_;
        }
        return 0.0;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::Constant: os << "constant(Z=" << z_max_ << ")"; break;
            case Kind::UniformInterval:
                os << "uniform_interval(" << z_min_ << "," << z_max_ << ")";
                break;
            case Kind::Vacancy: os << "vacancy(p=" << p_vac_ << ",Z=" << z_max_ << ")"; break;
        }
        return os.str();
    }

private:
    Kind kind_ = Kind::Constant;
    double z_min_ = 1.0;
    double z_max_ = 1.0;
    double p_vac_ = 0.0;
};

}  // namespace randlat
