#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "gravloc/setup.hpp"

namespace gravloc {

/// Halved gravitational mutual potential of two interpenetrating uniform
/// balls of mass M and radius R, separation r. Interior branch is a quintic
/// polynomial, exterior is -GM^2/(2r); both agree at r = 2R. The interior
/// branch is used for r <= 2R (fixed convention, immaterial by continuity).
inline double potential(const PhysicalSetup& s, double r) {
    if (r < 0) throw std::invalid_argument("potential: r must be non-negative");
    const double gm2 = s.consts.G * s.mass * s.mass;
    const double R = s.radius;
    if (r <= 2.0 * R) {
        const double R2 = R * R;
        const double R3 = R2 * R;
        const double r2 = r * r;
        const double poly = 80.0 * R3 * r2 - 30.0 * R2 * r2 * r + r2 * r2 * r - 192.0 * R3 * R2;
        return 0.5 * gm2 * poly / (160.0 * R3 * R3);
    }
    return -0.5 * gm2 / r;
}

struct HarmonicParams {
    double omega;         // s^-1, small-oscillation frequency about r = 0
    double ground_width;  // cm, Gaussian width of the corresponding ground state
};

/// Quadratic term of the potential at the origin, V = V(0) + (GM^2/4R^3) r^2,
/// with reduced mass M/2: omega = sqrt(GM/R^3). The ground state
/// exp(-r^2 / 2w^2) has w = sqrt(hbar / (mu omega)) = 2^{-1/4} lambda_g.
inline HarmonicParams harmonic_params(const PhysicalSetup& s) {
    if (!(s.lambda_g < s.radius)) throw std::invalid_argument("harmonic_params: lambda_g >= R");
    const double omega = std::sqrt(s.consts.G * s.mass / (s.radius * s.radius * s.radius));
    const double width = std::sqrt(2.0 * s.consts.hbar / (s.mass * omega));
    return {omega, width};
}

/// Potential sampled once on the solver grid; per-step cost is a lookup.
struct PotentialTable {
    std::vector<double> r;
    std::vector<double> v;

    template <class Grid>
    static PotentialTable build(const PhysicalSetup& s, const Grid& grid) {
        PotentialTable t;
        t.r.reserve(grid.n_points);
        t.v.reserve(grid.n_points);
        for (int i = 0; i < grid.n_points; ++i) {
            t.r.push_back(grid.r(i));
            t.v.push_back(potential(s, grid.r(i)));
        }
        return t;
    }

    void dump_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("PotentialTable: cannot open " + path);
        out << "r,V\n";
        char buf[80];
        for (size_t i = 0; i < r.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r[i], v[i]);
            out << buf;
        }
    }
};

}  // namespace gravloc
