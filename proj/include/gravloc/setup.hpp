#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "gravloc/constants.hpp"

namespace gravloc {

/// A uniform ball together with every derived scale the pipeline needs.
/// All fields are mutually consistent by construction: the record is only
/// produced by make_setup / apply_scaling and never mutated piecemeal
/// (except for the initial-width override, see with_initial_width).
struct PhysicalSetup {
    Constants consts;
    double mass = 0;      // g
    double radius = 0;    // cm
    double density = 0;   // g cm^-3
    double lambda_g = 0;  // cm, width of the gravitationally bound ground state
    double tau_g = 0;     // s, characteristic localization time
    double lambda0 = 0;   // cm, initial relative-motion width

    double mass_in_proton_masses() const { return mass / consts.m_p; }
};

/// Mass at which lambda_g equals the ball radius; no self-localized bound
/// states exist below it. Scales as density^{1/10}.
inline double threshold_mass(double density, const Constants& c = kCgs) {
    if (!(density > 0)) throw std::invalid_argument("threshold_mass: density must be positive");
    const double h2 = c.hbar * c.hbar;
    return std::pow(8.0 * h2 * std::cbrt(4.0 * M_PI * density / 3.0) / c.G, 0.3);
}

inline PhysicalSetup make_setup(double mass_in_proton_masses, double density,
                                double lambda_multiple, const Constants& c = kCgs) {
    if (!(mass_in_proton_masses > 0)) throw std::invalid_argument("make_setup: mass must be positive");
    if (!(density > 0)) throw std::invalid_argument("make_setup: density must be positive");
    if (!(lambda_multiple >= 1)) throw std::invalid_argument("make_setup: lambda_multiple must be >= 1");

    PhysicalSetup s;
    s.consts = c;
    s.mass = mass_in_proton_masses * c.m_p;
    s.density = density;
    s.radius = std::cbrt(3.0 * s.mass / (4.0 * M_PI * density));
    s.lambda_g = std::pow(8.0 * c.hbar * c.hbar * s.radius * s.radius * s.radius /
                              (c.G * s.mass * s.mass * s.mass),
                          0.25);
    if (s.lambda_g >= s.radius) {
        throw std::invalid_argument(
            "make_setup: lambda_g >= R, mass " + std::to_string(mass_in_proton_masses) +
            " m_p is below the localization threshold " +
            std::to_string(threshold_mass(density, c) / c.m_p) + " m_p");
    }
    s.tau_g = c.hbar / (c.G * std::pow(s.mass, 5.0 / 3.0) * std::cbrt(density));
    s.lambda0 = lambda_multiple * s.lambda_g;
    return s;
}

/// Replaces the initial width with an explicit value (e.g. a published one
/// that does not equal a multiple of this record's lambda_g).
inline PhysicalSetup with_initial_width(PhysicalSetup s, double lambda0_cm) {
    if (!(lambda0_cm > 0)) throw std::invalid_argument("with_initial_width: lambda0 must be positive");
    s.lambda0 = lambda0_cm;
    return s;
}

/// The exact invariance of the dynamics:
///   M -> lambda^{-1/5} M, lengths -> lambda^{3/5} lengths, t -> lambda t
/// (hence density -> lambda^{-2} density). Returns the scaled setup and the
/// scaled time. tau_g of the result is checked to be lambda * tau_g.
inline std::pair<PhysicalSetup, double> apply_scaling(const PhysicalSetup& s, double t,
                                                      double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("apply_scaling: lambda must be positive");
    const double mass_scale = std::pow(lambda, -0.2);
    const double length_scale = std::pow(lambda, 0.6);
    PhysicalSetup out = make_setup(s.mass * mass_scale / s.consts.m_p,
                                   s.density * std::pow(lambda, -2.0), 1.0, s.consts);
    out.lambda0 = length_scale * s.lambda0;
    const double expected_tau = lambda * s.tau_g;
    if (std::abs(out.tau_g - expected_tau) > 1e-9 * expected_tau) {
        throw std::logic_error("apply_scaling: tau_g consistency violated");
    }
    return {out, lambda * t};
}

}  // namespace gravloc
