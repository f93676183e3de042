#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "gravloc/setup.hpp"

namespace gravloc {

/// Center-of-meta-mass Gaussian, known in closed form:
///   psi(S, t) = N(t) exp(-S^2 / w(t)),  w(t) = Lambda^2/2 + i hbar t / M,
/// with S = (X+Y)/2 and N fixed by the 3D normalization of |psi|^2.
struct CmState {
    PhysicalSetup setup;
    double lambda0 = 0;  // cm, initial width Lambda
    double t = 0;

    std::complex<double> w() const {
        return {lambda0 * lambda0 / 2.0, setup.consts.hbar * t / setup.mass};
    }

    /// Width growth factor of |psi|^2 relative to t = 0.
    double spread_factor() const {
        const double x = 2.0 * setup.consts.hbar * t / (setup.mass * lambda0 * lambda0);
        return std::sqrt(1.0 + x * x);
    }
};

inline CmState make_cm_state(const PhysicalSetup& setup, double t) {
    if (t < 0) throw std::invalid_argument("make_cm_state: t must be >= 0");
    return {setup, setup.lambda0, t};
}

/// Amplitude at squared CM coordinate s^2 = |X+Y|^2 / 4.
inline std::complex<double> cm_amplitude(const CmState& cm, double s_sq) {
    const std::complex<double> w = cm.w();
    const double a = std::real(1.0 / w);  // |psi|^2 = |N|^2 exp(-2 a S^2)
    const double norm = std::pow(2.0 * a / M_PI, 0.75);
    return norm * std::exp(-s_sq / w);
}

/// Free-particle relative amplitude with the same Gaussian initial condition,
///   chi(r, t) = N exp(-r^2 / (2 (Lambda^2 + 2 i hbar t / M))),
/// the V = 0 analogue of the numerically propagated state (reduced mass M/2).
/// Normalized so that the 3D integral of |chi|^2 is 1.
struct FreeRelativeAmplitude {
    PhysicalSetup setup;
    double lambda0 = 0;
    double t = 0;

    std::complex<double> operator()(double r) const {
        const std::complex<double> W(lambda0 * lambda0, 2.0 * setup.consts.hbar * t / setup.mass);
        const double a = std::real(1.0 / W);
        const double norm = std::pow(a / M_PI, 0.75);
        return norm * std::exp(-r * r / (2.0 * W));
    }
};

}  // namespace gravloc
