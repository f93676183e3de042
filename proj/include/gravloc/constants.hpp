#pragma once

namespace gravloc {

// CGS units throughout the library: cm, g, s, erg.
struct Constants {
    double G = 6.674e-8;       // gravitational constant, cm^3 g^-1 s^-2
    double hbar = 1.0546e-27;  // reduced Planck constant, erg s
    double m_p = 1.6726e-24;   // proton mass, g
};

inline constexpr Constants kCgs{};

}  // namespace gravloc
