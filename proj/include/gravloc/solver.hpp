#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "gravloc/potential.hpp"
#include "gravloc/setup.hpp"

namespace gravloc {

using cplx = std::complex<double>;

/// Uniform grid for the reduced radial function u(r) = r chi(r) on (0, r_max)
/// with implicit Dirichlet nodes u = 0 at r = 0 and r = r_max.
struct RadialGrid {
    int n_points = 0;
    double r_max = 0;
    double dr = 0;

    static RadialGrid uniform(int n_points, double r_max) {
        if (n_points < 2 || !(r_max > 0)) throw std::invalid_argument("RadialGrid: bad parameters");
        return {n_points, r_max, r_max / (n_points + 1)};
    }
    double r(int i) const { return dr * (i + 1); }
};

struct RadialState {
    RadialGrid grid;
    std::vector<cplx> u;  // dimension cm^{-1/2}, sum |u_i|^2 dr = 1
    double t = 0;

    double norm() const {
        double s = 0;
        for (const cplx& a : u) s += std::norm(a);
        return s * grid.dr;
    }
};

/// Initial Gaussian u_i = r_i exp(-r_i^2 / 2 lambda0^2), unit discrete norm.
/// The tail truncated by the Dirichlet wall is renormalized away here.
inline RadialState initial_state(const PhysicalSetup& setup, const RadialGrid& grid) {
    if (!(grid.dr < setup.lambda0 / 20.0)) {
        throw std::invalid_argument("initial_state: grid too coarse, need dr < lambda0/20");
    }
    RadialState st;
    st.grid = grid;
    st.u.resize(grid.n_points);
    const double L2 = setup.lambda0 * setup.lambda0;
    double nrm = 0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double r = grid.r(i);
        const double a = r * std::exp(-r * r / (2.0 * L2));
        st.u[i] = a;
        nrm += a * a;
    }
    nrm = std::sqrt(nrm * grid.dr);
    for (cplx& a : st.u) a /= nrm;
    return st;
}

/// Cayley form of one Crank-Nicolson step,
///   (1 + i H dt / 2 hbar) u(t+dt) = (1 - i H dt / 2 hbar) u(t),
/// with H = -(hbar^2/M) d^2/dr^2 + V (reduced mass M/2, three-point stencil).
/// The tridiagonal left-hand factor is eliminated once at construction; a
/// step is then one sweep of back substitution.
struct PropagatorWorkspace {
    RadialGrid grid;
    double dt = 0;
    double hbar = 0;
    cplx a_off;               // constant off-diagonal of (1 + i H dt/2hbar)
    std::vector<cplx> b_diag; // diagonal of (1 - i H dt/2hbar)
    cplx b_off;
    std::vector<cplx> cprime;    // Thomas: eliminated upper diagonal
    std::vector<cplx> inv_denom; // Thomas: reciprocal pivots

    static PropagatorWorkspace build(const PhysicalSetup& setup, const RadialGrid& grid,
                                     double dt, bool gravity = true) {
        if (!(dt != 0)) throw std::invalid_argument("PropagatorWorkspace: dt must be nonzero");
        PropagatorWorkspace ws;
        ws.grid = grid;
        ws.dt = dt;
        ws.hbar = setup.consts.hbar;
        const double kin = setup.consts.hbar * setup.consts.hbar / (setup.mass * grid.dr * grid.dr);
        const cplx alpha(0.0, dt / (2.0 * setup.consts.hbar));
        ws.a_off = -alpha * kin;
        ws.b_off = alpha * kin;
        const int n = grid.n_points;
        ws.b_diag.resize(n);
        ws.cprime.resize(n);
        ws.inv_denom.resize(n);
        std::vector<cplx> a_diag(n);
        for (int i = 0; i < n; ++i) {
            const double h_ii = 2.0 * kin + (gravity ? potential(setup, grid.r(i)) : 0.0);
            a_diag[i] = 1.0 + alpha * h_ii;
            ws.b_diag[i] = 1.0 - alpha * h_ii;
        }
        cplx denom = a_diag[0];
        for (int i = 0;; ++i) {
            if (denom == cplx(0.0, 0.0)) throw std::runtime_error("PropagatorWorkspace: singular system");
            ws.inv_denom[i] = 1.0 / denom;
            ws.cprime[i] = ws.a_off * ws.inv_denom[i];
            if (i + 1 == n) break;
            denom = a_diag[i + 1] - ws.a_off * ws.cprime[i];
        }
        return ws;
    }
};

/// Advances the state by one dt in place.
inline void step(RadialState& state, const PropagatorWorkspace& ws) {
    const int n = state.grid.n_points;
    std::vector<cplx>& u = state.u;
    static thread_local std::vector<cplx> rhs;
    rhs.resize(n);
    rhs[0] = ws.b_diag[0] * u[0] + ws.b_off * u[1];
    for (int i = 1; i < n - 1; ++i) {
        rhs[i] = ws.b_diag[i] * u[i] + ws.b_off * (u[i - 1] + u[i + 1]);
    }
    rhs[n - 1] = ws.b_diag[n - 1] * u[n - 1] + ws.b_off * u[n - 2];

    // Thomas forward sweep with the precomputed pivots, then back substitution.
    u[0] = rhs[0] * ws.inv_denom[0];
    for (int i = 1; i < n; ++i) {
        u[i] = (rhs[i] - ws.a_off * u[i - 1]) * ws.inv_denom[i];
    }
    for (int i = n - 2; i >= 0; --i) {
        u[i] -= ws.cprime[i] * u[i + 1];
    }
    state.t += ws.dt;
}

struct EvolveResult {
    RadialState state;
    double norm_drift = 0;  // |final norm - 1|
};

/// Runs n_steps Crank-Nicolson steps with dt = t_final / n_steps. The
/// callback receives (state, step_index) every checkpoint_every steps
/// (0 disables checkpoints). n_steps = 0 returns the input unchanged.
template <class Callback>
EvolveResult evolve(const PhysicalSetup& setup, RadialState state, double t_final,
                    long n_steps, long checkpoint_every, bool gravity, Callback&& cb) {
    if (n_steps < 0) throw std::invalid_argument("evolve: n_steps must be >= 0");
    if (n_steps == 0) {
        const double drift = std::abs(state.norm() - 1.0);
        return {std::move(state), drift};
    }
    const double dt = t_final / static_cast<double>(n_steps);
    if (!(dt != 0)) throw std::invalid_argument("evolve: dt = 0 is disallowed");
    PropagatorWorkspace ws = PropagatorWorkspace::build(setup, state.grid, dt, gravity);
    for (long k = 1; k <= n_steps; ++k) {
        step(state, ws);
        if (checkpoint_every > 0 && (k % checkpoint_every == 0) && k != n_steps) cb(state, k);
    }
    const double drift = std::abs(state.norm() - 1.0);
    return {std::move(state), drift};
}

inline EvolveResult evolve(const PhysicalSetup& setup, RadialState state, double t_final,
                           long n_steps, bool gravity = true) {
    return evolve(setup, std::move(state), t_final, n_steps, 0, gravity,
                  [](const RadialState&, long) {});
}

}  // namespace gravloc
