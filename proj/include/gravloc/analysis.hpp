#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gravloc/densmat.hpp"
#include "gravloc/fit.hpp"

namespace gravloc {

struct EnsembleEntropy {
    double n_eff = 0;   // effective number of equiprobable states, 1/purity
    double s_axis = 0;  // nats, log n_eff (K_B = 1)
    double s_total = 0; // nats, 3 s_axis (one per Cartesian axis)
};

inline EnsembleEntropy ensemble_entropy(double purity) {
    if (!(purity > 0) || purity > 1.0 + 1e-9)
        throw std::invalid_argument("ensemble_entropy: purity must be in (0, 1]");
    purity = std::min(purity, 1.0);
    EnsembleEntropy e;
    e.n_eff = 1.0 / purity;
    e.s_axis = std::log(e.n_eff);
    e.s_total = 3.0 * e.s_axis;
    return e;
}

struct SpectralDecomposition {
    std::vector<double> spectrum;  // descending eigenvalues p_j of K dx, clipped at 0
    double entropy = 0;            // nats, -sum p log p
    double purity = 0;             // sum p^2
};

/// Eigendecomposition of the unit-trace-normalized kernel matrix K dx.
/// Eigenvalues below -1e-8 signal a quadrature failure and are rejected;
/// small negative noise is clipped to zero.
inline SpectralDecomposition spectral_entropy(const DensityMatrixSlice& slice) {
    const int n = slice.grid.n;
    const double tr = slice.trace();
    if (!(tr > 0)) throw std::runtime_error("spectral_entropy: non-positive trace");
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = slice.at(i, j) * slice.grid.dx / tr;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_entropy: eigensolver failed");

    SpectralDecomposition out;
    out.spectrum.resize(n);
    for (int i = 0; i < n; ++i) out.spectrum[i] = es.eigenvalues()(n - 1 - i);
    if (out.spectrum.back() < -1e-8) {
        throw std::runtime_error("spectral_entropy: significant negative eigenvalue " +
                                 std::to_string(out.spectrum.back()) + ", quadrature failure");
    }
    for (double& p : out.spectrum) {
        p = std::max(p, 0.0);
        out.purity += p * p;
        if (p > 0) out.entropy -= p * std::log(p);
    }
    return out;
}

/// Lambda+ / Lambda_G: how many ground-state widths the ensemble spans.
inline double naive_count(const GaussianFit& fit, double lambda_g) {
    if (!(lambda_g > 0)) throw std::invalid_argument("naive_count: lambda_g must be positive");
    return fit.lambda_plus / lambda_g;
}

struct LocalizationReport {
    GaussianFit fit;
    double purity = 0;
    EnsembleEntropy ensemble;
    SpectralDecomposition spectral;
    double naive_n = 0;  // Lambda+ / Lambda_G
};

inline LocalizationReport analyze_slice(const DensityMatrixSlice& slice, double lambda_g) {
    LocalizationReport r;
    r.fit = fit_double_gaussian(slice);
    r.purity = purity(slice);
    r.ensemble = ensemble_entropy(std::min(r.purity, 1.0));
    r.spectral = spectral_entropy(slice);
    r.naive_n = naive_count(r.fit, lambda_g);
    return r;
}

}  // namespace gravloc
