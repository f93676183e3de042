#include <catch2/catch_amalgamated.hpp>

#include "gravloc/analysis.hpp"

using namespace gravloc;
using Catch::Matchers::WithinRel;

namespace {
PhysicalSetup paper_setup() {
    const double mass_mp = 0.38e12;
    const double R = 4.8e-5;
    PhysicalSetup s =
        make_setup(mass_mp, mass_mp * kCgs.m_p / (4.0 / 3.0 * M_PI * R * R * R), 5.6);
    return with_initial_width(s, 5.6 * 1.6e-6);
}

DensityMatrixSlice gaussian_kernel(double amplitude, double lp, double lm, int n,
                                   double x_max) {
    DensityMatrixSlice slice;
    slice.grid = SliceGrid1D::symmetric(n, x_max);
    slice.kernel.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = slice.grid.x(i) + slice.grid.x(j);
            const double v = slice.grid.x(i) - slice.grid.x(j);
            slice.at(i, j) = amplitude * std::exp(-u * u / (lp * lp) - v * v / (lm * lm));
        }
    }
    return slice;
}
}  // namespace

TEST_CASE("double-Gaussian fit recovers synthetic parameters exactly") {
    const double A = 3.7e4, lp = 1.6e-5, lm = 2.4e-6;
    const DensityMatrixSlice slice = gaussian_kernel(A, lp, lm, 201, 3.5e-5);

    const GaussianFit fit = fit_double_gaussian(slice);
    CHECK(fit.converged);
    CHECK_THAT(fit.amplitude, WithinRel(A, 1e-6));
    CHECK_THAT(fit.lambda_plus, WithinRel(lp, 1e-6));
    CHECK_THAT(fit.lambda_minus, WithinRel(lm, 1e-6));
    CHECK(fit.rms_residual < 1e-8);

    // idempotence: fitting again returns the same parameters
    const GaussianFit again = fit_double_gaussian(slice);
    CHECK_THAT(again.lambda_plus, WithinRel(fit.lambda_plus, 1e-12));
    CHECK_THAT(again.lambda_minus, WithinRel(fit.lambda_minus, 1e-12));
}

TEST_CASE("fit rejects an all-zero slice") {
    DensityMatrixSlice slice;
    slice.grid = SliceGrid1D::symmetric(11, 1.0);
    slice.kernel.assign(121, cplx{});
    CHECK_THROWS_AS(fit_double_gaussian(slice), std::runtime_error);
}

TEST_CASE("ensemble entropy from purity") {
    const EnsembleEntropy pure = ensemble_entropy(1.0);
    CHECK(pure.n_eff == 1.0);
    CHECK(pure.s_axis == 0.0);
    CHECK(pure.s_total == 0.0);

    const EnsembleEntropy half = ensemble_entropy(0.5);
    CHECK_THAT(half.n_eff, WithinRel(2.0, 1e-14));
    CHECK_THAT(half.s_axis, WithinRel(std::log(2.0), 1e-14));
    CHECK_THAT(half.s_total, WithinRel(3.0 * std::log(2.0), 1e-14));

    // purity 0.06 corresponds to ~17 equiprobable localized states
    const EnsembleEntropy strong = ensemble_entropy(0.06);
    CHECK_THAT(strong.n_eff, WithinRel(1.0 / 0.06, 1e-14));
    CHECK(strong.n_eff > 16.0);
    CHECK(strong.n_eff < 17.0);
    CHECK_THAT(strong.s_axis, WithinRel(std::log(1.0 / 0.06), 1e-14));

    // roundoff slightly above 1 is clipped, genuine violations throw
    CHECK(ensemble_entropy(1.0 + 1e-12).s_axis == 0.0);
    CHECK_THROWS_AS(ensemble_entropy(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ensemble_entropy(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(ensemble_entropy(1.1), std::invalid_argument);
}

TEST_CASE("spectral decomposition of a rank-2 mixture") {
    const SliceGrid1D grid = SliceGrid1D::symmetric(201, 5.0);
    std::vector<double> p0(grid.n), p1(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        p0[i] = std::exp(-x * x / 2.0);
        p1[i] = x * std::exp(-x * x / 2.0);
    }
    auto normalize = [&](std::vector<double>& p) {
        double s = 0;
        for (double v : p) s += v * v;
        s = std::sqrt(s * grid.dx);
        for (double& v : p) v /= s;
    };
    normalize(p0);
    normalize(p1);

    DensityMatrixSlice slice;
    slice.grid = grid;
    slice.kernel.resize(static_cast<size_t>(grid.n) * grid.n);
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            slice.at(i, j) = 0.7 * p0[i] * p0[j] + 0.3 * p1[i] * p1[j];

    const SpectralDecomposition sd = spectral_entropy(slice);
    CHECK_THAT(sd.spectrum[0], WithinRel(0.7, 1e-10));
    CHECK_THAT(sd.spectrum[1], WithinRel(0.3, 1e-10));
    CHECK(sd.spectrum[2] < 1e-10);
    const double want = -0.7 * std::log(0.7) - 0.3 * std::log(0.3);
    CHECK_THAT(sd.entropy, WithinRel(want, 1e-8));
    CHECK_THAT(sd.purity, WithinRel(0.7 * 0.7 + 0.3 * 0.3, 1e-10));

    // spectral purity agrees with the direct integral purity
    CHECK_THAT(sd.purity, WithinRel(purity(slice), 1e-10));
}

TEST_CASE("spectral purity of a double-Gaussian kernel matches the closed form") {
    const double lp = 2.0e-5, lm = 0.4e-5;
    const DensityMatrixSlice slice = gaussian_kernel(1.0, lp, lm, 301, 4.0 * lp);
    const SpectralDecomposition sd = spectral_entropy(slice);
    CHECK_THAT(sd.purity, WithinRel(lm / lp, 1e-4));
    CHECK_THAT(sd.purity, WithinRel(purity(slice), 1e-6));
    // mixture of many states: entropy well above the axis-ensemble floor
    CHECK(sd.entropy > std::log(1.0 / sd.purity) * 0.8);
}

TEST_CASE("spectral entropy input validation") {
    DensityMatrixSlice slice;
    slice.grid = SliceGrid1D::symmetric(11, 1.0);
    slice.kernel.assign(121, cplx{});
    CHECK_THROWS_AS(spectral_entropy(slice), std::runtime_error);
    CHECK_THROWS_AS(purity(slice), std::runtime_error);
}

TEST_CASE("naive occupation count") {
    GaussianFit fit;
    fit.lambda_plus = 1.3e-5;
    CHECK_THAT(naive_count(fit, 1.6e-6), WithinRel(8.125, 1e-12));
    CHECK_THROWS_AS(naive_count(fit, 0.0), std::invalid_argument);
}

TEST_CASE("analyze_slice aggregates the individual diagnostics") {
    const PhysicalSetup s = paper_setup();
    const double lp = std::sqrt(2.0) * s.lambda0;
    const DensityMatrixSlice slice = gaussian_kernel(1.0, lp, 0.3 * lp, 151, 3.0 * lp);

    const LocalizationReport r = analyze_slice(slice, s.lambda_g);
    CHECK(r.fit.converged);
    CHECK_THAT(r.fit.lambda_plus, WithinRel(lp, 1e-6));
    CHECK_THAT(r.purity, WithinRel(0.3, 1e-4));
    CHECK_THAT(r.ensemble.n_eff, WithinRel(1.0 / r.purity, 1e-12));
    CHECK_THAT(r.spectral.purity, WithinRel(r.purity, 1e-4));
    CHECK_THAT(r.naive_n, WithinRel(lp / s.lambda_g, 1e-6));
}
