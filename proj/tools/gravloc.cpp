// Command-line driver: derive | run | free-reference | trace | analyze |
// scaling-check. Exit codes: 0 success, 1 usage, 2 invalid configuration,
// 3 numerical failure, 4 I/O failure, 5 check failure.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gravloc/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;
constexpr int kExitCheckFailed = 5;

struct CliOptions {
    std::string config_file;
    gravloc::RunConfig cfg;
    bool print_config = false;

    // flag overrides; only applied when the user passed them
    std::optional<double> mass_mp, density, lambda_multiple, lambda0_cm, t_final, r_max_cm,
        slice_halfwidth_cm;
    std::optional<long> n_steps, checkpoint_every;
    std::optional<int> n_points, quad_axis, quad_radial, slice_points, threads;
    std::optional<bool> gravity, analyze_checkpoints;
    std::optional<std::string> outdir;
};

void add_common_options(CLI::App* app, CliOptions& o) {
    app->add_option("--config", o.config_file, "flat key=value config file");
    app->add_flag("--print-config", o.print_config, "print the fully resolved config and exit");
    app->add_option("--mass-mp", o.mass_mp, "ball mass in proton masses");
    app->add_option("--density", o.density, "mass density, g/cm^3");
    app->add_option("--lambda-multiple", o.lambda_multiple, "initial width as multiple of lambda_g");
    app->add_option("--lambda0-cm", o.lambda0_cm, "explicit initial width, cm (0 = use multiple)");
    app->add_option("--n-points", o.n_points, "radial grid points");
    app->add_option("--r-max-cm", o.r_max_cm, "radial box size, cm (0 = R/2)");
    app->add_option("--n-steps", o.n_steps, "time steps");
    app->add_option("--t-final", o.t_final, "evolution time, s");
    app->add_option("--checkpoint-every", o.checkpoint_every, "checkpoint cadence in steps");
    app->add_option("--quad-axis", o.quad_axis, "trace quadrature points along the axis");
    app->add_option("--quad-radial", o.quad_radial, "trace quadrature points along the radius");
    app->add_option("--slice-points", o.slice_points, "density-matrix slice grid points per axis");
    app->add_option("--slice-halfwidth-cm", o.slice_halfwidth_cm, "slice half-extent, cm (0 = auto)");
    app->add_option("--gravity", o.gravity, "1 = gravity on, 0 = free control");
    app->add_option("--threads", o.threads, "worker threads for the trace stage");
    app->add_option("--analyze-checkpoints", o.analyze_checkpoints,
                    "also trace and analyze every stored checkpoint");
    app->add_option("--outdir", o.outdir, "output directory");
}

gravloc::RunConfig resolve(CliOptions& o) {
    gravloc::RunConfig c = o.config_file.empty() ? gravloc::RunConfig{}
                                                 : gravloc::RunConfig::from_file(o.config_file);
    if (o.mass_mp) c.mass_mp = *o.mass_mp;
    if (o.density) c.density = *o.density;
    if (o.lambda_multiple) c.lambda_multiple = *o.lambda_multiple;
    if (o.lambda0_cm) c.lambda0_cm = *o.lambda0_cm;
    if (o.n_points) c.n_points = *o.n_points;
    if (o.r_max_cm) c.r_max_cm = *o.r_max_cm;
    if (o.n_steps) c.n_steps = *o.n_steps;
    if (o.t_final) c.t_final = *o.t_final;
    if (o.checkpoint_every) c.checkpoint_every = *o.checkpoint_every;
    if (o.quad_axis) c.quad_axis = *o.quad_axis;
    if (o.quad_radial) c.quad_radial = *o.quad_radial;
    if (o.slice_points) c.slice_points = *o.slice_points;
    if (o.slice_halfwidth_cm) c.slice_halfwidth_cm = *o.slice_halfwidth_cm;
    if (o.gravity) c.gravity = *o.gravity;
    if (o.threads) c.threads = *o.threads;
    if (o.analyze_checkpoints) c.analyze_checkpoints = *o.analyze_checkpoints;
    if (o.outdir) c.outdir = *o.outdir;
    if (const char* root = std::getenv("GRAVLOC_OUTPUT_ROOT")) {
        c.outdir = std::string(root) + "/" + c.outdir;
    }
    c.validate();
    return c;
}

void print_derived(const gravloc::PhysicalSetup& s) {
    using gravloc::fmt17;
    const gravloc::HarmonicParams h = gravloc::harmonic_params(s);
    std::cout << "mass                 " << fmt17(s.mass) << " g  (" << fmt17(s.mass_in_proton_masses())
              << " m_p)\n"
              << "radius R             " << fmt17(s.radius) << " cm\n"
              << "density rho          " << fmt17(s.density) << " g/cm^3\n"
              << "lambda_g             " << fmt17(s.lambda_g) << " cm  (closed form)\n"
              << "lambda0              " << fmt17(s.lambda0) << " cm  (initial width in use)\n"
              << "tau_g                " << fmt17(s.tau_g) << " s\n"
              << "threshold mass M_t   " << fmt17(gravloc::threshold_mass(s.density, s.consts))
              << " g  (" << fmt17(gravloc::threshold_mass(s.density, s.consts) / s.consts.m_p)
              << " m_p)\n"
              << "omega                " << fmt17(h.omega) << " 1/s\n"
              << "harmonic ground width " << fmt17(h.ground_width) << " cm\n";
}

void print_report(const gravloc::LocalizationReport& r, const gravloc::PhysicalSetup& s) {
    using gravloc::fmt17;
    std::cout << "lambda_plus   " << fmt17(r.fit.lambda_plus) << " cm  ("
              << fmt17(r.fit.lambda_plus / s.radius) << " R)\n"
              << "lambda_minus  " << fmt17(r.fit.lambda_minus) << " cm  ("
              << fmt17(r.fit.lambda_minus / s.radius) << " R)\n"
              << "ratio -/+     " << fmt17(r.fit.lambda_minus / r.fit.lambda_plus) << "\n"
              << "fit residual  " << fmt17(r.fit.rms_residual) << "\n"
              << "purity        " << fmt17(r.purity) << "\n"
              << "n_eff         " << fmt17(r.ensemble.n_eff) << "\n"
              << "s_axis        " << fmt17(r.ensemble.s_axis) << " nats\n"
              << "s_total       " << fmt17(r.ensemble.s_total) << " nats\n"
              << "s_spectral    " << fmt17(r.spectral.entropy) << " nats\n"
              << "naive count   " << fmt17(r.naive_n) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravloc: nonunitary self-gravity localization pipeline"};
    app.set_version_flag("--version", std::string(gravloc::kVersion));
    app.require_subcommand(1);

    CliOptions o;
    CLI::App* derive = app.add_subcommand("derive", "print derived quantities");
    CLI::App* run = app.add_subcommand("run", "full pipeline: evolve, trace, analyze");
    CLI::App* freeref = app.add_subcommand("free-reference", "gravity-off analytic control run");
    CLI::App* trace = app.add_subcommand("trace", "trace and analyze a stored checkpoint");
    CLI::App* analyze = app.add_subcommand("analyze", "analyze a stored kernel CSV");
    CLI::App* scaling = app.add_subcommand("scaling-check", "compare a run against its scaled twin");
    for (CLI::App* sub : {derive, run, freeref, trace, analyze, scaling}) add_common_options(sub, o);

    std::string checkpoint_base, kernel_base;
    double lambda = 32.0;
    trace->add_option("--checkpoint", checkpoint_base,
                      "checkpoint path without extension (expects .csv and .json)")
        ->required();
    analyze->add_option("--kernel", kernel_base,
                        "kernel path without extension (expects .csv and .meta.json)")
        ->required();
    scaling->add_option("--lambda", lambda, "scaling parameter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        gravloc::RunConfig cfg = resolve(o);
        if (o.print_config) {
            std::cout << cfg.to_text();
            return 0;
        }

        if (derive->parsed()) {
            print_derived(gravloc::setup_from_config(cfg));
            return 0;
        }
        if (run->parsed() || freeref->parsed()) {
            if (freeref->parsed()) cfg.gravity = false;
            const gravloc::RunResult res = gravloc::run_pipeline(cfg);
            print_report(res.report, res.setup);
            std::cout << "artifacts in " << cfg.outdir << "\n";
            return 0;
        }
        if (trace->parsed()) {
            const gravloc::Checkpoint cp =
                gravloc::read_checkpoint(checkpoint_base + ".csv", checkpoint_base + ".json");
            const gravloc::CmState cm = gravloc::make_cm_state(cp.setup, cp.state.t);
            const gravloc::SliceGrid1D sgrid = gravloc::slice_grid_from_config(cfg, cp.setup, cm);
            gravloc::QuadratureSpec quad = gravloc::default_quadrature(cm, cp.state.grid.r_max);
            quad.n_axis = cfg.quad_axis;
            quad.n_radial = cfg.quad_radial;
            gravloc::ChiInterpolator chi(cp.state);
            gravloc::DensityMatrixSlice slice =
                gravloc::trace_out_slice(cm, chi, sgrid, quad, cfg.threads);
            slice.normalize_trace();
            std::filesystem::create_directories(cfg.outdir);
            gravloc::write_kernel(cfg.outdir + "/kernel.csv", cfg.outdir + "/kernel.meta.json",
                                  slice, {{"t_s", cp.state.t}});
            const gravloc::LocalizationReport rep = gravloc::analyze_slice(slice, cp.setup.lambda_g);
            gravloc::detail::write_text_file(cfg.outdir + "/report.json",
                                             gravloc::detail::report_to_json(rep).dump(2) + "\n");
            print_report(rep, cp.setup);
            return 0;
        }
        if (analyze->parsed()) {
            const gravloc::DensityMatrixSlice slice =
                gravloc::read_kernel(kernel_base + ".csv", kernel_base + ".meta.json");
            const gravloc::PhysicalSetup setup = gravloc::setup_from_config(cfg);
            const gravloc::LocalizationReport rep = gravloc::analyze_slice(slice, setup.lambda_g);
            std::filesystem::create_directories(cfg.outdir);
            gravloc::detail::write_text_file(cfg.outdir + "/report.json",
                                             gravloc::detail::report_to_json(rep).dump(2) + "\n");
            gravloc::detail::write_spectrum_csv(cfg.outdir + "/spectrum.csv", rep.spectral);
            print_report(rep, setup);
            return 0;
        }
        if (scaling->parsed()) {
            const gravloc::ScalingCheckResult r = gravloc::cmd_scaling_check(cfg, lambda);
            std::cout << "lambda                " << lambda << "\n"
                      << "length(+) ratio error " << r.length_plus_ratio_error << "\n"
                      << "length(-) ratio error " << r.length_minus_ratio_error << "\n"
                      << "purity rel error      " << r.purity_rel_error << "\n"
                      << (r.pass ? "PASS" : "FAIL") << "\n";
            return r.pass ? 0 : kExitCheckFailed;
        }
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gravloc::QuadratureExtentError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        const bool io = what.find("cannot open") != std::string::npos ||
                        what.find("write failed") != std::string::npos;
        std::cerr << (io ? "I/O error: " : "numerical error: ") << what << "\n";
        return io ? kExitIo : kExitNumerical;
    }
}
