#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravloc/densmat.hpp"
#include "gravloc/setup.hpp"
#include "gravloc/solver.hpp"

namespace gravloc {

using json = nlohmann::json;

// All floating-point output uses 17 significant digits so that text files
// round-trip bit-exactly through strtod.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

inline std::string hex64(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json setup_to_json(const PhysicalSetup& s) {
    return {{"mass_g", s.mass},          {"mass_mp", s.mass_in_proton_masses()},
            {"radius_cm", s.radius},     {"density_g_cc", s.density},
            {"lambda_g_cm", s.lambda_g}, {"tau_g_s", s.tau_g},
            {"lambda0_cm", s.lambda0}};
}

/// Checkpoint: CSV (r, Re u, Im u) plus a JSON sidecar with everything
/// needed to resume: setup, grid, time, step count, norm drift.
inline void write_checkpoint(const std::string& csv_path, const std::string& json_path,
                             const PhysicalSetup& setup, const RadialState& st, long n_steps) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("write_checkpoint: cannot open " + csv_path);
    out << "r,re_u,im_u\n";
    for (int i = 0; i < st.grid.n_points; ++i) {
        out << fmt17(st.grid.r(i)) << ',' << fmt17(st.u[i].real()) << ',' << fmt17(st.u[i].imag())
            << '\n';
    }
    if (!out) throw std::runtime_error("write_checkpoint: write failed on " + csv_path);

    json j = {{"setup", setup_to_json(setup)},
              {"grid", {{"n_points", st.grid.n_points}, {"r_max_cm", st.grid.r_max}}},
              {"t_s", st.t},
              {"n_steps", n_steps},
              {"norm", st.norm()},
              {"norm_drift", std::abs(st.norm() - 1.0)}};
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("write_checkpoint: cannot open " + json_path);
    js << j.dump(2) << '\n';
}

struct Checkpoint {
    PhysicalSetup setup;
    RadialState state;
    long n_steps = 0;
};

inline Checkpoint read_checkpoint(const std::string& csv_path, const std::string& json_path,
                                  const Constants& c = kCgs) {
    std::ifstream js(json_path);
    if (!js) throw std::runtime_error("read_checkpoint: cannot open " + json_path);
    json j = json::parse(js);

    Checkpoint cp;
    cp.setup = make_setup(j["setup"]["mass_mp"].get<double>(), j["setup"]["density_g_cc"].get<double>(),
                          1.0, c);
    cp.setup.lambda0 = j["setup"]["lambda0_cm"].get<double>();
    cp.n_steps = j["n_steps"].get<long>();
    cp.state.grid = RadialGrid::uniform(j["grid"]["n_points"].get<int>(),
                                        j["grid"]["r_max_cm"].get<double>());
    cp.state.t = j["t_s"].get<double>();

    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("read_checkpoint: cannot open " + csv_path);
    std::string line;
    std::getline(in, line);  // header
    cp.state.u.reserve(cp.state.grid.n_points);
    while (std::getline(in, line)) {
        const char* p = line.c_str();
        char* end;
        std::strtod(p, &end);  // r column, implied by the grid
        if (*end != ',') throw std::runtime_error("read_checkpoint: malformed line in " + csv_path);
        const double re = std::strtod(end + 1, &end);
        if (*end != ',') throw std::runtime_error("read_checkpoint: malformed line in " + csv_path);
        const double im = std::strtod(end + 1, nullptr);
        cp.state.u.emplace_back(re, im);
    }
    if (static_cast<int>(cp.state.u.size()) != cp.state.grid.n_points)
        throw std::runtime_error("read_checkpoint: node count mismatch in " + csv_path);
    return cp;
}

/// Kernel dump: CSV (x_i, x_j, Re K, Im K) plus JSON metadata. This is the
/// hand-off format between the trace stage and the analysis stage.
inline void write_kernel(const std::string& csv_path, const std::string& meta_path,
                         const DensityMatrixSlice& slice, const json& extra_meta = json::object()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("write_kernel: cannot open " + csv_path);
    out << "x_i,x_j,re_k,im_k\n";
    for (int i = 0; i < slice.grid.n; ++i) {
        for (int j = 0; j < slice.grid.n; ++j) {
            out << fmt17(slice.grid.x(i)) << ',' << fmt17(slice.grid.x(j)) << ','
                << fmt17(slice.at(i, j).real()) << ',' << fmt17(slice.at(i, j).imag()) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_kernel: write failed on " + csv_path);

    json j = extra_meta;
    j["grid"] = {{"n", slice.grid.n}, {"x_max_cm", slice.grid.x_max}};
    j["unit_trace"] = slice.unit_trace;
    j["trace"] = slice.trace();
    j["hermiticity_error"] = slice.hermiticity_error();
    std::ofstream ms(meta_path);
    if (!ms) throw std::runtime_error("write_kernel: cannot open " + meta_path);
    ms << j.dump(2) << '\n';
}

inline DensityMatrixSlice read_kernel(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream ms(meta_path);
    if (!ms) throw std::runtime_error("read_kernel: cannot open " + meta_path);
    json j = json::parse(ms);
    DensityMatrixSlice slice;
    slice.grid = SliceGrid1D::symmetric(j["grid"]["n"].get<int>(), j["grid"]["x_max_cm"].get<double>());
    slice.unit_trace = j["unit_trace"].get<bool>();
    slice.kernel.assign(static_cast<size_t>(slice.grid.n) * slice.grid.n, cplx{});

    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("read_kernel: cannot open " + csv_path);
    std::string line;
    std::getline(in, line);
    size_t q = 0;
    while (std::getline(in, line) && q < slice.kernel.size()) {
        const char* p = line.c_str();
        char* end;
        std::strtod(p, &end);
        std::strtod(end + 1, &end);
        const double re = std::strtod(end + 1, &end);
        const double im = std::strtod(end + 1, nullptr);
        slice.kernel[q++] = {re, im};
    }
    if (q != slice.kernel.size())
        throw std::runtime_error("read_kernel: entry count mismatch in " + csv_path);
    return slice;
}

}  // namespace gravloc
