#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ct3s/bounds.hpp"
#include "ct3s/ridge.hpp"
#include "ct3s/signal_model.hpp"
#include "ct3s/transform.hpp"

namespace ct3s {

using json = nlohmann::json;

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

inline void write_signal_csv(const std::string& path, const SampledSignal& sig) {
    auto f = open_out(path);
    f << "t,re,im\n";
    for (std::size_t n = 0; n < sig.samples.size(); ++n)
        f << fmt_g17(sig.t_at(n)) << ',' << fmt_g17(sig.samples[n].real()) << ','
          << fmt_g17(sig.samples[n].imag()) << '\n';
}

inline void write_ground_truth_csv(const std::string& path, const SignalModel& m,
                                   const SampledSignal& sig) {
    auto f = open_out(path);
    f << "component,t,amp,if_hz,chirp_rate\n";
    for (std::size_t n = 0; n < sig.samples.size(); ++n) {
        const double t = sig.t_at(n);
        const auto gt = ground_truth(m, t);
        for (std::size_t k = 0; k < gt.size(); ++k)
            f << k << ',' << fmt_g17(t) << ',' << fmt_g17(gt[k].amplitude) << ','
              << fmt_g17(gt[k].if_hz) << ',' << fmt_g17(gt[k].chirp_rate) << '\n';
    }
}

inline void write_ridge_csv(const std::string& path, const RidgeSet& r) {
    auto f = open_out(path);
    f << "component,t,eta_hat,lambda_hat,q_re,q_im,flag\n";
    for (std::size_t k = 0; k < r.traces.size(); ++k)
        for (const auto& e : r.traces[k])
            f << k << ',' << fmt_g17(e.t) << ',' << fmt_g17(e.eta) << ',' << fmt_g17(e.lambda)
              << ',' << fmt_g17(e.q.real()) << ',' << fmt_g17(e.q.imag()) << ','
              << static_cast<int>(e.flag) << '\n';
}

inline void write_components_csv(const std::string& path,
                                 const std::vector<RecoveredComponent>& comps) {
    auto f = open_out(path);
    f << "component,t,re,im,amp\n";
    for (const auto& c : comps)
        for (std::size_t i = 0; i < c.t.size(); ++i)
            f << c.component_index << ',' << fmt_g17(c.t[i]) << ','
              << fmt_g17(c.samples[i].real()) << ',' << fmt_g17(c.samples[i].imag()) << ','
              << fmt_g17(c.amplitude_estimate[i]) << '\n';
}

// One t plane as CSV for plotting.
inline void write_slice_csv(const std::string& path, const TransformCube& cube, int t_index) {
    const auto v = slice(cube, t_index);
    auto f = open_out(path);
    f << "eta,lambda,re,im,abs\n";
    for (int je = 0; je < v.n_eta; ++je)
        for (int jl = 0; jl < v.n_lambda; ++jl) {
            const cplx q = v.at(je, jl);
            f << fmt_g17(cube.grid.eta.at(je)) << ',' << fmt_g17(cube.grid.lambda.at(jl)) << ','
              << fmt_g17(q.real()) << ',' << fmt_g17(q.imag()) << ',' << fmt_g17(std::abs(q))
              << '\n';
        }
}

// Binary cube container: one JSON header line, then little-endian float64
// interleaved re/im, row-major (t, eta, lambda).
inline void write_cube(const std::string& path, const TransformCube& cube,
                       double sigma_constant) {
    json hdr;
    hdr["t_axis"] = cube.grid.t_axis;
    hdr["eta"] = {{"start", cube.grid.eta.start},
                  {"step", cube.grid.eta.step},
                  {"count", cube.grid.eta.count}};
    hdr["lambda"] = {{"start", cube.grid.lambda.start},
                     {"step", cube.grid.lambda.step},
                     {"count", cube.grid.lambda.count}};
    hdr["nfft"] = cube.grid.nfft;
    hdr["sigma"] = sigma_constant;
    hdr["boundary_flags"] = cube.boundary_flags;
    hdr["layout"] = "t,eta,lambda;interleaved re/im;float64 little-endian";
    auto f = open_out(path);
    f << hdr.dump() << '\n';
    std::vector<double> buf;
    buf.reserve(2 * cube.values.size());
    for (const cplx& v : cube.values) {
        buf.push_back(v.real());
        buf.push_back(v.imag());
    }
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

struct CubeFile {
    json header;
    std::vector<cplx> values;
};

inline CubeFile read_cube(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(f, line);
    CubeFile out;
    out.header = json::parse(line);
    const std::size_t count = out.header["t_axis"].size() *
                              out.header["eta"]["count"].get<std::size_t>() *
                              out.header["lambda"]["count"].get<std::size_t>();
    std::vector<double> buf(2 * count);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!f) throw std::runtime_error("cube payload truncated: " + path);
    out.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.values.emplace_back(buf[2 * i], buf[2 * i + 1]);
    return out;
}

// Model definition file: {"components":[{"kind":...,...}], "t_span":[t0,t1]}.
inline json model_to_json(const SignalModel& m) {
    json j;
    j["t_span"] = {m.t_span.lo, m.t_span.hi};
    j["components"] = json::array();
    for (const auto& c : m.components) {
        json jc;
        jc["kind"] = c.kind;
        if (c.kind == "lfm") {
            jc["amplitude"] = c.params[0];
            jc["c"] = c.params[1];
            jc["r"] = c.params[2];
        } else if (c.kind == "sfm") {
            jc["amplitude"] = c.params[0];
            jc["f0"] = c.params[1];
            jc["depth"] = c.params[2];
            jc["mod_freq"] = c.params[3];
        } else if (c.kind == "trend") {
            jc["amplitude"] = c.params[0];
        } else {
            throw std::runtime_error("model_to_json: unsupported component kind");
        }
        j["components"].push_back(jc);
    }
    return j;
}

inline SignalModel model_from_json(const json& j) {
    SignalModel m;
    m.t_span = {j.at("t_span").at(0).get<double>(), j.at("t_span").at(1).get<double>()};
    if (!(m.t_span.hi > m.t_span.lo))
        throw std::invalid_argument("model: t_span must be increasing");
    for (const auto& jc : j.at("components")) {
        const std::string kind = jc.at("kind").get<std::string>();
        if (kind == "lfm") {
            m.components.push_back(make_lfm(jc.at("amplitude").get<double>(),
                                            jc.at("c").get<double>(), jc.at("r").get<double>(),
                                            m.t_span));
        } else if (kind == "sfm") {
            m.components.push_back(make_sfm(jc.at("amplitude").get<double>(),
                                            jc.at("f0").get<double>(),
                                            jc.at("depth").get<double>(),
                                            jc.at("mod_freq").get<double>(), m.t_span));
        } else if (kind == "trend") {
            m.components.push_back(make_trend(jc.at("amplitude").get<double>()));
        } else {
            throw std::invalid_argument("model: unknown component kind '" + kind + "'");
        }
    }
    if (m.components.empty()) throw std::invalid_argument("model: no components");
    return m;
}

inline SignalModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file: " + path);
    json j;
    f >> j;
    return model_from_json(j);
}

inline RidgeSet read_ridge_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(f, line);
    RidgeSet r;
    r.seeded = true;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        auto next = [&] {
            std::getline(ss, tok, ',');
            return tok;
        };
        const auto k = static_cast<std::size_t>(std::stoul(next()));
        RidgeEntry e;
        e.t = std::stod(next());
        e.eta = std::stod(next());
        e.lambda = std::stod(next());
        const double re = std::stod(next());
        const double im = std::stod(next());
        e.q = cplx(re, im);
        e.flag = static_cast<std::uint8_t>(std::stoi(next()));
        if (r.traces.size() <= k) r.traces.resize(k + 1);
        r.traces[k].push_back(e);
    }
    if (!r.traces.empty())
        for (const auto& e : r.traces[0]) r.t_axis.push_back(e.t);
    return r;
}

inline void write_bound_curves_csv(const std::string& path,
                                   const std::vector<BoundReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("write_bound_curves_csv: empty");
    auto f = open_out(path);
    const std::size_t n = reports.front().res.size();
    f << "t,pi,upsilon";
    for (std::size_t k = 0; k < n; ++k) f << ",res_" << k;
    for (std::size_t k = 0; k < n; ++k) f << ",bd1_" << k;
    for (std::size_t k = 0; k < n; ++k) f << ",bd2_" << k;
    for (std::size_t k = 0; k < n; ++k) f << ",bd3_" << k;
    f << '\n';
    auto put = [&](const BoundValue& b) {
        f << ',' << (b.valid ? fmt_g17(b.value) : std::string("nan"));
    };
    for (const auto& r : reports) {
        f << fmt_g17(r.t) << ',' << fmt_g17(r.pi) << ',' << fmt_g17(r.upsilon_generic);
        for (std::size_t k = 0; k < n; ++k) f << ',' << fmt_g17(r.res[k]);
        for (std::size_t k = 0; k < n; ++k) put(r.bd1v[k]);
        for (std::size_t k = 0; k < n; ++k) put(r.bd2v[k]);
        for (std::size_t k = 0; k < n; ++k) put(r.bd3v[k]);
        f << '\n';
    }
}

inline json bound_report_to_json(const BoundReport& r) {
    json j;
    j["t"] = r.t;
    j["pi"] = r.pi;
    j["upsilon"] = r.upsilon_generic;
    j["upsilon_pairs"] = r.upsilon_pairs;
    j["res"] = r.res;
    auto arr = [](const std::vector<BoundValue>& v) {
        json a = json::array();
        for (const auto& b : v)
            a.push_back(b.valid ? json(b.value) : json());
        return a;
    };
    j["bd1"] = arr(r.bd1v);
    j["bd2"] = arr(r.bd2v);
    j["bd3"] = arr(r.bd3v);
    json checks = json::array();
    for (const auto& c : r.hypotheses.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}});
    j["hypotheses"] = checks;
    j["hypotheses_pass"] = r.hypotheses.overall;
    return j;
}

}  // namespace ct3s
