#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "cpca/cpca_engine.hpp"
#include "cpca/dual_homodyne.hpp"
#include "cpca/error.hpp"
#include "cpca/frame_io.hpp"
#include "cpca/mode_analysis.hpp"
#include "cpca/serialization.hpp"
#include "cpca/state_models.hpp"
#include "cpca/two_photon.hpp"

namespace cpca::cli
{

namespace fs = std::filesystem;

namespace
{

fs::path sibling(const fs::path &out, const std::string &suffix)
{
    return out.parent_path() / (out.stem().string() + suffix);
}

std::string mode_suffix(std::size_t k)
{
    std::ostringstream s;
    s << "_mode" << std::setw(2) << std::setfill('0') << k;
    return s.str();
}

void ensure_parent(const fs::path &p)
{
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) {
            throw Error(ErrorCode::io, "cannot create directory " + p.parent_path().string());
        }
    }
}

Json filter_json(const SimulateOptions &opt)
{
    return {{"enabled", opt.filters},
            {"highpass_cutoff_hz", opt.highpass_hz},
            {"lowpass_cutoff_hz", opt.lowpass_hz}};
}

// nbar standard error of mode e from the projected samples.
double nbar_se(const FrameSet &frames, const Tmf &e)
{
    const Eigen::VectorXd p = project(frames, e).cwiseAbs2();
    const auto n = static_cast<double>(p.size());
    const double mean = p.mean();
    return std::sqrt((p.array() - mean).square().sum() / (n - 1.0) / n);
}

fs::path resolve_relative(const std::string &stored, const fs::path &json_path)
{
    fs::path p(stored);
    if (p.is_absolute() || fs::exists(p)) {
        return p;
    }
    return json_path.parent_path() / p;
}

void warn(const std::string &msg)
{
    std::cerr << "warning: " << msg << '\n';
}

} // namespace

void run_simulate(const SimulateOptions &opt)
{
    if (opt.out.empty()) {
        throw Error(ErrorCode::config, "--out is required");
    }
    const TimeGrid grid(opt.duration_s, opt.bins);
    const StateConfig cfg = load_state_config(opt.state);
    const BuiltState built = build_state(cfg, grid);
    for (const auto &w : built.warnings) {
        warn(w);
    }
    DetectorFilter filt;
    filt.highpass_hz = opt.highpass_hz;
    filt.lowpass_hz = opt.lowpass_hz;
    filt.highpass_enabled = opt.filters;
    filt.lowpass_enabled = opt.filters;
    if (opt.filters) {
        validate_filter(filt, grid);
    }
    if (opt.frames == 0) {
        throw Error(ErrorCode::config, "--frames must be at least 1");
    }

    FrameSet frames = generate_frames(built.state, grid, opt.frames, opt.seed);
    if (opt.filters) {
        frames = apply_detector_filters(frames, filt);
    }
    ensure_parent(opt.out);
    write_frames(opt.out, frames);

    RunManifest m;
    m.command = "simulate";
    m.seed = opt.seed;
    m.has_seed = true;
    m.duration_s = opt.duration_s;
    m.bins = opt.bins;
    m.frames = opt.frames;
    m.filters = filter_json(opt);
    m.filters["design"] = frames.meta.filter_design;
    m.extra["state_spec"] = opt.state;
    m.extra["state_config"] = state_config_json(cfg);
    m.extra["meta"] = frame_meta_json(frames.meta);
    m.extra["truncation_error"] = built.state.truncation_error;
    m.extra["warnings"] = built.warnings;
    m.extra["format"] = "CPCAFRM1";
    m.outputs.push_back({"frames", opt.out});
    write_json(sidecar_path(opt.out), manifest_json(m));
}

void run_analyze(const AnalyzeOptions &opt)
{
    if (opt.out.empty()) {
        throw Error(ErrorCode::config, "--out is required");
    }
    if (opt.modes == 0) {
        throw Error(ErrorCode::config, "--modes must be at least 1");
    }
    const FrameSet frames = read_frames(opt.frames);
    const ModeDecomposition dec = eigendecompose(accumulate_ct(frames));
    const std::size_t count = std::min(opt.modes, frames.grid.bins());

    ensure_parent(opt.out);
    RunManifest m;
    m.command = "analyze";
    m.duration_s = frames.grid.duration();
    m.bins = frames.grid.bins();
    m.frames = frames.frames();
    m.inputs.push_back({"frames", opt.frames});

    Json modes = Json::array();
    Json se = Json::array();
    for (std::size_t k = 0; k < count; ++k) {
        const fs::path csv = sibling(opt.out, mode_suffix(k + 1) + ".csv");
        write_tmf_csv(csv, dec.modes[k]);
        m.outputs.push_back({"eigenmode", csv});
        modes.push_back(csv.filename().string());
        se.push_back(nbar_se(frames, dec.modes[k]));
    }

    // Pure-vacuum records spread over the Marchenko-Pastur band.
    const double ratio = std::sqrt(static_cast<double>(frames.grid.bins()) /
                                   static_cast<double>(frames.frames()));
    const double edge = vacuum_edge(frames.grid.bins(), frames.frames());
    std::size_t above = 0;
    for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
        above += dec.eigenvalues[k] > 1.05 * edge ? 1 : 0;
    }

    Json j = decomposition_json(dec, count);
    j["frames_path"] = opt.frames.string();
    j["nbar_se"] = std::move(se);
    j["vacuum_band"] = {{"nbar_lower", (1.0 - ratio) * (1.0 - ratio) - 1.0},
                        {"nbar_upper", edge - 1.0}};
    j["mode_threshold_eigenvalue"] = 1.05 * edge;
    j["modes_above_vacuum"] = above;
    j["mode_csv"] = std::move(modes);
    j["manifest"] = manifest_json(m);
    write_json(opt.out, j);
}

void run_decompose2(const Decompose2Options &opt)
{
    if (opt.out.empty()) {
        throw Error(ErrorCode::config, "--out is required");
    }
    if (opt.frames.empty() == opt.oracle.empty()) {
        throw Error(ErrorCode::config, "exactly one of --frames or --oracle is required");
    }
    RunManifest m;
    m.command = "decompose2";
    Json source;
    std::optional<TwoPhotonSolution> sol;
    if (!opt.frames.empty()) {
        const FrameSet frames = read_frames(opt.frames);
        sol = decompose_frames(frames);
        m.duration_s = frames.grid.duration();
        m.bins = frames.grid.bins();
        m.frames = frames.frames();
        m.inputs.push_back({"frames", opt.frames});
        source = {{"kind", "frames"}};
    } else {
        const TimeGrid grid(opt.duration_s, opt.bins);
        const StateConfig cfg = load_state_config(opt.oracle);
        const BuiltState built = build_state(cfg, grid);
        for (const auto &w : built.warnings) {
            warn(w);
        }
        sol = decompose_analytic(built.state);
        m.duration_s = opt.duration_s;
        m.bins = opt.bins;
        source = {{"kind", "oracle"}, {"state_spec", opt.oracle},
                  {"state_config", state_config_json(cfg)}};
    }

    ensure_parent(opt.out);
    const std::vector<std::pair<std::string, const Tmf *>> tmfs = {
        {"e1", &sol->e1}, {"e2", &sol->e2}, {"f1", &sol->f1}, {"f2", &sol->f2}};
    Json csvs = Json::object();
    Json mode_csv = Json::array();
    for (const auto &[name, f] : tmfs) {
        const fs::path csv = sibling(opt.out, "_" + name + ".csv");
        write_tmf_csv(csv, *f);
        m.outputs.push_back({name, csv});
        csvs[name] = csv.filename().string();
        if (name[0] == 'e') {
            mode_csv.push_back(csv.filename().string());
        }
    }
    Json j = solution_json(*sol);
    j["source"] = std::move(source);
    if (!opt.frames.empty()) {
        j["frames_path"] = opt.frames.string();
    }
    j["grid"] = {{"duration_s", m.duration_s}, {"bins", m.bins}};
    Json eig = Json::array();
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(sol->eigenvalues.size(), 50); ++k) {
        eig.push_back(sol->eigenvalues[k]);
    }
    j["eigenvalues"] = std::move(eig);
    j["tmf_csv"] = std::move(csvs);
    j["mode_csv"] = std::move(mode_csv);
    j["manifest"] = manifest_json(m);
    write_json(opt.out, j);
}

void run_report(const ReportOptions &opt)
{
    if (opt.out.empty()) {
        throw Error(ErrorCode::config, "--out is required");
    }
    const Json src = read_json(opt.decomposition);
    if (!src.contains("grid") || !src.contains("mode_csv") || !src.contains("eigenvalues")) {
        throw Error(ErrorCode::corrupt_data,
                    "decomposition file lacks grid, eigenvalues or mode_csv fields");
    }
    const TimeGrid grid(src["grid"]["duration_s"].get<double>(),
                        src["grid"]["bins"].get<std::size_t>());
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot create report directory " + opt.out.string());
    }

    RunManifest m;
    m.command = "report";
    m.duration_s = grid.duration();
    m.bins = grid.bins();
    m.inputs.push_back({"decomposition", opt.decomposition});

    Json summary = Json::object();
    const auto &eig_json = src["eigenvalues"];
    Eigen::VectorXd eig(static_cast<Eigen::Index>(eig_json.size()));
    for (std::size_t k = 0; k < eig_json.size(); ++k) {
        eig[static_cast<Eigen::Index>(k)] = eig_json[k].get<double>();
    }
    const fs::path spectrum = opt.out / "spectrum.csv";
    write_spectrum_csv(spectrum, eig, opt.spectrum_modes);
    m.outputs.push_back({"spectrum", spectrum});

    std::vector<Tmf> modes;
    const std::size_t wanted =
        std::min<std::size_t>(opt.photon_modes, src["mode_csv"].size());
    for (std::size_t k = 0; k < wanted; ++k) {
        const fs::path csv =
            resolve_relative(src["mode_csv"][k].get<std::string>(), opt.decomposition);
        modes.push_back(read_tmf_csv(csv, grid));
        const fs::path copy = opt.out / ("tmf" + mode_suffix(k + 1) + ".csv");
        write_tmf_csv(copy, modes.back());
        m.outputs.push_back({"eigenmode", copy});
    }
    if (src.contains("tmf_csv")) {
        for (const char *name : {"f1", "f2"}) {
            if (!src["tmf_csv"].contains(name)) {
                continue;
            }
            const fs::path csv =
                resolve_relative(src["tmf_csv"][name].get<std::string>(), opt.decomposition);
            const fs::path copy = opt.out / (std::string("tmf_") + name + ".csv");
            write_tmf_csv(copy, read_tmf_csv(csv, grid));
            m.outputs.push_back({name, copy});
        }
    }

    WignerWindow window;
    window.x_min = window.p_min = -opt.wigner_extent;
    window.x_max = window.p_max = opt.wigner_extent;
    window.nx = window.np = opt.wigner_points;

    Json mode_summaries = Json::array();
    auto emit_mode = [&](std::size_t k, const PhotonDistribution &dist,
                         const Eigen::MatrixXcd &rho, const std::string &wigner_kind) {
        const fs::path dcsv = opt.out / ("photon" + mode_suffix(k + 1) + ".csv");
        write_distribution_csv(dcsv, dist);
        m.outputs.push_back({"photon_distribution", dcsv});
        const WignerGrid wg = wigner_grid(rho, window);
        const fs::path wcsv = opt.out / ("wigner" + mode_suffix(k + 1) + ".csv");
        write_wigner_csv(wcsv, wg);
        m.outputs.push_back({"wigner", wcsv});
        if (wg.window_warning) {
            warn("Wigner window misses more than 2% of the mass for mode " + std::to_string(k + 1));
        }
        Json p = Json::array();
        for (Eigen::Index n = 0; n < dist.p.size(); ++n) {
            p.push_back(dist.p[n]);
        }
        mode_summaries.push_back({{"mode", k + 1},
                                  {"p", std::move(p)},
                                  {"fit_residual", dist.residual},
                                  {"ill_conditioned", dist.ill_conditioned},
                                  {"wigner_kind", wigner_kind},
                                  {"wigner_integral", wg.integral},
                                  {"wigner_window_warning", wg.window_warning}});
    };

    if (src.contains("frames_path")) {
        const fs::path frames_path =
            resolve_relative(src["frames_path"].get<std::string>(), opt.decomposition);
        const FrameSet frames = read_frames(frames_path);
        m.frames = frames.frames();
        m.inputs.push_back({"frames", frames_path});
        std::vector<ComplexVector> samples;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            samples.push_back(project(frames, modes[k]));
            const PhotonDistribution dist = photon_distribution_from_samples(
                samples.back(), opt.moment_order, opt.photon_cutoff);
            Eigen::MatrixXcd rho = dist.p.cast<Complex>().asDiagonal();
            emit_mode(k, dist, rho, "phase-averaged (diagonal) from fitted photon distribution");
        }
        if (opt.joint && samples.size() >= 2) {
            const JointPhotonDistribution joint =
                joint_photon_distribution(samples[0], samples[1], opt.joint_cutoff);
            const fs::path jcsv = opt.out / "photon_joint_modes01_02.csv";
            write_joint_distribution_csv(jcsv, joint);
            m.outputs.push_back({"joint_photon_distribution", jcsv});
            summary["pearson_r"] = joint.pearson_r;
            summary["pearson_zero_variance"] = joint.zero_variance;
            summary["joint_fit_residual"] = joint.residual;
            summary["joint_ill_conditioned"] = joint.ill_conditioned;
        }
    } else if (src.contains("source") && src["source"].contains("state_config")) {
        const StateConfig cfg = parse_state_config(src["source"]["state_config"]);
        const BuiltState built = build_state(cfg, grid);
        for (std::size_t k = 0; k < modes.size(); ++k) {
            const Eigen::MatrixXcd rho = reduced_density_in_mode(built.state, modes[k]);
            PhotonDistribution dist;
            dist.cutoff = static_cast<int>(rho.rows()) - 1;
            dist.p = rho.diagonal().real();
            dist.se = Eigen::VectorXd::Zero(dist.p.size());
            emit_mode(k, dist, rho, "exact reduced state of the oracle model");
        }
    } else {
        throw Error(ErrorCode::corrupt_data,
                    "decomposition file references neither frames nor an oracle state");
    }

    summary["modes"] = std::move(mode_summaries);
    summary["wigner_convention"] = kWignerConvention;
    summary["manifest"] = manifest_json(m);
    write_json(opt.out / "report.json", summary);
}

namespace
{

int exit_code(ErrorCode code)
{
    switch (code) {
    case ErrorCode::config:
    case ErrorCode::contract_violation:
    case ErrorCode::linear_dependence:
    case ErrorCode::degenerate_input: return 2;
    case ErrorCode::numerical_failure:
    case ErrorCode::sampler_configuration: return 4;
    default: return 3;
    }
}

std::string one_line(std::string s)
{
    for (char &c : s) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return s;
}

int fail(ErrorCode code, const std::string &message)
{
    std::cerr << "error: " << to_string(code) << ": " << one_line(message) << std::endl;
    return exit_code(code);
}

} // namespace

int run_main(int argc, const char *const *argv)
{
    CLI::App app{"Complex PCA of simulated dual-homodyne records"};
    app.require_subcommand(1);

    SimulateOptions sim;
    std::string filters = "off";
    auto *simulate = app.add_subcommand("simulate", "generate a frame file for a state model");
    simulate->add_option("--state", sim.state, "preset phi1..phi6 or state-config JSON path")
        ->required();
    simulate->add_option("-T,--duration", sim.duration_s, "frame duration [s]");
    simulate->add_option("-M,--bins", sim.bins, "time bins per frame");
    simulate->add_option("--frames", sim.frames, "number of frames");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--filters", filters, "detector filters")
        ->check(CLI::IsMember({"on", "off"}));
    simulate->add_option("--highpass", sim.highpass_hz, "high-pass cutoff [Hz]");
    simulate->add_option("--lowpass", sim.lowpass_hz, "low-pass cutoff [Hz]");
    simulate->add_option("--out", sim.out, "output frame file")->required();

    AnalyzeOptions ana;
    auto *analyze = app.add_subcommand("analyze", "CPCA of a frame file");
    analyze->add_option("--frames", ana.frames, "frame file")->required();
    analyze->add_option("--modes", ana.modes, "modes to report");
    analyze->add_option("--out", ana.out, "output JSON")->required();

    Decompose2Options dec;
    auto *decompose = app.add_subcommand("decompose2", "two-photon dual-mode decomposition");
    auto *dec_frames = decompose->add_option("--frames", dec.frames, "frame file");
    auto *dec_oracle =
        decompose->add_option("--oracle", dec.oracle, "analytic state (preset or config path)");
    dec_frames->excludes(dec_oracle);
    decompose->add_option("-T,--duration", dec.duration_s, "oracle grid duration [s]");
    decompose->add_option("-M,--bins", dec.bins, "oracle grid bins");
    decompose->add_option("--out", dec.out, "output JSON")->required();

    ReportOptions rep;
    bool no_joint = false;
    auto *report = app.add_subcommand("report", "emit plotting data for a decomposition");
    report->add_option("--decomposition", rep.decomposition, "analyze or decompose2 JSON")
        ->required();
    report->add_option("--out", rep.out, "output directory")->required();
    report->add_option("--spectrum-modes", rep.spectrum_modes, "eigenvalues in spectrum.csv");
    report->add_option("--photon-modes", rep.photon_modes, "modes with photon/Wigner output");
    report->add_option("--moment-order", rep.moment_order, "anti-normal moment order K (<= 6)");
    report->add_option("--photon-cutoff", rep.photon_cutoff, "single-mode cutoff (<= 5)");
    report->add_option("--joint-cutoff", rep.joint_cutoff, "joint cutoff (<= 4)");
    report->add_flag("--no-joint", no_joint, "skip the joint distribution of modes 1 and 2");
    report->add_option("--wigner-points", rep.wigner_points, "Wigner grid points per axis");
    report->add_option("--wigner-extent", rep.wigner_extent, "Wigner half-width in x and p");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail(ErrorCode::config, e.what());
    }

    try {
        if (simulate->parsed()) {
            sim.filters = filters == "on";
            run_simulate(sim);
        } else if (analyze->parsed()) {
            run_analyze(ana);
        } else if (decompose->parsed()) {
            run_decompose2(dec);
        } else if (report->parsed()) {
            rep.joint = !no_joint;
            run_report(rep);
        }
    } catch (const Error &e) {
        return fail(e.code(), e.what());
    } catch (const nlohmann::json::exception &e) {
        return fail(ErrorCode::corrupt_data, e.what());
    } catch (const std::exception &e) {
        return fail(ErrorCode::numerical_failure, e.what());
    }
    return 0;
}

} // namespace cpca::cli
