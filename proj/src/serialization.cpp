#include "cpca/serialization.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "cpca/error.hpp"

namespace cpca
{

namespace
{

const double kHalf = 1.0 / std::numbers::sqrt2;

std::ofstream open_out(const std::filesystem::path &path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(17);
    return out;
}

void check_written(const std::ofstream &out, const std::filesystem::path &path)
{
    if (!out) {
        throw Error(ErrorCode::io, "failed writing " + path.string());
    }
}

Json pair_json(Complex a, Complex b)
{
    return Json::array({to_json(a), to_json(b)});
}

std::array<Complex, 2> pair_from_json(const Json &j, const std::string &what)
{
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorCode::config, what + " must be a two-element list of complex numbers");
    }
    return {complex_from_json(j[0], what + "[0]"), complex_from_json(j[1], what + "[1]")};
}

double number_field(const Json &obj, const char *key, double fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json &v = obj.at(key);
    if (!v.is_number()) {
        throw Error(ErrorCode::config, std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

struct ConstructorInfo
{
    const char *name;
    std::vector<const char *> required;
    std::vector<const char *> optional;
    int default_cutoff;
};

const std::vector<ConstructorInfo> &constructors()
{
    static const std::vector<ConstructorInfo> table = {
        {"vacuum", {}, {}, 0},
        {"fock", {"n"}, {"carrier"}, -1},
        {"single_photon_qubit", {"p1", "p2"}, {}, 6},
        {"two_photon", {"f1", "f2"}, {}, 6},
        {"two_photon_coefficients", {"alpha", "beta", "gamma"}, {}, 6},
        {"squeezed_vacuum", {"r"}, {"carrier"}, 20},
        {"photon_subtracted_dualrail", {"s1", "s2", "r"}, {}, 20},
        {"photon_subtracted_epr", {"r"}, {}, 20},
    };
    return table;
}

const ConstructorInfo &find_constructor(const std::string &name)
{
    for (const auto &c : constructors()) {
        if (name == c.name) {
            return c;
        }
    }
    std::ostringstream msg;
    msg << "unknown state constructor '" << name << "' (expected one of:";
    for (const auto &c : constructors()) {
        msg << ' ' << c.name;
    }
    msg << ')';
    throw Error(ErrorCode::config, msg.str());
}

double real_param(const Json &params, const char *key)
{
    const Json &v = params.at(key);
    if (!v.is_number()) {
        throw Error(ErrorCode::config, std::string("parameter '") + key + "' must be a number");
    }
    return v.get<double>();
}

} // namespace

Json to_json(Complex z)
{
    return Json::array({z.real(), z.imag()});
}

Complex complex_from_json(const Json &j, const std::string &what)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw Error(ErrorCode::config, what + " must be a number or [re, im]");
}

void write_tmf_csv(const std::filesystem::path &path, const Tmf &f)
{
    auto out = open_out(path);
    out << "bin_index,time_s,re,im\n";
    for (std::size_t j = 0; j < f.size(); ++j) {
        out << j << ',' << f.grid().time_at(j) << ',' << f[j].real() << ',' << f[j].imag() << '\n';
    }
    check_written(out, path);
}

Tmf read_tmf_csv(const std::filesystem::path &path, const TimeGrid &grid)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "bin_index,time_s,re,im") {
        throw Error(ErrorCode::corrupt_data, "unexpected TMF CSV header in " + path.string());
    }
    ComplexVector amp = ComplexVector::Zero(static_cast<Eigen::Index>(grid.bins()));
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::size_t j = 0;
        double t = 0.0, re = 0.0, im = 0.0;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(row >> j >> c1 >> t >> c2 >> re >> c3 >> im)) {
            throw Error(ErrorCode::corrupt_data, "malformed TMF CSV row: " + line);
        }
        if (j >= grid.bins()) {
            throw Error(ErrorCode::grid_mismatch, "TMF CSV has more rows than the grid has bins");
        }
        amp[static_cast<Eigen::Index>(j)] = {re, im};
        ++rows;
    }
    if (rows != grid.bins()) {
        throw Error(ErrorCode::grid_mismatch, "TMF CSV row count does not match the grid");
    }
    return Tmf(grid, std::move(amp));
}

Json tmf_json(const Tmf &f)
{
    Json re = Json::array();
    Json im = Json::array();
    for (std::size_t j = 0; j < f.size(); ++j) {
        re.push_back(f[j].real());
        im.push_back(f[j].imag());
    }
    return {{"duration_s", f.grid().duration()},
            {"bins", f.grid().bins()},
            {"dt_s", f.grid().dt()},
            {"re", std::move(re)},
            {"im", std::move(im)}};
}

bool is_preset(const std::string &name)
{
    static const std::set<std::string> names = {"phi1", "phi2", "phi3", "phi4", "phi5", "phi6"};
    return names.count(name) > 0;
}

StateConfig preset_config(const std::string &name)
{
    const Complex i(0.0, 1.0);
    StateConfig cfg;
    if (name == "phi1") {
        cfg.constructor = "single_photon_qubit";
        cfg.params = {{"p1", to_json(kHalf)}, {"p2", to_json(kHalf)}};
    } else if (name == "phi2") {
        cfg.constructor = "single_photon_qubit";
        cfg.params = {{"p1", to_json(kHalf)}, {"p2", to_json(i * kHalf)}};
    } else if (name == "phi3") {
        cfg.constructor = "photon_subtracted_dualrail";
        cfg.params = {{"s1", to_json(kHalf)}, {"s2", to_json(kHalf)}, {"r", 0.5}};
    } else if (name == "phi4") {
        cfg.constructor = "photon_subtracted_dualrail";
        cfg.params = {{"s1", to_json(kHalf)}, {"s2", to_json(-i * kHalf)}, {"r", 0.5}};
    } else if (name == "phi5") {
        cfg.constructor = "two_photon";
        cfg.params = {{"f1", pair_json(kHalf, i * kHalf)}, {"f2", pair_json(kHalf, -i * kHalf)}};
    } else if (name == "phi6") {
        const Complex ph = std::polar(1.0, std::numbers::pi / 4.0);
        cfg.constructor = "two_photon";
        cfg.params = {{"f1", pair_json(kHalf, ph * kHalf)},
                      {"f2", pair_json(kHalf, std::conj(ph) * kHalf)}};
    } else {
        throw Error(ErrorCode::config, "unknown preset '" + name + "'");
    }
    return cfg;
}

StateConfig parse_state_config(const Json &j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::config, "state config must be a JSON object");
    }
    static const std::set<std::string> top = {"constructor", "params", "tmf", "loss_p", "cutoff"};
    for (const auto &item : j.items()) {
        if (top.count(item.key()) == 0) {
            throw Error(ErrorCode::config, "unknown state config field '" + item.key() + "'");
        }
    }
    if (!j.contains("constructor") || !j.at("constructor").is_string()) {
        throw Error(ErrorCode::config, "state config needs a string field 'constructor'");
    }
    StateConfig cfg;
    cfg.constructor = j.at("constructor").get<std::string>();
    const ConstructorInfo &info = find_constructor(cfg.constructor);

    if (j.contains("params")) {
        if (!j.at("params").is_object()) {
            throw Error(ErrorCode::config, "'params' must be an object");
        }
        cfg.params = j.at("params");
    }
    for (const char *key : info.required) {
        if (!cfg.params.contains(key)) {
            throw Error(ErrorCode::config, "constructor '" + cfg.constructor +
                                               "' requires parameter '" + key + "'");
        }
    }
    for (const auto &item : cfg.params.items()) {
        bool known = false;
        for (const char *key : info.required) {
            known = known || item.key() == key;
        }
        for (const char *key : info.optional) {
            known = known || item.key() == key;
        }
        if (!known) {
            throw Error(ErrorCode::config, "unknown parameter '" + item.key() +
                                               "' for constructor '" + cfg.constructor + "'");
        }
    }

    if (j.contains("tmf")) {
        const Json &t = j.at("tmf");
        if (!t.is_object()) {
            throw Error(ErrorCode::config, "'tmf' must be an object");
        }
        static const std::set<std::string> keys = {"gamma_per_s", "delta_t_s", "center1_s"};
        for (const auto &item : t.items()) {
            if (keys.count(item.key()) == 0) {
                throw Error(ErrorCode::config, "unknown tmf field '" + item.key() + "'");
            }
        }
        cfg.tmf.gamma_per_s = number_field(t, "gamma_per_s", cfg.tmf.gamma_per_s);
        cfg.tmf.delta_t_s = number_field(t, "delta_t_s", cfg.tmf.delta_t_s);
        cfg.tmf.center1_s = number_field(t, "center1_s", cfg.tmf.center1_s);
        if (!(cfg.tmf.gamma_per_s > 0.0)) {
            throw Error(ErrorCode::config, "tmf.gamma_per_s must be positive");
        }
    }
    cfg.loss_p = number_field(j, "loss_p", 0.0);
    if (!(cfg.loss_p >= 0.0 && cfg.loss_p < 1.0)) {
        throw Error(ErrorCode::config, "loss_p must lie in [0, 1)");
    }
    if (j.contains("cutoff")) {
        if (!j.at("cutoff").is_number_integer() || j.at("cutoff").get<int>() < 0) {
            throw Error(ErrorCode::config, "cutoff must be a non-negative integer");
        }
        cfg.cutoff = j.at("cutoff").get<int>();
    }
    return cfg;
}

StateConfig load_state_config(const std::string &spec)
{
    if (is_preset(spec)) {
        return preset_config(spec);
    }
    const std::filesystem::path path(spec);
    if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::config,
                    "state '" + spec + "' is neither a preset (phi1..phi6) nor an existing file");
    }
    Json j;
    try {
        j = read_json(path);
    } catch (const Error &e) {
        throw Error(ErrorCode::config, e.what());
    }
    return parse_state_config(j);
}

Json state_config_json(const StateConfig &cfg)
{
    Json j = {{"constructor", cfg.constructor},
              {"params", cfg.params},
              {"tmf",
               {{"gamma_per_s", cfg.tmf.gamma_per_s},
                {"delta_t_s", cfg.tmf.delta_t_s},
                {"center1_s", cfg.tmf.center1_s}}},
              {"loss_p", cfg.loss_p}};
    if (cfg.cutoff >= 0) {
        j["cutoff"] = cfg.cutoff;
    }
    return j;
}

BuiltState build_state(const StateConfig &cfg, const TimeGrid &grid)
{
    const ConstructorInfo &info = find_constructor(cfg.constructor);
    const int cutoff = cfg.cutoff >= 0 ? cfg.cutoff : info.default_cutoff;
    TimeBinPair bins = timebin_pair(grid, cfg.tmf);
    std::vector<std::string> warnings;
    if (bins.truncated) {
        warnings.emplace_back("time-bin wave packets extend beyond the frame window");
    }
    const Json &p = cfg.params;
    const std::vector<Tmf> w{bins.w1, bins.w2};
    if (std::abs(inner_product(bins.w1, bins.w2)) > 1e-9) {
        throw Error(ErrorCode::config,
                    "time-bin modes are not orthogonal on this grid (|<w1,w2>| = " +
                        std::to_string(std::abs(inner_product(bins.w1, bins.w2))) +
                        "); increase delta_t_s or gamma_per_s");
    }
    auto carrier = [&]() {
        if (!p.contains("carrier")) {
            return bins.w1;
        }
        const auto c = pair_from_json(p.at("carrier"), "carrier");
        return superpose(c, w);
    };

    try {
        ModalState state = vacuum_state();
        const std::string &name = cfg.constructor;
        if (name == "vacuum") {
            state = vacuum_state();
        } else if (name == "fock") {
            const Json &n = p.at("n");
            if (!n.is_number_integer()) {
                throw Error(ErrorCode::config, "parameter 'n' must be an integer");
            }
            const int photons = n.get<int>();
            state = fock_state(photons, carrier(), std::max(cutoff, photons));
        } else if (name == "single_photon_qubit") {
            state = single_photon_qubit(complex_from_json(p.at("p1"), "p1"),
                                        complex_from_json(p.at("p2"), "p2"), bins.w1, bins.w2,
                                        cutoff);
        } else if (name == "two_photon") {
            const auto c1 = pair_from_json(p.at("f1"), "f1");
            const auto c2 = pair_from_json(p.at("f2"), "f2");
            state = two_photon_state(superpose(c1, w), superpose(c2, w), bins.w1, bins.w2, cutoff)
                        .state;
        } else if (name == "two_photon_coefficients") {
            state = two_photon_from_coefficients(complex_from_json(p.at("alpha"), "alpha"),
                                                 complex_from_json(p.at("beta"), "beta"),
                                                 complex_from_json(p.at("gamma"), "gamma"),
                                                 bins.w1, bins.w2, cutoff)
                        .state;
        } else if (name == "squeezed_vacuum") {
            state = squeezed_state(real_param(p, "r"), carrier(), cutoff);
        } else if (name == "photon_subtracted_dualrail") {
            state = photon_subtracted_dualrail(complex_from_json(p.at("s1"), "s1"),
                                               complex_from_json(p.at("s2"), "s2"),
                                               real_param(p, "r"), bins.w1, bins.w2, cutoff);
        } else if (name == "photon_subtracted_epr") {
            state = photon_subtracted_epr_state(real_param(p, "r"), bins.w1, bins.w2, cutoff);
        }
        if (state.truncation_warning) {
            std::ostringstream msg;
            msg << "Fock truncation error " << state.truncation_error << " at cutoff " << cutoff;
            warnings.push_back(msg.str());
        }
        if (cfg.loss_p > 0.0) {
            state = apply_loss(state, cfg.loss_p);
        }
        return BuiltState{std::move(state), std::move(bins), std::move(warnings)};
    } catch (const Error &e) {
        switch (e.code()) {
        case ErrorCode::contract_violation:
        case ErrorCode::linear_dependence:
        case ErrorCode::degenerate_input:
            throw Error(ErrorCode::config,
                        "invalid '" + cfg.constructor + "' configuration: " + e.what());
        default: throw;
        }
    }
}

std::string sha256_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open " + path.string() + " for hashing");
    }
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error(ErrorCode::numerical_failure, "SHA-256 initialization failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        const std::streamsize got = in.gcount();
        if (got > 0) {
            EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

Json manifest_json(const RunManifest &m)
{
    auto files = [](const std::vector<ManifestFile> &list) {
        Json arr = Json::array();
        for (const auto &f : list) {
            arr.push_back({{"role", f.role},
                           {"path", f.path.filename().string()},
                           {"sha256", sha256_file(f.path)}});
        }
        return arr;
    };
    Json j = {{"tool", "cpca"},
              {"tool_version", kToolVersion},
              {"command", m.command},
              {"grid", {{"duration_s", m.duration_s}, {"bins", m.bins}}},
              {"frames", m.frames},
              {"filters", m.filters},
              {"inputs", files(m.inputs)},
              {"outputs", files(m.outputs)}};
    if (m.has_seed) {
        j["seed"] = m.seed;
    }
    for (const auto &item : m.extra.items()) {
        j[item.key()] = item.value();
    }
    return j;
}

void write_json(const std::filesystem::path &path, const Json &j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    check_written(out, path);
}

Json read_json(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error &e) {
        throw Error(ErrorCode::corrupt_data, "invalid JSON in " + path.string() + ": " + e.what());
    }
}

Json decomposition_json(const ModeDecomposition &dec, std::size_t modes_reported)
{
    const std::size_t count =
        std::min(modes_reported, static_cast<std::size_t>(dec.eigenvalues.size()));
    Json eig = Json::array();
    Json nbar = Json::array();
    for (std::size_t k = 0; k < count; ++k) {
        eig.push_back(dec.eigenvalues[static_cast<Eigen::Index>(k)]);
        nbar.push_back(dec.nbar[static_cast<Eigen::Index>(k)]);
    }
    Json groups = Json::array();
    for (const auto &[a, b] : dec.degenerate_groups) {
        groups.push_back({a, b});
    }
    return {{"grid", {{"duration_s", dec.grid.duration()}, {"bins", dec.grid.bins()}}},
            {"frame_count", dec.frame_count},
            {"modes_reported", count},
            {"eigenvalues", std::move(eig)},
            {"nbar", std::move(nbar)},
            {"trace", dec.eigenvalues.sum()},
            {"unitarity_residual", dec.unitarity_residual},
            {"degenerate_groups", std::move(groups)}};
}

Json solution_json(const TwoPhotonSolution &sol)
{
    Json d = Json::array();
    for (int r = 0; r < 2; ++r) {
        d.push_back(Json::array({to_json(sol.d(r, 0)), to_json(sol.d(r, 1))}));
    }
    return {{"branch", std::string(to_string(sol.coeffs.branch))},
            {"N1", sol.n1},
            {"N2", sol.n2},
            {"se_N1", sol.se_n1},
            {"se_N2", sol.se_n2},
            {"m22", to_json(sol.moments.m22)},
            {"m211", to_json(sol.moments.m211)},
            {"se_m22", sol.moments.se_m22},
            {"se_m211", sol.moments.se_m211},
            {"frame_count", sol.moments.frame_count},
            {"insufficient_frames", sol.moments.insufficient_frames},
            {"q_prime", sol.q_prime},
            {"Q", sol.q},
            {"Theta_rad", sol.theta},
            {"alpha", to_json(sol.coeffs.alpha)},
            {"beta", to_json(sol.coeffs.beta)},
            {"gamma", to_json(sol.coeffs.gamma)},
            {"sign_moment", to_json(sol.moments.m211)},
            {"D", std::move(d)},
            {"overlap", to_json(sol.overlap)},
            {"overlap_abs", std::abs(sol.overlap)},
            {"vacuum_threshold", sol.vacuum_threshold}};
}

void write_spectrum_csv(const std::filesystem::path &path, const Eigen::VectorXd &eigenvalues,
                        std::size_t count)
{
    auto out = open_out(path);
    out << "mode,eigenvalue,nbar\n";
    count = std::min(count, static_cast<std::size_t>(eigenvalues.size()));
    for (std::size_t k = 0; k < count; ++k) {
        const double l = eigenvalues[static_cast<Eigen::Index>(k)];
        out << k + 1 << ',' << l << ',' << l - 1.0 << '\n';
    }
    check_written(out, path);
}

void write_distribution_csv(const std::filesystem::path &path, const PhotonDistribution &d)
{
    auto out = open_out(path);
    out << "n,p,se\n";
    for (Eigen::Index n = 0; n < d.p.size(); ++n) {
        out << n << ',' << d.p[n] << ',' << (n < d.se.size() ? d.se[n] : 0.0) << '\n';
    }
    check_written(out, path);
}

void write_joint_distribution_csv(const std::filesystem::path &path,
                                  const JointPhotonDistribution &d)
{
    auto out = open_out(path);
    out << "n,m,p,se\n";
    for (Eigen::Index n = 0; n < d.p.rows(); ++n) {
        for (Eigen::Index m = 0; m < d.p.cols(); ++m) {
            out << n << ',' << m << ',' << d.p(n, m) << ',' << d.se(n, m) << '\n';
        }
    }
    check_written(out, path);
}

void write_wigner_csv(const std::filesystem::path &path, const WignerGrid &g)
{
    auto out = open_out(path);
    out << "# " << g.convention << "\n";
    out << "x,p,w\n";
    for (Eigen::Index i = 0; i < g.x.size(); ++i) {
        for (Eigen::Index j = 0; j < g.p.size(); ++j) {
            out << g.x[i] << ',' << g.p[j] << ',' << g.w(i, j) << '\n';
        }
    }
    check_written(out, path);
}

} // namespace cpca
