#ifndef CPCA_SERIALIZATION_HPP
#define CPCA_SERIALIZATION_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpca/cpca_engine.hpp"
#include "cpca/dual_homodyne.hpp"
#include "cpca/mode_analysis.hpp"
#include "cpca/state_models.hpp"
#include "cpca/temporal_modes.hpp"
#include "cpca/two_photon.hpp"

namespace cpca
{

inline constexpr const char *kToolVersion = "1.0.0";

using Json = nlohmann::json;

// Complex numbers travel as [re, im]; a bare number is read as real.
Json to_json(Complex z);
Complex complex_from_json(const Json &j, const std::string &what);

// CSV columns: bin_index,time_s,re,im
void write_tmf_csv(const std::filesystem::path &path, const Tmf &f);
Tmf read_tmf_csv(const std::filesystem::path &path, const TimeGrid &grid);
Json tmf_json(const Tmf &f);

struct StateConfig
{
    std::string constructor;
    Json params = Json::object();
    TimeBinParams tmf;
    double loss_p = 0.0;
    int cutoff = -1; // constructor default when negative
};

// Presets phi1..phi6 of the time-bin states.
bool is_preset(const std::string &name);
StateConfig preset_config(const std::string &name);

// Throws config with a precise message on any invalid field.
StateConfig parse_state_config(const Json &j);
// `spec` is a preset name or a path to a JSON file.
StateConfig load_state_config(const std::string &spec);
Json state_config_json(const StateConfig &cfg);

struct BuiltState
{
    ModalState state;
    TimeBinPair bins;
    std::vector<std::string> warnings;
};

// Validates against the constructor's preconditions; library contract
// failures are reported as config errors.
BuiltState build_state(const StateConfig &cfg, const TimeGrid &grid);

std::string sha256_file(const std::filesystem::path &path);

struct ManifestFile
{
    std::string role;
    std::filesystem::path path;
};

struct RunManifest
{
    std::string command;
    std::uint64_t seed = 0;
    bool has_seed = false;
    double duration_s = 0.0;
    std::size_t bins = 0;
    std::size_t frames = 0;
    Json filters = Json::object();
    Json extra = Json::object();
    std::vector<ManifestFile> inputs;
    std::vector<ManifestFile> outputs;
};

// Digests are computed from the files as they exist when this is called.
Json manifest_json(const RunManifest &m);
void write_json(const std::filesystem::path &path, const Json &j);
Json read_json(const std::filesystem::path &path);

Json decomposition_json(const ModeDecomposition &dec, std::size_t modes_reported);
Json solution_json(const TwoPhotonSolution &sol);

void write_spectrum_csv(const std::filesystem::path &path, const Eigen::VectorXd &eigenvalues,
                        std::size_t count);
// Columns n,p,se
void write_distribution_csv(const std::filesystem::path &path, const PhotonDistribution &d);
// Columns n,m,p,se
void write_joint_distribution_csv(const std::filesystem::path &path,
                                  const JointPhotonDistribution &d);
// Columns x,p,w; a leading comment line records the convention.
void write_wigner_csv(const std::filesystem::path &path, const WignerGrid &g);

} // namespace cpca

#endif // CPCA_SERIALIZATION_HPP
