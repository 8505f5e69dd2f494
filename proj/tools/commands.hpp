#ifndef CPCA_TOOLS_COMMANDS_HPP
#define CPCA_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cpca::cli
{

struct SimulateOptions
{
    std::string state;
    double duration_s = 1.5e-6;
    std::size_t bins = 64;
    std::size_t frames = 20000;
    std::uint64_t seed = 1;
    bool filters = false;
    double highpass_hz = 100e3;
    double lowpass_hz = 14.3e6;
    std::filesystem::path out;
};

struct AnalyzeOptions
{
    std::filesystem::path frames;
    std::size_t modes = 50;
    std::filesystem::path out;
};

struct Decompose2Options
{
    std::filesystem::path frames;
    std::string oracle;
    double duration_s = 1.5e-6;
    std::size_t bins = 64;
    std::filesystem::path out;
};

struct ReportOptions
{
    std::filesystem::path decomposition;
    std::filesystem::path out;
    std::size_t spectrum_modes = 50;
    std::size_t photon_modes = 2;
    int moment_order = 5;
    int photon_cutoff = 4;
    int joint_cutoff = 4;
    bool joint = true;
    int wigner_points = 81;
    double wigner_extent = 5.0;
};

// Each throws cpca::Error on failure.
void run_simulate(const SimulateOptions &opt);
void run_analyze(const AnalyzeOptions &opt);
void run_decompose2(const Decompose2Options &opt);
void run_report(const ReportOptions &opt);

// Full command line: parse, dispatch, map errors to exit codes
// (0 ok, 2 config, 3 data, 4 numerical) with one "error: CODE: message" line.
int run_main(int argc, const char *const *argv);

} // namespace cpca::cli

#endif // CPCA_TOOLS_COMMANDS_HPP
