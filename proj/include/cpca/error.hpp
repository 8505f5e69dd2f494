#ifndef CPCA_ERROR_HPP
#define CPCA_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace cpca
{

enum class ErrorCode
{
    grid_mismatch,
    degenerate_input,
    contract_violation,
    linear_dependence,
    sampler_configuration,
    single_mode_state,
    inconsistent_moments,
    mode_count_mismatch,
    corrupt_data,
    config,
    io,
    numerical_failure,
};

// Stable upper-case identifier, used in CLI error lines.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cpca

#endif // CPCA_ERROR_HPP
