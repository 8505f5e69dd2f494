#include "cpca/error.hpp"

namespace cpca
{

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::grid_mismatch: return "GRID_MISMATCH";
    case ErrorCode::degenerate_input: return "DEGENERATE_INPUT";
    case ErrorCode::contract_violation: return "CONTRACT_VIOLATION";
    case ErrorCode::linear_dependence: return "LINEAR_DEPENDENCE";
    case ErrorCode::sampler_configuration: return "SAMPLER_CONFIGURATION";
    case ErrorCode::single_mode_state: return "SINGLE_MODE_STATE";
    case ErrorCode::inconsistent_moments: return "INCONSISTENT_MOMENTS";
    case ErrorCode::mode_count_mismatch: return "MODE_COUNT_MISMATCH";
    case ErrorCode::corrupt_data: return "CORRUPT_DATA";
    case ErrorCode::config: return "CONFIG";
    case ErrorCode::io: return "IO";
    case ErrorCode::numerical_failure: return "NUMERICAL_FAILURE";
    }
    return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(message), code_(code)
{
}

} // namespace cpca
