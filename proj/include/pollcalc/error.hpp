#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pollcalc {

enum class ErrorCode {
    Unstable,
    ZeroSwitchover,
    BadShape,
    Domain,
    NoConvergence,
    Truncation,
    EmptyBand,
    RouteMismatch,
    FormMismatch,
    IllConditioned,
    Accuracy,
    UnsupportedFamily,
    Unsupported,
    Config,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::Unstable: return "UNSTABLE";
    case ErrorCode::ZeroSwitchover: return "ZERO_SWITCHOVER";
    case ErrorCode::BadShape: return "BAD_SHAPE";
    case ErrorCode::Domain: return "DOMAIN";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::Truncation: return "TRUNCATION";
    case ErrorCode::EmptyBand: return "EMPTY_BAND";
    case ErrorCode::RouteMismatch: return "ROUTE_MISMATCH";
    case ErrorCode::FormMismatch: return "FORM_MISMATCH";
    case ErrorCode::IllConditioned: return "ILL_CONDITIONED";
    case ErrorCode::Accuracy: return "ACCURACY";
    case ErrorCode::UnsupportedFamily: return "UNSUPPORTED_FAMILY";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::Config: return "CONFIG";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace pollcalc
