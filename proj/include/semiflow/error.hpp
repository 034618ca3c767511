#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semiflow {

enum class ErrorKind {
    outside_domain,
    outside_image,
    non_expanding_branch,
    parameter,
    resolution,
    no_convergence,
    divergent_tails,
    orbit_singular,
    budget,
    inside_pole_region,
    precondition,
    config,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::outside_domain: return "outside-domain";
    case ErrorKind::outside_image: return "outside-image";
    case ErrorKind::non_expanding_branch: return "non-expanding-branch";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::divergent_tails: return "divergent-tails";
    case ErrorKind::orbit_singular: return "orbit-singular";
    case ErrorKind::budget: return "budget";
    case ErrorKind::inside_pole_region: return "inside-pole-region";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Library-wide exception; `kind()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace semiflow
