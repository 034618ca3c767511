#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semiflow/interval_maps.hpp"
#include "semiflow/return_time.hpp"

namespace semiflow {

struct Verdicts {
    bool holder = false;
    bool expanding = false;
    bool summable = false;
    bool exp_tails = false;
    bool all() const noexcept { return holder && expanding && summable && exp_tails; }
};

/// Outcome of checking the regularity, expansion and summability conditions for (f, tau, alpha, sigma).
struct HypothesisReport {
    double alpha = 0.0;
    double sigma = 0.0;
    std::vector<double> z_samples;       // real parts in [-sigma, 0]
    std::vector<double> holder_constants; // one per z sample
    std::vector<double> expanding_values; // sigma_i^alpha e^{sigma sup tau_i}, listed branches
    double expanding_tail = 0.0;          // sup of the same over the tail
    double expanding_sup = 0.0;
    double sum_value = 0.0;               // sum_i sigma_i e^{sigma sup tau_i}, tail included
    double tails_integral = 0.0;          // int e^{sigma tau}; +inf when divergent
    double contraction_sup = 0.0;         // sup 1/|f'| over Omega
    Verdicts verdicts;
    std::optional<std::size_t> first_failing_branch;
    std::optional<int> iterate_suggestion;
    std::optional<double> iterate_alpha;  // largest of alpha, alpha/2, alpha/4 passing on the iterate
    std::vector<std::string> notes;
};

/// z_samples real values of Re z spread evenly over [-sigma, 0].
HypothesisReport check_conditions(const PiecewiseMap& map, const ReturnTime& tau, double alpha, double sigma,
                                  int z_samples = 5);

struct LorenzParams {
    double alpha;
    double sigma_max;
};

/// alpha = min(gamma, (1-beta)/(2-beta)), sigma_max = alpha lambda (1-beta).
LorenzParams lorenz_params(double lambda, double beta, double gamma);
/// sigma < alpha lambda (1 - beta).
bool green_condition(double sigma, double lambda, double beta, double alpha);
/// sigma <= lambda (1 - beta - alpha).
bool blue_condition(double sigma, double lambda, double beta, double alpha);

/// int_Omega e^{sigma tau} dx, closed form per branch where available plus the
/// tail series sum |omega_i| e^{sigma sup tau_i}. Throws divergent-tails.
double exp_tails(const PiecewiseMap& map, const ReturnTime& tau, double sigma);

/// Branches of f^n built from the listed branches (tail ignored); throws a
/// budget error beyond max_branches.
PiecewiseMap iterate_map(const PiecewiseMap& map, int n, std::size_t max_branches = 4096);
/// tau_n = sum_{k<n} tau o f^k as a return time on `iterate`.
ReturnTime iterate_return_time(const PiecewiseMap& map, const ReturnTime& tau, int n, const PiecewiseMap& iterate);
/// Sampled sup of 1/|(f^n)'| over orbits that stay in listed branches.
double iterate_contraction(const PiecewiseMap& map, int n);

/// Per-branch Hoelder estimate of e^{-z tau}/|f'|; `fine` adds endpoint-stratified points.
std::vector<double> branch_holder_constants(const PiecewiseMap& map, const ReturnTime& tau, double z, double alpha,
                                            bool fine);

nlohmann::json to_json(const HypothesisReport& report);
/// Plain-text table for terminals.
std::string format_report(const HypothesisReport& report);

} // namespace semiflow
