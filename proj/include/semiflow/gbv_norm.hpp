#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "semiflow/interval_maps.hpp"
#include "semiflow/numeric.hpp"

namespace semiflow {

/// Piecewise-constant function on n equal cells of Omega; values[k] is the
/// sample at the midpoint of cell k.
struct GridFunction {
    Interval omega;
    std::vector<Complex> values;

    std::size_t size() const noexcept { return values.size(); }
    double cell_width() const noexcept { return omega.length() / static_cast<double>(values.size()); }
    double midpoint(std::size_t k) const noexcept
    {
        return omega.lo + (static_cast<double>(k) + 0.5) * cell_width();
    }
    /// Cell containing x (clamped to the grid).
    std::size_t cell_of(double x) const noexcept;
    Complex at(double x) const noexcept { return values[cell_of(x)]; }
    bool is_real() const noexcept;
};

/// Validates n >= 2 and finite values.
GridFunction make_grid_function(Interval omega, std::vector<Complex> values);
GridFunction sample_grid_function(Interval omega, std::size_t n, const std::function<Complex(double)>& f);
GridFunction constant_grid_function(Interval omega, std::size_t n, Complex c);

struct GbvParams {
    double alpha = 0.5;
    double eps0 = 0.1;
};

/// Throws a parameter error unless alpha in (0,1) and 0 < eps0 < |Omega|/2.
void validate(const GbvParams& p, const Interval& omega);

/// Essential oscillation of h over the cells meeting s. Real data: max - min.
/// Complex data: diameter of the value set. Zero when s meets fewer than 2 cells.
double osc(const GridFunction& h, const Interval& s);

/// eps0 2^-k for k = 0..K, K largest with eps0 2^-K >= 2 cell widths.
std::vector<double> epsilon_ladder(const GridFunction& h, const GbvParams& p);

/// eps^-alpha * int osc(h; B_eps(x) ∩ Omega) dx, integrated exactly for the
/// piecewise-constant h.
double oscillation_integral(const GridFunction& h, double eps);
double seminorm(const GridFunction& h, const GbvParams& p);
double l1_norm(const GridFunction& h);
double sup_norm(const GridFunction& h);
double gbv_norm(const GridFunction& h, const GbvParams& p);

/// min(0.1 |Omega|, smallest listed branch image / 4).
double default_eps0(const PiecewiseMap& map);

/// CSV with header cell_index,midpoint,re,im and %.17g numbers.
void write_csv(std::ostream& out, const GridFunction& h);
void write_csv(const std::string& path, const GridFunction& h);
GridFunction read_csv(std::istream& in, Interval omega);
GridFunction read_csv(const std::string& path, Interval omega);

} // namespace semiflow
