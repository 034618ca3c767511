#include "semiflow/gbv_norm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>

#include "semiflow/error.hpp"
#include "semiflow/parallel.hpp"

namespace semiflow {

namespace {

// O(1) range min/max over real parts.
class SparseTable {
public:
    explicit SparseTable(const std::vector<Complex>& values)
    {
        const std::size_t n = values.size();
        lo_.emplace_back(n);
        hi_.emplace_back(n);
        for (std::size_t k = 0; k < n; ++k)
            lo_[0][k] = hi_[0][k] = values[k].real();
        for (std::size_t span = 2; span <= n; span *= 2) {
            const auto& plo = lo_.back();
            const auto& phi = hi_.back();
            std::vector<double> nlo(n - span + 1);
            std::vector<double> nhi(n - span + 1);
            for (std::size_t k = 0; k + span <= n; ++k) {
                nlo[k] = std::min(plo[k], plo[k + span / 2]);
                nhi[k] = std::max(phi[k], phi[k + span / 2]);
            }
            lo_.push_back(std::move(nlo));
            hi_.push_back(std::move(nhi));
        }
    }

    double range(std::size_t a, std::size_t b) const
    {
        const std::size_t len = b - a + 1;
        const int level = std::bit_width(len) - 1;
        const std::size_t span = std::size_t{1} << level;
        const double mx = std::max(hi_[level][a], hi_[level][b + 1 - span]);
        const double mn = std::min(lo_[level][a], lo_[level][b + 1 - span]);
        return mx - mn;
    }

private:
    std::vector<std::vector<double>> lo_;
    std::vector<std::vector<double>> hi_;
};

double cross(Complex o, Complex a, Complex b)
{
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

// Diameter of a finite planar set: monotone-chain hull, then rotating calipers.
double diameter(std::span<const Complex> pts)
{
    if (pts.size() < 2)
        return 0.0;
    std::vector<Complex> p(pts.begin(), pts.end());
    std::sort(p.begin(), p.end(), [](Complex a, Complex b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() == 1)
        return 0.0;
    if (p.size() == 2)
        return std::abs(p[1] - p[0]);
    std::vector<Complex> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0)
            --k;
        hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0)
            --k;
        hull[k++] = p[i];
    }
    hull.resize(k - 1);
    const std::size_t h = hull.size();
    if (h <= 2) {
        double best = 0.0;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = i + 1; j < h; ++j)
                best = std::max(best, std::abs(hull[i] - hull[j]));
        // collinear sets collapse to their two extreme points
        return std::max(best, std::abs(p.back() - p.front()));
    }
    double best = 0.0;
    std::size_t j = 1;
    for (std::size_t i = 0; i < h; ++i) {
        const Complex a = hull[i];
        const Complex b = hull[(i + 1) % h];
        while (std::abs(cross(a, b, hull[(j + 1) % h])) > std::abs(cross(a, b, hull[j])))
            j = (j + 1) % h;
        best = std::max({best, std::abs(hull[j] - a), std::abs(hull[j] - b)});
    }
    return best;
}

double window_osc(const GridFunction& h, const SparseTable* table, std::size_t a, std::size_t b)
{
    if (b <= a)
        return 0.0;
    if (table)
        return table->range(a, b);
    return diameter(std::span<const Complex>(h.values).subspan(a, b - a + 1));
}

double oscillation_integral_impl(const GridFunction& h, const SparseTable* table, double eps)
{
    const std::size_t n = h.size();
    const double w = h.cell_width();
    const double q = eps / w;
    const double whole = std::floor(q);
    const double r = q - whole;
    const long Q = static_cast<long>(whole);
    double cuts[4] = {0.0, std::min(r, 1.0 - r), std::max(r, 1.0 - r), 1.0};

    std::vector<double> per_cell(n);
    parallel_for(n, [&](std::size_t p) {
        double acc = 0.0;
        for (int s = 0; s < 3; ++s) {
            const double len = cuts[s + 1] - cuts[s];
            if (len <= 0.0)
                continue;
            // x = a_p + theta w; the open ball meets cells L..R
            const double theta = 0.5 * (cuts[s] + cuts[s + 1]);
            long left = static_cast<long>(p) - Q - (theta < r ? 1 : 0);
            long right = static_cast<long>(p) + Q + (theta + r > 1.0 ? 1 : 0);
            left = std::max(left, 0L);
            right = std::min(right, static_cast<long>(n) - 1);
            acc += len * window_osc(h, table, static_cast<std::size_t>(left), static_cast<std::size_t>(right));
        }
        per_cell[p] = acc * w;
    });
    return pairwise_sum(std::span<const double>(per_cell));
}

} // namespace

std::size_t GridFunction::cell_of(double x) const noexcept
{
    const double t = (x - omega.lo) / cell_width();
    if (!(t > 0.0))
        return 0;
    return std::min(static_cast<std::size_t>(t), values.size() - 1);
}

bool GridFunction::is_real() const noexcept
{
    return std::all_of(values.begin(), values.end(), [](Complex v) { return v.imag() == 0.0; });
}

GridFunction make_grid_function(Interval omega, std::vector<Complex> values)
{
    make_interval(omega.lo, omega.hi);
    if (values.size() < 2)
        throw Error(ErrorKind::parameter, "grid function needs at least 2 cells");
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isfinite(values[k].real()) || !std::isfinite(values[k].imag()))
            throw Error(ErrorKind::parameter, "grid function value " + std::to_string(k) + " is not finite");
    return GridFunction{omega, std::move(values)};
}

GridFunction sample_grid_function(Interval omega, std::size_t n, const std::function<Complex(double)>& f)
{
    std::vector<Complex> values(n);
    const double w = omega.length() / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
        values[k] = f(omega.lo + (static_cast<double>(k) + 0.5) * w);
    return make_grid_function(omega, std::move(values));
}

GridFunction constant_grid_function(Interval omega, std::size_t n, Complex c)
{
    return make_grid_function(omega, std::vector<Complex>(n, c));
}

void validate(const GbvParams& p, const Interval& omega)
{
    if (!(p.alpha > 0.0 && p.alpha < 1.0))
        throw Error(ErrorKind::parameter, "alpha must lie in (0, 1)");
    if (!(p.eps0 > 0.0 && p.eps0 < 0.5 * omega.length()))
        throw Error(ErrorKind::parameter, "eps0 must lie in (0, |Omega|/2)");
}

double osc(const GridFunction& h, const Interval& s)
{
    const double lo = std::max(s.lo, h.omega.lo);
    const double hi = std::min(s.hi, h.omega.hi);
    if (!(hi > lo))
        return 0.0;
    const double w = h.cell_width();
    const long n = static_cast<long>(h.size());
    // cells (a_k, a_{k+1}) with a_k < hi and a_{k+1} > lo
    long first = static_cast<long>(std::floor((lo - h.omega.lo) / w));
    long last = static_cast<long>(std::ceil((hi - h.omega.lo) / w)) - 1;
    first = std::clamp(first, 0L, n - 1);
    last = std::clamp(last, 0L, n - 1);
    if (last <= first)
        return 0.0;
    const auto window = std::span<const Complex>(h.values).subspan(first, last - first + 1);
    if (h.is_real()) {
        const auto [mn, mx] = std::minmax_element(window.begin(), window.end(), [](Complex a, Complex b) {
            return a.real() < b.real();
        });
        return mx->real() - mn->real();
    }
    return diameter(window);
}

std::vector<double> epsilon_ladder(const GridFunction& h, const GbvParams& p)
{
    validate(p, h.omega);
    const double w = h.cell_width();
    if (p.eps0 < 4.0 * w)
        throw Error(ErrorKind::resolution, "eps0 covers fewer than 4 cells; refine the grid or raise eps0");
    std::vector<double> ladder;
    for (double eps = p.eps0; eps >= 2.0 * w * (1.0 - 1e-12); eps *= 0.5)
        ladder.push_back(eps);
    return ladder;
}

double oscillation_integral(const GridFunction& h, double eps)
{
    if (h.is_real()) {
        const SparseTable table(h.values);
        return oscillation_integral_impl(h, &table, eps);
    }
    return oscillation_integral_impl(h, nullptr, eps);
}

double seminorm(const GridFunction& h, const GbvParams& p)
{
    const auto ladder = epsilon_ladder(h, p);
    std::optional<SparseTable> table;
    if (h.is_real())
        table.emplace(h.values);
    double best = 0.0;
    for (double eps : ladder) {
        const double value = std::pow(eps, -p.alpha) * oscillation_integral_impl(h, table ? &*table : nullptr, eps);
        best = std::max(best, value);
    }
    return best;
}

double l1_norm(const GridFunction& h)
{
    std::vector<double> mags(h.size());
    for (std::size_t k = 0; k < h.size(); ++k)
        mags[k] = std::abs(h.values[k]);
    return h.cell_width() * pairwise_sum(std::span<const double>(mags));
}

double sup_norm(const GridFunction& h)
{
    double best = 0.0;
    for (Complex v : h.values)
        best = std::max(best, std::abs(v));
    return best;
}

double gbv_norm(const GridFunction& h, const GbvParams& p)
{
    return seminorm(h, p) + l1_norm(h);
}

double default_eps0(const PiecewiseMap& map)
{
    double smallest = std::numeric_limits<double>::infinity();
    for (const Branch& b : map.branches())
        smallest = std::min(smallest, b.image.length());
    return std::min(0.1 * map.omega().length(), smallest / 4.0);
}

void write_csv(std::ostream& out, const GridFunction& h)
{
    out << "cell_index,midpoint,re,im\n";
    char line[128];
    for (std::size_t k = 0; k < h.size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", k, h.midpoint(k), h.values[k].real(),
                      h.values[k].imag());
        out << line;
    }
}

void write_csv(const std::string& path, const GridFunction& h)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "cannot open " + path);
    write_csv(out, h);
}

GridFunction read_csv(std::istream& in, Interval omega)
{
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::io, "empty grid function CSV");
    std::vector<Complex> values;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream row(line);
        std::string field[4];
        for (auto& f : field)
            if (!std::getline(row, f, ','))
                throw Error(ErrorKind::io, "short row in grid function CSV: " + line);
        const auto index = std::stoul(field[0]);
        if (index != values.size())
            throw Error(ErrorKind::io, "cell_index out of order at row " + std::to_string(values.size()));
        values.emplace_back(std::stod(field[2]), std::stod(field[3]));
    }
    return make_grid_function(omega, std::move(values));
}

GridFunction read_csv(const std::string& path, Interval omega)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path);
    return read_csv(in, omega);
}

} // namespace semiflow
