#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "semiflow/error.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

namespace {

constexpr std::size_t dense_limit = 2048;

void sort_by_modulus(std::vector<Complex>& xs)
{
    std::stable_sort(xs.begin(), xs.end(), [](Complex a, Complex b) {
        const double ma = std::abs(a);
        const double mb = std::abs(b);
        if (ma != mb)
            return ma > mb;
        return std::arg(a) < std::arg(b);
    });
}

Eigen::VectorXcd start_vector(Eigen::Index n, int salt)
{
    Eigen::VectorXcd v(n);
    for (Eigen::Index k = 0; k < n; ++k)
        v[k] = Complex(1.0 + 0.1 * std::sin(0.7 * static_cast<double>(k) + salt),
                       0.05 * std::cos(1.3 * static_cast<double>(k) + salt));
    return v.normalized();
}

// Eigenpairs of a dense matrix; vectors only when asked.
void zgeev(Eigen::MatrixXcd a, std::vector<Complex>& values, Eigen::MatrixXcd* vectors)
{
    const auto n = static_cast<lapack_int>(a.rows());
    values.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 0)
        return;
    Eigen::MatrixXcd vr;
    if (vectors)
        vr.resize(n, n);
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n, values.data(), nullptr, 1,
                      vectors ? vr.data() : nullptr, n);
    if (info != 0)
        throw Error(ErrorKind::no_convergence, "zgeev failed with info " + std::to_string(info));
    if (vectors)
        *vectors = std::move(vr);
}

std::vector<Complex> subspace_topk(const OperatorMatrix& m, std::size_t k)
{
    const auto n = static_cast<Eigen::Index>(m.n);
    const auto block = static_cast<Eigen::Index>(std::min<std::size_t>(m.n, k + 10));
    Eigen::MatrixXcd x(n, block);
    for (Eigen::Index c = 0; c < block; ++c)
        x.col(c) = start_vector(n, static_cast<int>(c));
    std::vector<Complex> previous;
    for (int it = 0; it < 5000; ++it) {
        Eigen::MatrixXcd y = m.entries * x;
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
        x = qr.householderQ() * Eigen::MatrixXcd::Identity(n, block);
        if (it % 10 != 9)
            continue;
        const Eigen::MatrixXcd h = x.adjoint() * (m.entries * x);
        std::vector<Complex> ritz;
        zgeev(h, ritz, nullptr);
        sort_by_modulus(ritz);
        ritz.resize(k);
        bool settled = previous.size() == k;
        for (std::size_t i = 0; settled && i < k; ++i)
            settled = std::abs(ritz[i] - previous[i]) <= 1e-11 * std::max(1.0, std::abs(ritz[0]));
        if (settled)
            return ritz;
        previous = std::move(ritz);
    }
    throw Error(ErrorKind::no_convergence, "subspace iteration did not settle");
}

Eigenpair dense_nearest(const OperatorMatrix& m, Complex target)
{
    std::vector<Complex> values;
    Eigen::MatrixXcd vectors;
    zgeev(m.dense(), values, &vectors);
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (std::abs(values[i] - target) < std::abs(values[best] - target))
            best = i;
    Eigenpair out;
    out.value = values[best];
    out.vector = vectors.col(static_cast<Eigen::Index>(best)).normalized();
    out.residual = (m.apply(out.vector) - out.value * out.vector).norm();
    return out;
}

// Restarted Arnoldi keeping the Ritz pair preferred by `better`.
template <class Better, class Fallback>
Eigenpair arnoldi_pick(const OperatorMatrix& m, std::size_t krylov, double tol, Better better, Fallback fallback)
{
    const auto n = static_cast<Eigen::Index>(m.n);
    const auto dim = static_cast<Eigen::Index>(std::min<std::size_t>(krylov, m.n));
    Eigen::VectorXcd start = start_vector(n, 0);
    Eigenpair best;
    best.residual = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < 4; ++restart) {
        Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, dim + 1);
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim + 1, dim);
        v.col(0) = start;
        Eigen::Index used = dim;
        for (Eigen::Index j = 0; j < dim; ++j) {
            Eigen::VectorXcd w = m.entries * v.col(j);
            // modified Gram-Schmidt, applied twice
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index i = 0; i <= j; ++i) {
                    const Complex c = v.col(i).dot(w);
                    h(i, j) += c;
                    w -= c * v.col(i);
                }
            const double norm = w.norm();
            h(j + 1, j) = norm;
            if (norm < 1e-13) {
                used = j + 1;
                break;
            }
            v.col(j + 1) = w / norm;
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> small(h.topLeftCorner(used, used));
        if (small.info() != Eigen::Success)
            break;
        Eigen::Index pick = 0;
        for (Eigen::Index i = 1; i < used; ++i)
            if (better(small.eigenvalues()[i], small.eigenvalues()[pick]))
                pick = i;
        Eigenpair cand;
        cand.value = small.eigenvalues()[pick];
        cand.vector = (v.leftCols(used) * small.eigenvectors().col(pick)).normalized();
        cand.residual = (m.apply(cand.vector) - cand.value * cand.vector).norm();
        if (cand.residual < best.residual)
            best = cand;
        if (best.residual <= tol * std::max(1.0, std::abs(best.value)))
            return best;
        start = cand.vector;
    }
    if (m.n <= 2 * dense_limit)
        return fallback();
    throw Error(ErrorKind::no_convergence, "Arnoldi did not resolve the requested eigenvalue");
}

} // namespace

std::vector<Complex> dense_eigenvalues(const Eigen::MatrixXcd& a)
{
    std::vector<Complex> values;
    zgeev(a, values, nullptr);
    sort_by_modulus(values);
    return values;
}

std::vector<Complex> spectrum_topk(const OperatorMatrix& m, std::size_t k)
{
    if (k > m.n)
        throw Error(ErrorKind::parameter, "spectrum_topk: k exceeds the matrix size");
    if (k == 0)
        return {};
    if (m.n <= dense_limit) {
        auto values = dense_eigenvalues(m.dense());
        values.resize(k);
        return values;
    }
    return subspace_topk(m, k);
}

Eigenpair eigenpair_nearest(const OperatorMatrix& m, Complex target, std::size_t krylov, double tol)
{
    return arnoldi_pick(m, krylov, tol, [target](Complex a, Complex b) { return std::abs(a - target) < std::abs(b - target); },
                        [&] { return dense_nearest(m, target); });
}

double spectral_radius(const OperatorMatrix& m, double tol)
{
    if (m.n <= 256)
        return std::abs(dense_eigenvalues(m.dense()).front());
    const auto pair = arnoldi_pick(m, 60, tol, [](Complex a, Complex b) { return std::abs(a) > std::abs(b); },
                                   [&] { return Eigenpair{spectrum_topk(m, 1).front(), {}, 0.0}; });
    return std::abs(pair.value);
}

} // namespace semiflow
