#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "semiflow/error.hpp"
#include "semiflow/numeric.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/quadrature.hpp"

namespace semiflow {

namespace {

std::atomic<unsigned> configured_threads{0};

GaussLegendre build_rule(int n)
{
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

} // namespace

void set_thread_count(unsigned n)
{
    configured_threads.store(n);
}

unsigned thread_count()
{
    const unsigned n = configured_threads.load();
    if (n != 0)
        return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

const GaussLegendre& gauss_legendre(int n)
{
    if (n < 1 || n > 512)
        throw Error(ErrorKind::parameter, "Gauss-Legendre order must lie in 1..512");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        if (n == 1)
            slot = std::make_unique<GaussLegendre>(GaussLegendre{{0.0}, {2.0}});
        else
            slot = std::make_unique<GaussLegendre>(build_rule(n));
    }
    return *slot;
}

} // namespace semiflow
