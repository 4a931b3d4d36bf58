#include "semipert/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace semipert {

namespace {

constexpr double kRescaleAbove = 1e250;

// Starting order for the backward sweep. The first term keeps the recurrence
// converged for the requested orders; the second keeps the normalization tail
// below double precision (e^{-x} I_k(x) ~ exp(-k^2 / 2x) for k < x).
int miller_start(int n_max, double x) {
    const double by_order = n_max + std::ceil(10.0 + 2.0 * std::sqrt(n_max * x));
    const double by_tail = std::ceil(20.0 + 9.0 * std::sqrt(x));
    return static_cast<int>(std::max({by_order, by_tail, n_max + 1.0}));
}

std::complex<double> int_power(std::complex<double> base, Site n) {
    std::complex<double> result{1.0, 0.0};
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

}  // namespace

ScaledBesselTable scaled_bessel_table(int n_max, double x) {
    if (n_max < 0) throw InvalidArgument("scaled_bessel_table: n_max must be >= 0");
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("scaled_bessel_table: x must be finite and >= 0");

    ScaledBesselTable table{x, std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0)};
    if (x == 0.0) {
        table.values[0] = 1.0;
        return table;
    }

    const int start = miller_start(n_max, x);
    const double two_over_x = 2.0 / x;
    double above = 0.0;  // I_{k+1}
    double here = 1e-30;  // I_k, arbitrary seed
    double sum = 0.0;     // I_0 + 2 sum I_k over swept orders
    for (int k = start; k >= 1; --k) {
        if (k <= n_max) table.values[static_cast<std::size_t>(k)] = here;
        sum += 2.0 * here;
        const double below = k * two_over_x * here + above;
        above = here;
        here = below;
        if (here > kRescaleAbove) {
            here /= kRescaleAbove;
            above /= kRescaleAbove;
            sum /= kRescaleAbove;
            for (int j = k; j <= n_max; ++j) table.values[static_cast<std::size_t>(j)] /= kRescaleAbove;
        }
    }
    table.values[0] = here;
    sum += here;
    for (double& v : table.values) v /= sum;
    return table;
}

double scaled_bessel_i(int n, double x) {
    n = std::abs(n);
    return scaled_bessel_table(n, x).values[static_cast<std::size_t>(n)];
}

double g0(Site x, Site y, double t) {
    static const HomogeneousWalk unit{};
    return unit.green(x, y, t);
}

std::complex<double> g0_laplace(Site x, Site y, std::complex<double> s) {
    static const HomogeneousWalk unit{};
    return unit.laplace(x, y, s);
}

HomogeneousWalk::HomogeneousWalk(Rates rates) : rates_(rates) {
    if (!(rates.lambda > 0.0) || !(rates.mu > 0.0) || !std::isfinite(rates.lambda) || !std::isfinite(rates.mu)) {
        throw InvalidArgument("HomogeneousWalk: background rates must be finite and strictly positive");
    }
    const double d = std::sqrt(rates.lambda) - std::sqrt(rates.mu);
    drift_decay_ = d * d;
    scale_ = 2.0 * std::sqrt(rates.lambda * rates.mu);
}

double HomogeneousWalk::bias(Site x, Site y) const {
    if (rates_.lambda == rates_.mu) return 1.0;
    return std::pow(rates_.lambda / rates_.mu, 0.5 * static_cast<double>(y - x));
}

double HomogeneousWalk::green(Site x, Site y, double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("green: t must be >= 0");
    const Site n = std::abs(y - x);
    const double decay = drift_decay_ == 0.0 ? 1.0 : std::exp(-drift_decay_ * t);
    return decay * bias(x, y) * scaled_bessel_i(static_cast<int>(n), scale_ * t);
}

std::vector<double> HomogeneousWalk::path(Site x, Site y, const TimeGrid& grid) const {
    std::vector<double> out(grid.nodes());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = green(x, y, grid.at(k));
    return out;
}

std::pair<double, double> HomogeneousWalk::branch_cut() const {
    const double sum = rates_.lambda + rates_.mu;
    return {-sum - scale_, -sum + scale_};
}

std::complex<double> HomogeneousWalk::laplace(Site x, Site y, std::complex<double> s) const {
    if (!(s.real() > 0.0)) {
        throw InvalidArgument("laplace: Re s must be > 0 (outside the abscissa of convergence)");
    }
    return laplace_continued(x, y, s);
}

std::complex<double> HomogeneousWalk::laplace_continued(Site x, Site y, std::complex<double> s) const {
    const auto [cut_lo, cut_hi] = branch_cut();
    if (s.imag() == 0.0 && s.real() >= cut_lo && s.real() <= cut_hi) {
        throw InvalidArgument("laplace_continued: s lies on the branch cut");
    }
    const std::complex<double> p = s + (rates_.lambda + rates_.mu);
    // Product of principal roots: cut only on p in [-scale, scale], Re w > 0 for Re s > 0.
    const std::complex<double> w = std::sqrt(p - scale_) * std::sqrt(p + scale_);
    // (p - w)/scale written without cancellation.
    const std::complex<double> ratio = scale_ / (p + w);
    return bias(x, y) * int_power(ratio, std::abs(y - x)) / w;
}

}  // namespace semipert
