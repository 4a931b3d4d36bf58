#include "semipert/laplace.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>

namespace semipert {

namespace {

constexpr double kSingularRcond = 1e-13;

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::vector<double> stehfest_weights(int m) {
    const int half = m / 2;
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    for (int k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            acc += std::pow(j, half) * factorial(2 * j) /
                   (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
        }
        v[static_cast<std::size_t>(k)] = ((k + half) % 2 == 0 ? 1.0 : -1.0) * acc;
    }
    return v;
}

}  // namespace

void InversionScheme::validate() const {
    switch (method) {
        case InversionMethod::talbot:
            if (nodes < 8) throw InvalidArgument("Talbot inversion needs at least 8 nodes");
            break;
        case InversionMethod::gaver_stehfest:
            if (nodes < 2 || nodes % 2 != 0 || nodes > 18) {
                throw InvalidArgument("Gaver-Stehfest inversion needs an even node count in [2, 18]");
            }
            break;
    }
}

LaplaceSystem::LaplaceSystem(const HomogeneousWalk& base, const Perturbation& d, Complex s)
    : base_(base), d_(d), s_(s) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw InvalidArgument("LaplaceSystem: s must be finite");
    const auto& support = d.xi1();
    const auto m = static_cast<Eigen::Index>(support.size());
    if (m == 0) return;
    Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (const auto& [eta, value] : d.column(support[static_cast<std::size_t>(j)])) {
            for (Eigen::Index i = 0; i < m; ++i) {
                system(i, j) -= base.laplace_continued(support[static_cast<std::size_t>(i)], eta, s) * value;
            }
        }
    }
    lu_.compute(system);
    const double rcond = lu_.rcond();
    if (!(rcond > kSingularRcond)) {
        throw NumericalError("Laplace system singular at s = (" + std::to_string(s.real()) + ", " +
                             std::to_string(s.imag()) + ")");
    }
}

std::vector<Complex> LaplaceSystem::restricted(Site y) const {
    const auto& support = d_.xi1();
    const auto m = static_cast<Eigen::Index>(support.size());
    if (m == 0) return {};
    Eigen::VectorXcd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) rhs(i) = base_.laplace_continued(support[static_cast<std::size_t>(i)], y, s_);
    Eigen::VectorXcd u = lu_.solve(rhs);
    return {u.data(), u.data() + m};
}

Complex LaplaceSystem::evaluate(Site x, Site y, std::span<const Complex> restricted) const {
    const auto& support = d_.xi1();
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] == x) return restricted[i];
    }
    Complex value = base_.laplace_continued(x, y, s_);
    for (std::size_t j = 0; j < support.size(); ++j) {
        Complex f{0.0, 0.0};
        for (const auto& [eta, dv] : d_.column(support[j])) f += base_.laplace_continued(x, eta, s_) * dv;
        value += f * restricted[j];
    }
    return value;
}

LaplaceSolution laplace_solve(const HomogeneousWalk& base, const Perturbation& d, Site y, Complex s) {
    if (!(s.real() > 0.0)) throw InvalidArgument("laplace_solve: Re s must be > 0");
    auto system = std::make_shared<LaplaceSystem>(base, d, s);
    auto values = system->restricted(y);
    LaplaceSolution out{s, d.xi1(), values, {}};
    out.at = [system, values, y](Site x) { return system->evaluate(x, y, values); };
    return out;
}

std::vector<InversionNode> inversion_nodes(double t, const InversionScheme& scheme) {
    scheme.validate();
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("inversion: t must be finite and > 0");
    const int m = scheme.nodes;
    std::vector<InversionNode> nodes;
    if (scheme.method == InversionMethod::talbot) {
        // Fixed Talbot contour s(theta) = r theta (cot theta + i), r = 2M / 5t.
        const double r = 2.0 * m / (5.0 * t);
        nodes.push_back({Complex{r, 0.0}, Complex{0.5 * (r / m) * std::exp(r * t), 0.0}});
        for (int k = 1; k < m; ++k) {
            const double theta = k * std::numbers::pi / m;
            const double cot = std::cos(theta) / std::sin(theta);
            const Complex s{r * theta * cot, r * theta};
            const double sigma = theta + (theta * cot - 1.0) * cot;
            nodes.push_back({s, (r / m) * std::exp(s * t) * Complex{1.0, sigma}});
        }
    } else {
        const double ln2_t = std::numbers::ln2 / t;
        const auto v = stehfest_weights(m);
        for (int k = 1; k <= m; ++k) {
            nodes.push_back({Complex{k * ln2_t, 0.0}, Complex{ln2_t * v[static_cast<std::size_t>(k)], 0.0}});
        }
    }
    return nodes;
}

double invert(const std::function<Complex(Complex)>& fhat, double t, const InversionScheme& scheme) {
    double acc = 0.0;
    for (const auto& node : inversion_nodes(t, scheme)) {
        const Complex f = fhat(node.s);
        if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) {
            throw NumericalError("inversion: transform not finite at a contour node");
        }
        acc += (node.weight * f).real();
    }
    if (!std::isfinite(acc)) throw NumericalError("inversion: non-finite result");
    return acc;
}

namespace {

// A singular node (an isolated eigenvalue on the contour) is nudged off.
LaplaceSystem system_near(const HomogeneousWalk& base, const Perturbation& d, Complex s) {
    try {
        return LaplaceSystem(base, d, s);
    } catch (const NumericalError&) {
        return LaplaceSystem(base, d, s * Complex{1.0, 1e-8});
    }
}

}  // namespace

double greens_exact(const HomogeneousWalk& base, const Perturbation& d, Site x, Site y, double t,
                    const InversionScheme& scheme) {
    const SitePair pair{x, y};
    const double time = t;
    return greens_exact(base, d, std::span(&pair, 1), std::span(&time, 1), scheme)[0][0];
}

std::vector<std::vector<double>> greens_exact(const HomogeneousWalk& base, const Perturbation& d,
                                              std::span<const SitePair> pairs, std::span<const double> times,
                                              const InversionScheme& scheme) {
    std::vector<std::vector<double>> out(pairs.size(), std::vector<double>(times.size(), 0.0));
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        for (const auto& node : inversion_nodes(times[ti], scheme)) {
            const LaplaceSystem system = system_near(base, d, node.s);
            std::map<Site, std::vector<Complex>> columns;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                auto it = columns.find(pairs[p].y);
                if (it == columns.end()) it = columns.emplace(pairs[p].y, system.restricted(pairs[p].y)).first;
                const Complex f = system.evaluate(pairs[p].x, pairs[p].y, it->second);
                if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) {
                    throw NumericalError("greens_exact: transform not finite at a contour node");
                }
                out[p][ti] += (node.weight * f).real();
            }
        }
    }
    return out;
}

HomogeneousWalk walk_of(const CoordOperator& a0) {
    if (!a0.band() || !a0.overrides().empty()) {
        throw InvalidArgument("reference operator must be a translation-invariant walk generator");
    }
    const Band& b = *a0.band();
    if (b.diag != -(b.lower + b.upper)) throw InvalidArgument("reference operator rows must sum to zero");
    return HomogeneousWalk(Rates{b.upper, b.lower});
}

ResolventResidual resolvent_check(const CoordOperator& a0, const Perturbation& d, double lambda, const L1Vector& q,
                                  Site radius) {
    if (!(lambda > 0.0)) throw InvalidArgument("resolvent_check: lambda must be > 0");
    if (radius < 0) throw InvalidArgument("resolvent_check: radius must be >= 0");
    const HomogeneousWalk base = walk_of(a0);
    ResolventResidual out;
    const auto window = q.support_window();
    if (!window) return out;

    const Complex s{lambda, 0.0};
    const LaplaceSystem system(base, d, s);
    std::map<Site, std::vector<Complex>> columns;
    for (const auto& [y, qy] : q.values()) columns.emplace(y, system.restricted(y));

    // (D R1 q)(eta) for eta in xi2, from R1 q restricted to xi1.
    const auto& support = d.xi1();
    std::map<Site, Complex> r1q_support;
    for (std::size_t i = 0; i < support.size(); ++i) {
        Complex acc{0.0, 0.0};
        for (const auto& [y, qy] : q.values()) acc += columns.at(y)[i] * qy;
        r1q_support[support[i]] = acc;
    }
    std::map<Site, Complex> d_r1q;
    for (Site eta : d.xi2()) {
        Complex acc{0.0, 0.0};
        for (const auto& [xi, dv] : d.row(eta)) acc += dv * r1q_support.at(xi);
        d_r1q[eta] = acc;
    }

    std::map<Site, double> lhs;
    std::map<Site, double> rhs;
    for (Site x = window->first - radius; x <= window->second + radius; ++x) {
        Complex left{0.0, 0.0};
        Complex right{0.0, 0.0};
        for (const auto& [y, qy] : q.values()) {
            left += system.evaluate(x, y, columns.at(y)) * qy;
            right += base.laplace(x, y, s) * qy;
        }
        for (const auto& [eta, v] : d_r1q) right += base.laplace(x, eta, s) * v;
        lhs[x] = left.real();
        rhs[x] = right.real();
        out.residual += std::abs(left - right);
    }
    out.lhs = L1Vector(std::move(lhs));
    out.rhs = L1Vector(std::move(rhs));
    return out;
}

}  // namespace semipert
