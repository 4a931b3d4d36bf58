#include "semipert/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace semipert {

namespace {

constexpr double kSingularRcond = 1e-12;

std::vector<Eigen::MatrixXd> sample_F(PathCache& cache, const Perturbation& d, std::span<const Site> rows) {
    const auto& cols = d.xi1();
    const TimeGrid& grid = cache.grid();
    std::vector<Eigen::MatrixXd> samples(grid.nodes(),
                                         Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                                               static_cast<Eigen::Index>(cols.size())));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (const auto& [eta, value] : d.column(cols[j])) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& g = cache(rows[i], eta);
                for (std::size_t k = 0; k < grid.nodes(); ++k) {
                    samples[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += g[k] * value;
                }
            }
        }
    }
    return samples;
}

std::vector<Eigen::MatrixXd> sample_H(PathCache& cache, const Perturbation& d, std::span<const Site> cols) {
    const auto& rows = d.xi2();
    const TimeGrid& grid = cache.grid();
    std::vector<Eigen::MatrixXd> samples(grid.nodes(),
                                         Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                                               static_cast<Eigen::Index>(cols.size())));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [xi, value] : d.row(rows[i])) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const auto& g = cache(xi, cols[j]);
                for (std::size_t k = 0; k < grid.nodes(); ++k) {
                    samples[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += value * g[k];
                }
            }
        }
    }
    return samples;
}

Eigen::PartialPivLU<Eigen::MatrixXd> factor_implicit(const Eigen::MatrixXd& kernel0, double h) {
    const auto n = kernel0.rows();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - 0.5 * h * kernel0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond > kSingularRcond)) {
        throw NumericalError("implicit matrix Id - (h/2) D is singular (rcond " + std::to_string(rcond) +
                             "); reduce the time step h");
    }
    return lu;
}

std::ptrdiff_t position(const std::vector<Site>& sorted, Site s) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
    if (it == sorted.end() || *it != s) return -1;
    return it - sorted.begin();
}

std::vector<std::vector<double>> to_rows(const std::vector<Eigen::VectorXd>& by_time, std::size_t width) {
    std::vector<std::vector<double>> out(width, std::vector<double>(by_time.size()));
    for (std::size_t k = 0; k < by_time.size(); ++k) {
        for (std::size_t i = 0; i < width; ++i) out[i][k] = by_time[k](static_cast<Eigen::Index>(i));
    }
    return out;
}

std::vector<Eigen::VectorXd> to_columns(const std::vector<std::vector<double>>& rows, std::size_t nodes) {
    std::vector<Eigen::VectorXd> out(nodes, Eigen::VectorXd(static_cast<Eigen::Index>(rows.size())));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < nodes; ++k) out[k](static_cast<Eigen::Index>(i)) = rows[i][k];
    }
    return out;
}

// h * [ K_k u_0 / 2 + sum_{j=1}^{k-1} K_{k-j} u_j ]: the explicit part of the
// product trapezoid rule at node k.
Eigen::VectorXd history(const std::vector<Eigen::MatrixXd>& kernel, const std::vector<Eigen::VectorXd>& u,
                        std::size_t k, double h, bool transposed) {
    Eigen::VectorXd acc = transposed ? Eigen::VectorXd(0.5 * kernel[k].transpose() * u[0])
                                     : Eigen::VectorXd(0.5 * kernel[k] * u[0]);
    for (std::size_t j = 1; j < k; ++j) {
        if (transposed) {
            acc.noalias() += kernel[k - j].transpose() * u[j];
        } else {
            acc.noalias() += kernel[k - j] * u[j];
        }
    }
    return h * acc;
}

// Scalar product-trapezoid convolution h * [ a_k . u_0 / 2 + sum a_{k-j} . u_j + a_0 . u_k / 2 ].
double convolve_at(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& u, std::size_t k,
                   double h) {
    if (k == 0) return 0.0;
    double acc = 0.5 * a[k].dot(u[0]) + 0.5 * a[0].dot(u[k]);
    for (std::size_t j = 1; j < k; ++j) acc += a[k - j].dot(u[j]);
    return h * acc;
}

}  // namespace

TimeGrid::TimeGrid(double step_, std::size_t steps_) : step(step_), steps(steps_) {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("TimeGrid: step must be finite and > 0");
    if (steps == 0) throw InvalidArgument("TimeGrid: at least one step required");
}

TimeGrid TimeGrid::covering(double horizon, double step) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("TimeGrid: horizon must be > 0");
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("TimeGrid: step must be finite and > 0");
    const double ratio = horizon / step;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidArgument("TimeGrid: horizon must be an integer multiple of the step");
    }
    return TimeGrid(step, static_cast<std::size_t>(steps));
}

std::size_t TimeGrid::index_of(double t) const {
    const double ratio = t / step;
    const double k = std::round(ratio);
    if (k < 0.0 || k > static_cast<double>(steps) || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidArgument("time " + std::to_string(t) + " is not a node of the grid");
    }
    return static_cast<std::size_t>(k);
}

const std::vector<double>& GreenPath::at(SitePair pair) const {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i] == pair) return values[i];
    }
    throw InvalidArgument("GreenPath: pair not present");
}

const std::vector<double>& PathCache::operator()(Site x, Site y) {
    const SitePair key = green_->path_key(x, y);
    auto it = paths_.find(key);
    if (it == paths_.end()) it = paths_.emplace(key, green_->path(x, y, grid_)).first;
    return it->second;
}

KernelPath kernel_F(const ReferenceGreen& green0, const Perturbation& d, std::span<const Site> rows,
                    const TimeGrid& grid) {
    PathCache cache(green0, grid);
    return {std::vector<Site>(rows.begin(), rows.end()), d.xi1(), grid, sample_F(cache, d, rows)};
}

KernelPath kernel_H(const Perturbation& d, const ReferenceGreen& green0, std::span<const Site> cols,
                    const TimeGrid& grid) {
    PathCache cache(green0, grid);
    return {d.xi2(), std::vector<Site>(cols.begin(), cols.end()), grid, sample_H(cache, d, cols)};
}

// --- backward ---------------------------------------------------------------

BackwardSolver::BackwardSolver(const ReferenceGreen& green0, Perturbation d, TimeGrid grid)
    : d_(std::move(d)), grid_(grid), cache_(green0, grid) {
    if (d_.empty()) return;
    kernel_ = sample_F(cache_, d_, d_.xi1());
    implicit_ = factor_implicit(kernel_[0], grid_.step);
}

const std::vector<double>& BackwardSolver::reference(Site x, Site y) const {
    std::lock_guard lock(cache_mutex_);
    return cache_(x, y);
}

std::vector<Eigen::VectorXd> BackwardSolver::row_kernel(Site x) const {
    const auto& cols = d_.xi1();
    std::vector<Eigen::VectorXd> out(grid_.nodes(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols.size())));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (const auto& [eta, value] : d_.column(cols[j])) {
            const auto& g = reference(x, eta);
            for (std::size_t k = 0; k < grid_.nodes(); ++k) out[k](static_cast<Eigen::Index>(j)) += g[k] * value;
        }
    }
    return out;
}

std::vector<std::vector<double>> BackwardSolver::restricted(Site y) const {
    const auto& support = d_.xi1();
    const std::size_t m = support.size();
    const std::size_t nodes = grid_.nodes();
    std::vector<std::vector<double>> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = reference(support[i], y);
    if (m == 0) return g;

    auto u = to_columns(g, nodes);
    for (std::size_t k = 1; k < nodes; ++k) {
        Eigen::VectorXd rhs = u[k] + history(kernel_, u, k, grid_.step, false);
        u[k] = implicit_.solve(rhs);
        if (!u[k].allFinite()) throw NumericalError("backward solve produced non-finite values");
    }
    return to_rows(u, m);
}

std::vector<std::vector<double>> BackwardSolver::picard(Site y, int iterations) const {
    if (iterations < 0) throw InvalidArgument("picard: iteration count must be >= 0");
    const auto& support = d_.xi1();
    const std::size_t m = support.size();
    const std::size_t nodes = grid_.nodes();
    std::vector<std::vector<double>> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = reference(support[i], y);
    if (m == 0 || iterations == 0) return g;

    const auto base = to_columns(g, nodes);
    auto u = base;
    const double h = grid_.step;
    for (int it = 0; it < iterations; ++it) {
        std::vector<Eigen::VectorXd> next(nodes);
        next[0] = base[0];
        for (std::size_t k = 1; k < nodes; ++k) {
            next[k] = base[k] + history(kernel_, u, k, h, false) + 0.5 * h * kernel_[0] * u[k];
        }
        u = std::move(next);
    }
    return to_rows(u, m);
}

std::vector<double> BackwardSolver::extend(Site x, Site y, const std::vector<std::vector<double>>& restricted) const {
    const auto& support = d_.xi1();
    if (auto i = position(support, x); i >= 0) return restricted[static_cast<std::size_t>(i)];
    std::vector<double> out = reference(x, y);
    if (support.empty()) return out;
    const auto fx = row_kernel(x);
    const auto u = to_columns(restricted, grid_.nodes());
    for (std::size_t k = 1; k < out.size(); ++k) out[k] += convolve_at(fx, u, k, grid_.step);
    return out;
}

// --- forward ----------------------------------------------------------------

ForwardSolver::ForwardSolver(const ReferenceGreen& green0, Perturbation d, TimeGrid grid)
    : d_(std::move(d)), grid_(grid), cache_(green0, grid) {
    if (d_.empty()) return;
    kernel_ = sample_H(cache_, d_, d_.xi2());
    implicit_ = factor_implicit(kernel_[0].transpose(), grid_.step);
}

const std::vector<double>& ForwardSolver::reference(Site x, Site y) const {
    std::lock_guard lock(cache_mutex_);
    return cache_(x, y);
}

std::vector<std::vector<double>> ForwardSolver::restricted(Site x) const {
    const auto& support = d_.xi2();
    const std::size_t m = support.size();
    const std::size_t nodes = grid_.nodes();
    std::vector<std::vector<double>> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = reference(x, support[i]);
    if (m == 0) return g;

    auto v = to_columns(g, nodes);
    for (std::size_t k = 1; k < nodes; ++k) {
        Eigen::VectorXd rhs = v[k] + history(kernel_, v, k, grid_.step, true);
        v[k] = implicit_.solve(rhs);
        if (!v[k].allFinite()) throw NumericalError("forward solve produced non-finite values");
    }
    return to_rows(v, m);
}

std::vector<double> ForwardSolver::extend(Site x, Site y, const std::vector<std::vector<double>>& restricted) const {
    const auto& support = d_.xi2();
    if (auto i = position(support, y); i >= 0) return restricted[static_cast<std::size_t>(i)];
    std::vector<double> out = reference(x, y);
    if (support.empty()) return out;
    std::vector<Eigen::VectorXd> hy(grid_.nodes(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size())));
    for (std::size_t i = 0; i < support.size(); ++i) {
        for (const auto& [xi, value] : d_.row(support[i])) {
            const auto& g = reference(xi, y);
            for (std::size_t k = 0; k < grid_.nodes(); ++k) hy[k](static_cast<Eigen::Index>(i)) += value * g[k];
        }
    }
    const auto v = to_columns(restricted, grid_.nodes());
    for (std::size_t k = 1; k < out.size(); ++k) out[k] += convolve_at(hy, v, k, grid_.step);
    return out;
}

// --- drivers ----------------------------------------------------------------

namespace {

GreenPath reference_only(const ReferenceGreen& green0, std::span<const SitePair> targets, const TimeGrid& grid) {
    PathCache cache(green0, grid);
    GreenPath out{{targets.begin(), targets.end()}, grid, {}};
    for (const auto& p : targets) out.values.push_back(cache(p.x, p.y));
    return out;
}

}  // namespace

GreenPath solve_backward(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                         const TimeGrid& grid) {
    if (d.empty()) return reference_only(green0, targets, grid);
    BackwardSolver solver(green0, d, grid);
    std::map<Site, std::vector<std::vector<double>>> columns;
    GreenPath out{{targets.begin(), targets.end()}, grid, {}};
    for (const auto& p : targets) {
        auto it = columns.find(p.y);
        if (it == columns.end()) it = columns.emplace(p.y, solver.restricted(p.y)).first;
        out.values.push_back(solver.extend(p.x, p.y, it->second));
    }
    return out;
}

GreenPath solve_forward(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                        const TimeGrid& grid) {
    if (d.empty()) return reference_only(green0, targets, grid);
    ForwardSolver solver(green0, d, grid);
    std::map<Site, std::vector<std::vector<double>>> rows;
    GreenPath out{{targets.begin(), targets.end()}, grid, {}};
    for (const auto& p : targets) {
        auto it = rows.find(p.x);
        if (it == rows.end()) it = rows.emplace(p.x, solver.restricted(p.x)).first;
        out.values.push_back(solver.extend(p.x, p.y, it->second));
    }
    return out;
}

GreenPath picard_iterate(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                         const TimeGrid& grid, int iterations) {
    if (iterations < 0) throw InvalidArgument("picard_iterate: iteration count must be >= 0");
    if (d.empty() || iterations == 0) return reference_only(green0, targets, grid);
    BackwardSolver solver(green0, d, grid);
    GreenPath out{{targets.begin(), targets.end()}, grid, {}};
    const auto& support = d.xi1();
    for (const auto& p : targets) {
        if (auto i = position(support, p.x); i >= 0) {
            out.values.push_back(solver.picard(p.y, iterations)[static_cast<std::size_t>(i)]);
        } else {
            // Off the support the m-th iterate is G + F * (iterate m-1 on xi1).
            out.values.push_back(solver.extend(p.x, p.y, solver.picard(p.y, iterations - 1)));
        }
    }
    return out;
}

GronwallBound gronwall_bound(double norm_b, double w, double t) {
    if (!(norm_b >= 0.0) || !(w >= 0.0) || !(t >= 0.0)) {
        throw InvalidArgument("gronwall_bound: inputs must be >= 0");
    }
    return {w * std::exp(norm_b * w), w * std::exp(norm_b * w * t)};
}

PerturbedGreen::PerturbedGreen(std::shared_ptr<const ReferenceGreen> base, Perturbation d, TimeGrid grid)
    : base_(std::move(base)), solver_(*base_, std::move(d), grid) {}

std::vector<double> PerturbedGreen::path(Site x, Site y, const TimeGrid& grid) const {
    if (!(grid == solver_.grid())) throw InvalidArgument("PerturbedGreen: requested grid differs from the solve grid");
    {
        std::lock_guard lock(mutex_);
        if (auto it = columns_.find(y); it != columns_.end()) return solver_.extend(x, y, it->second);
    }
    auto column = solver_.restricted(y);
    std::lock_guard lock(mutex_);
    auto it = columns_.emplace(y, std::move(column)).first;
    return solver_.extend(x, y, it->second);
}

}  // namespace semipert
