#include "semipert/oracle.hpp"

#include <cmath>
#include <string>

namespace semipert {

namespace {

constexpr std::size_t kMaxSteps = std::size_t{1} << 24;

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void rk4_step(const SparseRows& a, Eigen::VectorXd& q, double dt, Eigen::VectorXd& k1, Eigen::VectorXd& k2,
              Eigen::VectorXd& k3, Eigen::VectorXd& k4) {
    k1.noalias() = a * q;
    k2.noalias() = a * (q + 0.5 * dt * k1);
    k3.noalias() = a * (q + 0.5 * dt * k2);
    k4.noalias() = a * (q + dt * k3);
    q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<Eigen::VectorXd> path_fixed(const TruncatedSystem& sys, const Eigen::VectorXd& q0, const TimeGrid& grid,
                                        std::size_t substeps, Direction dir) {
    const SparseRows& a = sys.matrix(dir);
    const double dt = grid.step / static_cast<double>(substeps);
    Eigen::VectorXd k1(q0.size()), k2(q0.size()), k3(q0.size()), k4(q0.size());
    std::vector<Eigen::VectorXd> out;
    out.reserve(grid.nodes());
    Eigen::VectorXd q = q0;
    out.push_back(q);
    for (std::size_t k = 1; k < grid.nodes(); ++k) {
        for (std::size_t s = 0; s < substeps; ++s) rk4_step(a, q, dt, k1, k2, k3, k4);
        if (!q.allFinite()) throw NumericalError("oracle: integration produced non-finite values");
        out.push_back(q);
    }
    return out;
}

std::size_t initial_steps(double span, double norm) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span * norm)));
}

}  // namespace

TruncatedSystem::TruncatedSystem(const CoordOperator& a, Site radius) : radius_(radius) {
    if (radius < 1) throw InvalidArgument("truncate: window radius must be >= 1");
    const auto n = static_cast<Eigen::Index>(size());
    std::vector<Eigen::Triplet<double>> triplets;
    for (Site x = -radius; x <= radius; ++x) {
        for (const auto& [y, v] : a.row(x)) {
            if (contains(y)) {
                triplets.emplace_back(static_cast<Eigen::Index>(index(x)), static_cast<Eigen::Index>(index(y)), v);
            }
        }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    transposed_ = matrix_.transpose();
}

std::size_t TruncatedSystem::index(Site x) const {
    if (!contains(x)) throw InvalidArgument("site " + std::to_string(x) + " outside the truncation window");
    return static_cast<std::size_t>(x + radius_);
}

double TruncatedSystem::entry(Site x, Site y) const {
    if (!contains(x) || !contains(y)) return 0.0;
    return matrix_.coeff(static_cast<Eigen::Index>(index(x)), static_cast<Eigen::Index>(index(y)));
}

double TruncatedSystem::norm() const {
    double best = 0.0;
    for (Eigen::Index j = 0; j < transposed_.outerSize(); ++j) {
        double col = 0.0;
        for (SparseRows::InnerIterator it(transposed_, j); it; ++it) col += std::abs(it.value());
        best = std::max(best, col);
    }
    return best;
}

Eigen::VectorXd TruncatedSystem::embed(const L1Vector& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (const auto& [x, value] : v.values()) out(static_cast<Eigen::Index>(index(x))) = value;
    return out;
}

L1Vector TruncatedSystem::extract(const Eigen::VectorXd& v) const {
    std::map<Site, double> values;
    for (Eigen::Index i = 0; i < v.size(); ++i) values[site(static_cast<std::size_t>(i))] = v(i);
    return L1Vector(std::move(values));
}

TruncatedSystem truncate(const CoordOperator& a, Site radius) { return TruncatedSystem(a, radius); }

Eigen::VectorXd evolve_fixed(const TruncatedSystem& sys, const Eigen::VectorXd& q0, double t, std::size_t steps,
                             Direction dir) {
    if (!(t >= 0.0)) throw InvalidArgument("evolve: t must be >= 0");
    if (t == 0.0) return q0;
    return path_fixed(sys, q0, TimeGrid(t, 1), steps, dir).back();
}

Eigen::VectorXd evolve(const TruncatedSystem& sys, const Eigen::VectorXd& q0, double t, double tol, Direction dir) {
    if (!(t >= 0.0)) throw InvalidArgument("evolve: t must be >= 0");
    if (!(tol > 0.0)) throw InvalidArgument("evolve: tol must be > 0");
    if (static_cast<std::size_t>(q0.size()) != sys.size()) throw InvalidArgument("evolve: state size mismatch");
    if (t == 0.0) return q0;
    return evolve_path(sys, q0, TimeGrid(t, 1), tol, dir).back();
}

std::vector<Eigen::VectorXd> evolve_path(const TruncatedSystem& sys, const Eigen::VectorXd& q0, const TimeGrid& grid,
                                         double tol, Direction dir) {
    if (!(tol > 0.0)) throw InvalidArgument("evolve: tol must be > 0");
    if (static_cast<std::size_t>(q0.size()) != sys.size()) throw InvalidArgument("evolve: state size mismatch");
    std::size_t substeps = initial_steps(grid.step, sys.norm());
    auto coarse = path_fixed(sys, q0, grid, substeps, dir);
    while (substeps <= kMaxSteps / grid.steps) {
        substeps *= 2;
        auto fine = path_fixed(sys, q0, grid, substeps, dir);
        double change = 0.0;
        for (std::size_t k = 0; k < fine.size(); ++k) change = std::max(change, (fine[k] - coarse[k]).lpNorm<1>());
        if (change < tol) return fine;
        coarse = std::move(fine);
    }
    throw NumericalError("oracle: step control did not reach tol " + std::to_string(tol));
}

OracleValue oracle_green(const RateField& rates, Site x, Site y, double t, Site radius, double tol, Direction read) {
    if (!(t >= 0.0)) throw InvalidArgument("oracle_green: t must be >= 0");
    if (2 * std::abs(x) > radius || 2 * std::abs(y) > radius) {
        throw InvalidArgument("oracle_green: sites must satisfy |x|, |y| <= N/2");
    }
    const TruncatedSystem sys(build_walk_generator(rates), radius);
    OracleValue out;
    const Eigen::VectorXd row = evolve(sys, sys.embed(L1Vector::delta(x)), t, tol, Direction::forward);
    out.leak = std::max(0.0, 1.0 - row.sum());
    out.leak_warning = out.leak > tol;
    if (read == Direction::forward) {
        out.value = row(static_cast<Eigen::Index>(sys.index(y)));
    } else {
        const Eigen::VectorXd column = evolve(sys, sys.embed(L1Vector::delta(y)), t, tol, Direction::backward);
        out.value = column(static_cast<Eigen::Index>(sys.index(x)));
    }
    return out;
}

}  // namespace semipert
