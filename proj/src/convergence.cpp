#include "semipert/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "semipert/bessel.hpp"
#include "semipert/oracle.hpp"

namespace semipert {

namespace {

CoordOperator background_generator(const RateField& rates) {
    return build_walk_generator(RateField(rates.background()));
}

Perturbation from_background(const RateField& rates, Site n) {
    return perturbation_from(build_walk_generator(truncated_rates(rates, n)), background_generator(rates));
}

// sup over s <= t of max_y sum_x G(x, y, s): one forward evolution of the
// all-ones row vector gives every column sum at once.
double column_norm_sup(const RateField& rates, const TimeGrid& grid, Site window, Site margin, double tol) {
    const TruncatedSystem sys(build_walk_generator(rates), window + margin);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sys.size()));
    double best = 0.0;
    for (const auto& state : evolve_path(sys, ones, grid, tol, Direction::forward)) {
        for (Site y = -window; y <= window; ++y) {
            best = std::max(best, state(static_cast<Eigen::Index>(sys.index(y))));
        }
    }
    return best;
}

}  // namespace

RateField truncated_rates(const RateField& rates, Site n) {
    if (n < 0) throw InvalidArgument("truncated_rates: radius must be >= 0");
    std::map<Site, Rates> kept;
    for (const auto& [site, r] : rates.defects()) {
        if (std::abs(site) <= n) kept.emplace(site, r);
    }
    return RateField(rates.background(), std::move(kept));
}

double bn_norm(const RateField& rates, Site n) {
    const Perturbation b =
        perturbation_from(build_walk_generator(truncated_rates(rates, n)), build_walk_generator(rates));
    return operator_norm(b.as_operator());
}

ConvergenceReport convergence_study(const RateField& rates, const L1Vector& q0, const TimeGrid& grid,
                                    std::span<const Site> radii, const StudyOptions& options) {
    if (!std::is_sorted(radii.begin(), radii.end())) throw InvalidArgument("convergence_study: radii must be ascending");
    const auto support = q0.support_window();
    if (!support) throw InvalidArgument("convergence_study: q0 must be nonzero");
    const double t = grid.horizon();
    const Site q_reach = std::max(std::abs(support->first), std::abs(support->second));
    const Site window = options.window > 0
                            ? options.window
                            : q_reach + rates.defect_radius() + static_cast<Site>(std::ceil(4.0 * t + 20.0));
    const Site margin = static_cast<Site>(std::ceil(4.0 * t + 20.0));
    const double q_norm = q0.norm1();

    ConvergenceReport report;
    report.grid = grid;
    report.window = window;

    // Limit semigroup applied to q, from the oracle.
    const CoordOperator a = build_walk_generator(rates);
    const TruncatedSystem sys(a, window + margin);
    const auto limit = evolve_path(sys, sys.embed(q0), grid, options.oracle_tol, Direction::backward);
    auto window_l1 = [&](const Eigen::VectorXd& v) {
        double acc = 0.0;
        for (Site x = -window; x <= window; ++x) acc += std::abs(v(static_cast<Eigen::Index>(sys.index(x))));
        return acc;
    };
    for (const auto& g : limit) report.w_measured = std::max(report.w_measured, window_l1(g) / q_norm);
    report.w_operator = column_norm_sup(rates, grid, window, margin, options.oracle_tol);

    const HomogeneousWalk background(rates.background());
    std::vector<SitePair> targets;
    for (Site x = -window; x <= window; ++x) {
        for (const auto& [y, qy] : q0.values()) targets.push_back({x, y});
    }

    for (Site n : radii) {
        ConvergenceRow row;
        row.radius = n;
        const RateField rates_n = truncated_rates(rates, n);
        const Perturbation b_n = perturbation_from(build_walk_generator(rates_n), a);
        row.bn_norm = operator_norm(b_n.as_operator());

        const GreenPath path = solve_backward(background, from_background(rates, n), targets, grid);
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            double diff = 0.0;
            double size = 0.0;
            std::size_t idx = 0;
            for (Site x = -window; x <= window; ++x) {
                double value = 0.0;
                for (const auto& [y, qy] : q0.values()) value += path.values[idx++][k] * qy;
                diff += std::abs(value - limit[k](static_cast<Eigen::Index>(sys.index(x))));
                size += std::abs(value);
            }
            row.error = std::max(row.error, diff);
            row.wn_measured = std::max(row.wn_measured, size / q_norm);
        }

        std::vector<double> defect(grid.nodes());
        for (std::size_t k = 0; k < grid.nodes(); ++k) defect[k] = apply(b_n.as_operator(), sys.extract(limit[k])).norm1();
        for (std::size_t k = 1; k < grid.nodes(); ++k) row.defect_integral += 0.5 * grid.step * (defect[k - 1] + defect[k]);

        row.wn_operator = column_norm_sup(rates_n, grid, window, margin, options.oracle_tol);
        row.bound = row.wn_measured * row.defect_integral;
        row.bound_operator = row.wn_operator * row.defect_integral;
        row.gronwall = gronwall_bound(row.bn_norm, report.w_operator, t);
        report.rows.push_back(row);
    }
    return report;
}

std::vector<GreenPath> incremental_paths(const RateField& rates, std::span<const Site> radii,
                                         std::span<const SitePair> targets, const TimeGrid& grid) {
    std::shared_ptr<const ReferenceGreen> current = std::make_shared<HomogeneousWalk>(rates.background());
    CoordOperator previous = background_generator(rates);
    std::vector<GreenPath> out;
    for (Site n : radii) {
        const CoordOperator a_n = build_walk_generator(truncated_rates(rates, n));
        current = std::make_shared<PerturbedGreen>(current, perturbation_from(a_n, previous), grid);
        previous = a_n;
        GreenPath path{{targets.begin(), targets.end()}, grid, {}};
        for (const auto& p : targets) path.values.push_back(current->path(p.x, p.y, grid));
        out.push_back(std::move(path));
    }
    return out;
}

std::vector<GreenPath> direct_paths(const RateField& rates, std::span<const Site> radii,
                                    std::span<const SitePair> targets, const TimeGrid& grid) {
    const HomogeneousWalk background(rates.background());
    std::vector<GreenPath> out;
    for (Site n : radii) out.push_back(solve_backward(background, from_background(rates, n), targets, grid));
    return out;
}

}  // namespace semipert
