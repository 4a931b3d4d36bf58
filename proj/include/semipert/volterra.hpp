#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semipert/coord_ops.hpp"
#include "semipert/green.hpp"

namespace semipert {

/// Matrix-valued convolution kernel sampled on a time grid.
///
/// samples[k](i, j) is the kernel at (rows[i], cols[j], t_k). For F the
/// columns are xi1; for H the rows are xi2.
struct KernelPath {
    std::vector<Site> rows;
    std::vector<Site> cols;
    TimeGrid grid;
    std::vector<Eigen::MatrixXd> samples;
};

/// G'(x, y, t_k) for a list of site pairs.
struct GreenPath {
    std::vector<SitePair> pairs;
    TimeGrid grid;
    std::vector<std::vector<double>> values;  // values[pair index][k]

    const std::vector<double>& at(SitePair pair) const;
};

/// Caches reference paths on one grid, keyed by ReferenceGreen::path_key.
class PathCache {
public:
    PathCache(const ReferenceGreen& green, TimeGrid grid) : green_(&green), grid_(grid) {}

    const std::vector<double>& operator()(Site x, Site y);
    const TimeGrid& grid() const { return grid_; }

private:
    const ReferenceGreen* green_;
    TimeGrid grid_;
    std::map<SitePair, std::vector<double>> paths_;
};

/// F(x, y, t) = sum_eta G(x, eta, t) D(eta, y) on rows x cols = xi1(D).
KernelPath kernel_F(const ReferenceGreen& green0, const Perturbation& d, std::span<const Site> rows,
                    const TimeGrid& grid);

/// H(x, y, t) = sum_xi D(x, xi) G(xi, y, t) on rows = xi2(D) x cols.
KernelPath kernel_H(const Perturbation& d, const ReferenceGreen& green0, std::span<const Site> cols,
                    const TimeGrid& grid);

/// Product-trapezoid solver for G' = G + F * G', restricted to xi1.
///
/// The implicit matrix Id - (h/2) F(0) is factorized once. Columns (fixed y)
/// are independent; each restricted solution is extended to arbitrary rows x
/// by one more convolution with F(x, xi1, .).
class BackwardSolver {
public:
    BackwardSolver(const ReferenceGreen& green0, Perturbation d, TimeGrid grid);

    const Perturbation& perturbation() const { return d_; }
    const TimeGrid& grid() const { return grid_; }

    /// G'(xi, y, t_k) for xi in xi1: result[i][k].
    std::vector<std::vector<double>> restricted(Site y) const;

    /// m-th Picard iterate on the restricted system (m = 0 gives green0).
    std::vector<std::vector<double>> picard(Site y, int iterations) const;

    /// G'(x, y, .) from a restricted solution for the same y.
    std::vector<double> extend(Site x, Site y, const std::vector<std::vector<double>>& restricted) const;

private:
    const std::vector<double>& reference(Site x, Site y) const;
    std::vector<Eigen::VectorXd> row_kernel(Site x) const;

    Perturbation d_;
    TimeGrid grid_;
    std::vector<Eigen::MatrixXd> kernel_;  // F on xi1 x xi1
    Eigen::PartialPivLU<Eigen::MatrixXd> implicit_;
    mutable std::mutex cache_mutex_;
    mutable PathCache cache_;
};

/// Mirror of BackwardSolver for G' = G + G' * H, restricted to xi2 per row x.
class ForwardSolver {
public:
    ForwardSolver(const ReferenceGreen& green0, Perturbation d, TimeGrid grid);

    /// G'(x, eta, t_k) for eta in xi2: result[i][k].
    std::vector<std::vector<double>> restricted(Site x) const;

    std::vector<double> extend(Site x, Site y, const std::vector<std::vector<double>>& restricted) const;

private:
    const std::vector<double>& reference(Site x, Site y) const;

    Perturbation d_;
    TimeGrid grid_;
    std::vector<Eigen::MatrixXd> kernel_;  // H on xi2 x xi2
    Eigen::PartialPivLU<Eigen::MatrixXd> implicit_;
    mutable std::mutex cache_mutex_;
    mutable PathCache cache_;
};

GreenPath solve_backward(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                         const TimeGrid& grid);

GreenPath solve_forward(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                        const TimeGrid& grid);

GreenPath picard_iterate(const ReferenceGreen& green0, const Perturbation& d, std::span<const SitePair> targets,
                         const TimeGrid& grid, int iterations);

/// Bound on W_n(t) from the Gronwall iteration of the perturbation formula.
struct GronwallBound {
    double printed;      // W e^{|B_n| W}
    double time_scaled;  // W e^{|B_n| W t}
};

GronwallBound gronwall_bound(double norm_b, double w, double t);

/// Semigroup of A0 + D, sampled on one grid, usable as the reference of a
/// further perturbation. Restricted solutions are cached per column y.
class PerturbedGreen final : public ReferenceGreen {
public:
    PerturbedGreen(std::shared_ptr<const ReferenceGreen> base, Perturbation d, TimeGrid grid);

    std::vector<double> path(Site x, Site y, const TimeGrid& grid) const override;

private:
    std::shared_ptr<const ReferenceGreen> base_;
    BackwardSolver solver_;
    mutable std::mutex mutex_;
    mutable std::map<Site, std::vector<std::vector<double>>> columns_;
};

}  // namespace semipert
