#pragma once

#include <span>
#include <vector>

#include "semipert/coord_ops.hpp"
#include "semipert/green.hpp"
#include "semipert/volterra.hpp"

namespace semipert {

/// Keeps defects with |site| <= n and resets the rest to the background.
RateField truncated_rates(const RateField& rates, Site n);

/// Norm of B_n = A_n - A for the truncation sequence above.
double bn_norm(const RateField& rates, Site n);

/// One generator A_n of the sequence and how far its semigroup is from the limit.
struct ConvergenceRow {
    Site radius = 0;
    double bn_norm = 0.0;
    /// sup_{s<=t} |Omega_n(s) q - Omega(s) q|_1, Omega_n from the Volterra solver,
    /// Omega from the oracle.
    double error = 0.0;
    /// int_0^t |B_n Omega(tau) q|_1 dtau (trapezoid on the grid).
    double defect_integral = 0.0;
    /// sup_{s<=t} |Omega_n(s) q|_1 / |q|_1 on the grid.
    double wn_measured = 0.0;
    /// sup_{s<=t} of the column-sum norm of Omega_n(s), from the oracle.
    double wn_operator = 0.0;
    /// wn_measured * defect_integral.
    double bound = 0.0;
    /// wn_operator * defect_integral.
    double bound_operator = 0.0;
    /// W e^{|B_n| W} and W e^{|B_n| W t} with W the operator norm for the limit.
    GronwallBound gronwall{};
};

struct ConvergenceReport {
    TimeGrid grid;
    Site window = 0;          // errors are summed over [-window, window]
    double w_operator = 0.0;  // sup_{s<=t} column-sum norm of Omega(s)
    double w_measured = 0.0;  // sup_{s<=t} |Omega(s) q|_1 / |q|_1
    std::vector<ConvergenceRow> rows;
};

struct StudyOptions {
    Site window = 0;  // 0 picks supp(q) + defect radius + 4t + 20
    double oracle_tol = 1e-10;
};

/// Convergence study along the truncation sequence: for each radius the
/// perturbed semigroup of A_n is computed as a perturbation of the background
/// walk and compared with the oracle semigroup of the full field.
ConvergenceReport convergence_study(const RateField& rates, const L1Vector& q0, const TimeGrid& grid,
                                    std::span<const Site> radii, const StudyOptions& options = {});

/// G_n(x, y, .) along the radii where step n perturbs A_{n-1} by A_n - A_{n-1}.
std::vector<GreenPath> incremental_paths(const RateField& rates, std::span<const Site> radii,
                                         std::span<const SitePair> targets, const TimeGrid& grid);

/// Same quantities with every A_n obtained directly from the background walk.
std::vector<GreenPath> direct_paths(const RateField& rates, std::span<const Site> radii,
                                    std::span<const SitePair> targets, const TimeGrid& grid);

}  // namespace semipert
