#pragma once

#include <complex>
#include <vector>

#include "semipert/coord_ops.hpp"
#include "semipert/green.hpp"

namespace semipert {

/// Exponentially scaled modified Bessel functions e^{-x} I_n(x), n = 0..n_max.
struct ScaledBesselTable {
    double argument = 0.0;
    std::vector<double> values;
};

/// Miller backward recurrence normalized by e^{-x}(I_0 + 2 sum_{n>=1} I_n) = 1.
ScaledBesselTable scaled_bessel_table(int n_max, double x);

/// e^{-x} I_n(x). Negative orders are folded with I_{-n} = I_n.
double scaled_bessel_i(int n, double x);

/// Transition probability of the unit-rate walk: e^{-2t} I_{|x-y|}(2t).
double g0(Site x, Site y, double t);

/// Laplace transform of g0 in t. Requires Re s > 0.
std::complex<double> g0_laplace(Site x, Site y, std::complex<double> s);

/// Green's function of the translation-invariant walk with jump rates lambda
/// (to x+1) and mu (to x-1), both strictly positive:
///
///   G(x,y,t) = e^{-(lambda+mu)t} (lambda/mu)^{(y-x)/2} I_{|y-x|}(2 sqrt(lambda mu) t)
///
/// and its Laplace transform. The unit-rate walk reproduces g0 exactly.
class HomogeneousWalk final : public ReferenceGreen {
public:
    explicit HomogeneousWalk(Rates rates = {});

    const Rates& rates() const { return rates_; }

    double green(Site x, Site y, double t) const;
    std::vector<double> path(Site x, Site y, const TimeGrid& grid) const override;
    SitePair path_key(Site x, Site y) const override { return {0, y - x}; }

    /// Laplace transform on the half plane Re s > 0.
    std::complex<double> laplace(Site x, Site y, std::complex<double> s) const;

    /// Analytic continuation of laplace() to the plane cut along
    /// [-(sqrt(lambda)+sqrt(mu))^2, -(sqrt(lambda)-sqrt(mu))^2]. Contour
    /// inversion samples it left of the imaginary axis.
    std::complex<double> laplace_continued(Site x, Site y, std::complex<double> s) const;

    /// Real interval carrying the branch cut of the transform.
    std::pair<double, double> branch_cut() const;

private:
    double bias(Site x, Site y) const;

    Rates rates_;
    double drift_decay_;  // (sqrt(lambda) - sqrt(mu))^2
    double scale_;        // 2 sqrt(lambda mu)
};

}  // namespace semipert
