#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semipert/bessel.hpp"
#include "semipert/coord_ops.hpp"

namespace semipert {

using Complex = std::complex<double>;

enum class InversionMethod { talbot, gaver_stehfest };

struct InversionScheme {
    InversionMethod method = InversionMethod::talbot;
    int nodes = 32;

    static InversionScheme talbot(int m = 32) { return {InversionMethod::talbot, m}; }
    static InversionScheme gaver_stehfest(int m = 12) { return {InversionMethod::gaver_stehfest, m}; }

    /// Talbot needs M >= 8; Gaver-Stehfest needs M even and <= 18.
    void validate() const;
};

/// One Laplace-domain node of the perturbed walk.
///
/// Transforming G' = G + F * G' turns the convolution into a product, so for
/// every column y the values on xi1 solve (Id - F^(s)) u = g^(xi1, y, s) with
/// F^(x, xi, s) = sum_eta g^(x, eta, s) D(eta, xi). The factorization does not
/// depend on y and is done once per node.
class LaplaceSystem {
public:
    /// Accepts any s off the branch cut of the base transform, including the
    /// left half plane visited by the Talbot contour.
    LaplaceSystem(const HomogeneousWalk& base, const Perturbation& d, Complex s);

    Complex s() const { return s_; }
    const std::vector<Site>& support() const { return d_.xi1(); }

    std::vector<Complex> restricted(Site y) const;
    /// Right side of the transformed equation for an arbitrary row x.
    Complex evaluate(Site x, Site y, std::span<const Complex> restricted) const;
    Complex evaluate(Site x, Site y) const { return evaluate(x, y, restricted(y)); }

private:
    HomogeneousWalk base_;
    Perturbation d_;
    Complex s_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

struct LaplaceSolution {
    Complex s;
    std::vector<Site> support;          // xi1
    std::vector<Complex> values;        // G'^(xi, y, s) on support
    std::function<Complex(Site)> at;    // G'^(x, y, s) for any x
};

/// Laplace-domain Green's column y at s (Re s > 0).
LaplaceSolution laplace_solve(const HomogeneousWalk& base, const Perturbation& d, Site y, Complex s);

/// Node s_k and weight w_k with f(t) ~ Re sum_k w_k fhat(s_k).
struct InversionNode {
    Complex s;
    Complex weight;
};

std::vector<InversionNode> inversion_nodes(double t, const InversionScheme& scheme);

double invert(const std::function<Complex(Complex)>& fhat, double t, const InversionScheme& scheme);

/// G'(x, y, t) by Laplace inversion of the finite system.
double greens_exact(const HomogeneousWalk& base, const Perturbation& d, Site x, Site y, double t,
                    const InversionScheme& scheme);

/// Batched form: values[pair][time]. One factorization per contour node.
std::vector<std::vector<double>> greens_exact(const HomogeneousWalk& base, const Perturbation& d,
                                              std::span<const SitePair> pairs, std::span<const double> times,
                                              const InversionScheme& scheme);

/// Both sides of R1 = R0 + R0 D R1 applied to q.
struct ResolventResidual {
    double residual = 0.0;        // l1 norm of the difference over the window
    L1Vector lhs;                 // R1(lambda) q
    L1Vector rhs;                 // R0 q + R0 D R1 q
};

/// Resolvent identity at real lambda > 0 over the window supp(q) +/- radius.
/// a0 must be a translation-invariant walk generator.
ResolventResidual resolvent_check(const CoordOperator& a0, const Perturbation& d, double lambda, const L1Vector& q,
                                  Site radius = 40);

/// Reference walk of a pure-band walk generator.
HomogeneousWalk walk_of(const CoordOperator& a0);

}  // namespace semipert
