#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace semipert {

/// Lattice position on the integers.
using Site = std::int64_t;

/// Ordered (x, y) index of a coordinate representation.
struct SitePair {
    Site x;
    Site y;
    auto operator<=>(const SitePair&) const = default;
};

/// Precondition or configuration violation.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a singular system or non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Jump intensities out of one site.
struct Rates {
    double lambda = 1.0;  // x -> x+1
    double mu = 1.0;      // x -> x-1
    bool operator==(const Rates&) const = default;
};

/// Transition intensities on Z: a constant background plus a finite defect table.
class RateField {
public:
    RateField() = default;
    RateField(Rates background, std::map<Site, Rates> defects = {});

    static RateField homogeneous(double lambda = 1.0, double mu = 1.0) { return RateField({lambda, mu}); }

    Rates at(Site x) const;
    double lambda(Site x) const { return at(x).lambda; }
    double mu(Site x) const { return at(x).mu; }

    const Rates& background() const { return background_; }
    const std::map<Site, Rates>& defects() const { return defects_; }

    /// Largest |site| carrying a defect; 0 when there are none.
    Site defect_radius() const;

    bool operator==(const RateField&) const = default;

private:
    Rates background_{};
    std::map<Site, Rates> defects_;
};

/// Translation-invariant tridiagonal background of a walk generator.
struct Band {
    double lower = 0.0;  // A(x, x-1)
    double diag = 0.0;   // A(x, x)
    double upper = 0.0;  // A(x, x+1)

    bool operator==(const Band&) const = default;
    double column_norm() const;
};

using SparseEntries = std::map<SitePair, double>;

/// Coordinate representation A(x,y) of a bounded operator on l1(Z).
///
/// Stored as an optional banded background plus finitely many overriding
/// entries: A(x,y) is the override when one exists, the band value otherwise.
/// Overrides equal to the band value are never stored, so the override set is
/// canonical.
class CoordOperator {
public:
    CoordOperator() = default;
    CoordOperator(std::optional<Band> band, SparseEntries overrides);

    double entry(Site x, Site y) const;
    const std::optional<Band>& band() const { return band_; }
    const SparseEntries& overrides() const { return overrides_; }

    /// Nonzero entries of row x in ascending column order.
    std::vector<std::pair<Site, double>> row(Site x) const;
    /// Nonzero entries of column y in ascending row order.
    std::vector<std::pair<Site, double>> column(Site y) const;

private:
    double band_value(Site x, Site y) const;

    std::optional<Band> band_;
    SparseEntries overrides_;
    std::map<Site, std::vector<Site>> override_rows_by_column_;
};

/// Finitely supported perturbation D together with its column support xi1 and
/// row support xi2.
class Perturbation {
public:
    Perturbation() = default;
    explicit Perturbation(SparseEntries entries);

    const SparseEntries& entries() const { return entries_; }
    /// {eta : D(xi, eta) != 0 for some xi}, ascending.
    const std::vector<Site>& xi1() const { return xi1_; }
    /// {xi : D(xi, eta) != 0 for some eta}, ascending.
    const std::vector<Site>& xi2() const { return xi2_; }

    bool empty() const { return entries_.empty(); }
    double entry(Site x, Site y) const;
    std::vector<std::pair<Site, double>> row(Site x) const;
    std::vector<std::pair<Site, double>> column(Site y) const;
    CoordOperator as_operator() const { return CoordOperator(std::nullopt, entries_); }

private:
    SparseEntries entries_;
    std::vector<Site> xi1_;
    std::vector<Site> xi2_;
};

/// Finitely supported element of l1(Z). Exact zeros are dropped.
class L1Vector {
public:
    L1Vector() = default;
    explicit L1Vector(std::map<Site, double> values);

    static L1Vector delta(Site x, double value = 1.0) { return L1Vector({{x, value}}); }

    double at(Site x) const;
    const std::map<Site, double>& values() const { return values_; }
    bool empty() const { return values_.empty(); }
    double norm1() const;
    double sum() const;
    /// Smallest closed interval containing the support; nullopt for the zero vector.
    std::optional<std::pair<Site, Site>> support_window() const;

private:
    std::map<Site, double> values_;
};

CoordOperator build_walk_generator(const RateField& rates);

/// sup_y sum_x |A(x,y)|.
double operator_norm(const CoordOperator& a);

/// D = A1 - A0. Rejects operators whose backgrounds differ.
Perturbation perturbation_from(const CoordOperator& a1, const CoordOperator& a0);

/// (Aq)(x) = sum_y A(x,y) q(y).
L1Vector apply(const CoordOperator& a, const L1Vector& q);

/// (pA)(y) = sum_x p(x) A(x,y).
L1Vector apply_adjoint(const L1Vector& p, const CoordOperator& a);

}  // namespace semipert
