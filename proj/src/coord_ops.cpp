#include "semipert/coord_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace semipert {

namespace {

void validate_rates(const Rates& r, const std::string& where) {
    if (!std::isfinite(r.lambda) || !std::isfinite(r.mu) || r.lambda < 0.0 || r.mu < 0.0) {
        throw InvalidArgument(where + ": rates must be finite and nonnegative");
    }
}

constexpr Site kSiteMin = std::numeric_limits<Site>::min();
constexpr Site kSiteMax = std::numeric_limits<Site>::max();

std::vector<std::pair<Site, double>> sparse_row(const SparseEntries& entries, Site x) {
    std::vector<std::pair<Site, double>> out;
    for (auto it = entries.lower_bound({x, kSiteMin}); it != entries.end() && it->first.x == x; ++it) {
        out.emplace_back(it->first.y, it->second);
    }
    return out;
}

}  // namespace

RateField::RateField(Rates background, std::map<Site, Rates> defects)
    : background_(background), defects_(std::move(defects)) {
    validate_rates(background_, "background");
    for (const auto& [site, r] : defects_) {
        validate_rates(r, "defect at site " + std::to_string(site));
    }
}

Rates RateField::at(Site x) const {
    auto it = defects_.find(x);
    return it == defects_.end() ? background_ : it->second;
}

Site RateField::defect_radius() const {
    Site radius = 0;
    for (const auto& [site, r] : defects_) {
        radius = std::max(radius, site < 0 ? -site : site);
    }
    return radius;
}

double Band::column_norm() const { return std::abs(lower) + std::abs(diag) + std::abs(upper); }

CoordOperator::CoordOperator(std::optional<Band> band, SparseEntries overrides) : band_(band) {
    for (const auto& [ij, value] : overrides) {
        if (!std::isfinite(value)) {
            throw InvalidArgument("operator entries must be finite");
        }
        if (value != band_value(ij.x, ij.y)) {
            overrides_.emplace(ij, value);
            override_rows_by_column_[ij.y].push_back(ij.x);
        }
    }
}

double CoordOperator::band_value(Site x, Site y) const {
    if (!band_) return 0.0;
    if (y == x - 1) return band_->lower;
    if (y == x) return band_->diag;
    if (y == x + 1) return band_->upper;
    return 0.0;
}

double CoordOperator::entry(Site x, Site y) const {
    auto it = overrides_.find({x, y});
    return it == overrides_.end() ? band_value(x, y) : it->second;
}

std::vector<std::pair<Site, double>> CoordOperator::row(Site x) const {
    std::set<Site> cols;
    if (band_) cols.insert({x - 1, x, x + 1});
    for (auto it = overrides_.lower_bound({x, kSiteMin}); it != overrides_.end() && it->first.x == x; ++it) {
        cols.insert(it->first.y);
    }
    std::vector<std::pair<Site, double>> out;
    for (Site y : cols) {
        if (double v = entry(x, y); v != 0.0) out.emplace_back(y, v);
    }
    return out;
}

std::vector<std::pair<Site, double>> CoordOperator::column(Site y) const {
    std::set<Site> rows;
    if (band_) rows.insert({y - 1, y, y + 1});
    if (auto it = override_rows_by_column_.find(y); it != override_rows_by_column_.end()) {
        rows.insert(it->second.begin(), it->second.end());
    }
    std::vector<std::pair<Site, double>> out;
    for (Site x : rows) {
        if (double v = entry(x, y); v != 0.0) out.emplace_back(x, v);
    }
    return out;
}

Perturbation::Perturbation(SparseEntries entries) {
    std::set<Site> cols;
    std::set<Site> rows;
    for (const auto& [ij, value] : entries) {
        if (!std::isfinite(value)) {
            throw InvalidArgument("perturbation entries must be finite");
        }
        if (value == 0.0) continue;
        entries_.emplace(ij, value);
        rows.insert(ij.x);
        cols.insert(ij.y);
    }
    xi1_.assign(cols.begin(), cols.end());
    xi2_.assign(rows.begin(), rows.end());
}

double Perturbation::entry(Site x, Site y) const {
    auto it = entries_.find({x, y});
    return it == entries_.end() ? 0.0 : it->second;
}

std::vector<std::pair<Site, double>> Perturbation::row(Site x) const { return sparse_row(entries_, x); }

std::vector<std::pair<Site, double>> Perturbation::column(Site y) const {
    std::vector<std::pair<Site, double>> out;
    for (const auto& [ij, value] : entries_) {
        if (ij.y == y) out.emplace_back(ij.x, value);
    }
    return out;
}

L1Vector::L1Vector(std::map<Site, double> values) {
    for (const auto& [site, v] : values) {
        if (v != 0.0) values_.emplace(site, v);
    }
}

double L1Vector::at(Site x) const {
    auto it = values_.find(x);
    return it == values_.end() ? 0.0 : it->second;
}

double L1Vector::norm1() const {
    double total = 0.0;
    for (const auto& [site, v] : values_) total += std::abs(v);
    return total;
}

double L1Vector::sum() const {
    double total = 0.0;
    for (const auto& [site, v] : values_) total += v;
    return total;
}

std::optional<std::pair<Site, Site>> L1Vector::support_window() const {
    if (values_.empty()) return std::nullopt;
    return std::make_pair(values_.begin()->first, values_.rbegin()->first);
}

CoordOperator build_walk_generator(const RateField& rates) {
    const Rates bg = rates.background();
    Band band{bg.mu, -(bg.lambda + bg.mu), bg.lambda};
    SparseEntries overrides;
    for (const auto& [x, r] : rates.defects()) {
        overrides[{x, x - 1}] = r.mu;
        overrides[{x, x}] = -(r.lambda + r.mu);
        overrides[{x, x + 1}] = r.lambda;
    }
    return CoordOperator(band, std::move(overrides));
}

double operator_norm(const CoordOperator& a) {
    double norm = a.band() ? a.band()->column_norm() : 0.0;
    std::set<Site> touched;
    for (const auto& [ij, value] : a.overrides()) touched.insert(ij.y);
    for (Site y : touched) {
        double col = 0.0;
        for (const auto& [x, v] : a.column(y)) col += std::abs(v);
        norm = std::max(norm, col);
    }
    return norm;
}

Perturbation perturbation_from(const CoordOperator& a1, const CoordOperator& a0) {
    if (a1.band() != a0.band()) {
        throw InvalidArgument("perturbation_from: backgrounds differ, difference has infinite support");
    }
    std::set<SitePair> positions;
    for (const auto& [ij, v] : a1.overrides()) positions.insert(ij);
    for (const auto& [ij, v] : a0.overrides()) positions.insert(ij);
    SparseEntries d;
    for (const SitePair& ij : positions) {
        d[ij] = a1.entry(ij.x, ij.y) - a0.entry(ij.x, ij.y);
    }
    return Perturbation(std::move(d));
}

L1Vector apply(const CoordOperator& a, const L1Vector& q) {
    std::map<Site, double> out;
    for (const auto& [y, qy] : q.values()) {
        for (const auto& [x, axy] : a.column(y)) out[x] += axy * qy;
    }
    return L1Vector(std::move(out));
}

L1Vector apply_adjoint(const L1Vector& p, const CoordOperator& a) {
    std::map<Site, double> out;
    for (const auto& [x, px] : p.values()) {
        for (const auto& [y, axy] : a.row(x)) out[y] += px * axy;
    }
    return L1Vector(std::move(out));
}

}  // namespace semipert
