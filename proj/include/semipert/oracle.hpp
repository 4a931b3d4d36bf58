#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "semipert/coord_ops.hpp"
#include "semipert/green.hpp"

namespace semipert {

/// Which of the two coordinate systems to integrate.
enum class Direction {
    backward,  // dq/dt = A q       (columns of G)
    forward,   // dp/dt = p A       (rows of G)
};

/// Finite section of a coordinate operator on the sites [-N, N].
///
/// Entries leading outside the window are dropped (killing at the boundary),
/// so mass leaving the window is lost and measurable.
class TruncatedSystem {
public:
    enum class Truncation { killing };

    TruncatedSystem(const CoordOperator& a, Site radius);

    Site radius() const { return radius_; }
    Truncation truncation() const { return Truncation::killing; }
    std::size_t size() const { return static_cast<std::size_t>(2 * radius_ + 1); }
    Site site(std::size_t i) const { return static_cast<Site>(i) - radius_; }
    bool contains(Site x) const { return x >= -radius_ && x <= radius_; }
    std::size_t index(Site x) const;

    double entry(Site x, Site y) const;
    /// Column-sum norm of the section.
    double norm() const;
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }

    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix(Direction dir) const {
        return dir == Direction::backward ? matrix_ : transposed_;
    }

    Eigen::VectorXd embed(const L1Vector& v) const;
    L1Vector extract(const Eigen::VectorXd& v) const;

private:
    Site radius_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> transposed_;
};

TruncatedSystem truncate(const CoordOperator& a, Site radius);

/// Classic RK4 with a fixed number of equal steps.
Eigen::VectorXd evolve_fixed(const TruncatedSystem& sys, const Eigen::VectorXd& q0, double t, std::size_t steps,
                             Direction dir = Direction::backward);

/// RK4 with the step halved until two successive results differ by < tol in l1.
Eigen::VectorXd evolve(const TruncatedSystem& sys, const Eigen::VectorXd& q0, double t, double tol = 1e-10,
                       Direction dir = Direction::backward);

/// Same step control applied to a whole grid; one state per node.
std::vector<Eigen::VectorXd> evolve_path(const TruncatedSystem& sys, const Eigen::VectorXd& q0, const TimeGrid& grid,
                                         double tol = 1e-10, Direction dir = Direction::backward);

struct OracleValue {
    double value = 0.0;
    double leak = 0.0;          // probability lost through the window boundary
    bool leak_warning = false;  // leak > tol
};

/// G(x, y, t) of the walk on the window [-N, N]. The forward read evolves
/// delta_x under dp/dt = pA and reads coordinate y; the backward read evolves
/// delta_y under dq/dt = Aq and reads coordinate x.
OracleValue oracle_green(const RateField& rates, Site x, Site y, double t, Site radius, double tol = 1e-10,
                         Direction read = Direction::forward);

}  // namespace semipert
