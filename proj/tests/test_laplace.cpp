#include <doctest.h>

#include "oracles.hpp"
#include "semipert/bessel.hpp"
#include "semipert/laplace.hpp"

using namespace semipert;

namespace {

const HomogeneousWalk unit_walk;

RateField trap() { return RateField({1.0, 1.0}, {{0, {0.0, 0.0}}}); }

Perturbation from_unit(const RateField& rates) {
    return perturbation_from(build_walk_generator(rates), build_walk_generator(RateField::homogeneous()));
}

}  // namespace

TEST_CASE("scheme validation") {
    CHECK_NOTHROW(InversionScheme::talbot().validate());
    CHECK_THROWS_AS(InversionScheme::talbot(4).validate(), InvalidArgument);
    CHECK_THROWS_AS(InversionScheme::gaver_stehfest(11).validate(), InvalidArgument);
    CHECK_THROWS_AS(InversionScheme::gaver_stehfest(20).validate(), InvalidArgument);
}

TEST_CASE("elementary inversions") {
    const auto talbot = InversionScheme::talbot();
    CHECK(std::abs(invert([](Complex s) { return 1.0 / s; }, 1.0, talbot) - 1.0) <= 1e-10);
    CHECK(std::abs(invert([](Complex s) { return 1.0 / (s + 2.0); }, 1.0, talbot) - std::exp(-2.0)) <= 1e-9);
    CHECK(std::abs(invert([](Complex s) { return unit_walk.laplace_continued(0, 0, s); }, 1.0, talbot) -
                   0.30850832255367103) <= 1e-8);
    const auto gs = InversionScheme::gaver_stehfest();
    CHECK(std::abs(invert([](Complex s) { return 1.0 / (s + 1.0); }, 1.0, gs) - std::exp(-1.0)) <= 1e-4);
    CHECK_THROWS_AS(invert([](Complex s) { return 1.0 / s; }, 0.0, talbot), InvalidArgument);
}

TEST_CASE("restricted system") {
    const Perturbation none;
    for (double s : {0.5, 2.0}) {
        const auto sol = laplace_solve(unit_walk, none, 0, s);
        CHECK(sol.support.empty());
        CHECK(std::abs(sol.at(3) - g0_laplace(3, 0, s)) <= 1e-15);
    }

    // Trap walk, real s: the solution is real and matches the Laplace transform
    // of the dense semigroup entry, computed by quadrature.
    const Perturbation d = from_unit(trap());
    const double s = 1.0;
    const auto sol = laplace_solve(unit_walk, d, 0, s);
    REQUIRE(sol.support == std::vector<Site>{-1, 0, 1});
    for (const auto& v : sol.values) CHECK(std::abs(v.imag()) <= 1e-12);
    // G'(x, 0, t) from the closed loop of the backward equation over the window.
    const Eigen::MatrixXd a = oracle::dense_generator(trap(), 40);
    const Eigen::MatrixXd resolvent = (s * Eigen::MatrixXd::Identity(81, 81) - a).inverse();
    for (Site x : {-3, -1, 0, 2}) {
        CHECK(std::abs(sol.at(x).real() - resolvent(x + 40, 40)) <= 1e-10);
    }
    CHECK_THROWS_AS(laplace_solve(unit_walk, d, 0, Complex(-0.1, 1.0)), InvalidArgument);
}

TEST_CASE("greens_exact") {
    const auto scheme = InversionScheme::talbot();
    for (double t : {0.2, 1.0, 4.0}) {
        CHECK(std::abs(greens_exact(unit_walk, Perturbation(), 2, -3, t, scheme) - oracle::walk_green(2, -3, t)) <=
              1e-8);
    }
    const Perturbation d = from_unit(trap());
    for (double t : {0.5, 2.0, 5.0}) {
        const Eigen::MatrixXd e = oracle::dense_semigroup(trap(), 60, t);
        CHECK(std::abs(greens_exact(unit_walk, d, 0, 0, t, scheme) - 1.0) <= 1e-8);
        CHECK(std::abs(greens_exact(unit_walk, d, 3, 0, t, scheme) - oracle::dense_entry(e, 60, 3, 0)) <= 1e-8);
        CHECK(std::abs(greens_exact(unit_walk, d, 2, 1, t, scheme) - oracle::dense_entry(e, 60, 2, 1)) <= 1e-8);
    }

    const RateField single({1.0, 1.0}, {{0, {2.0, 1.0}}});
    const Eigen::MatrixXd e = oracle::dense_semigroup(single, 60, 1.5);
    CHECK(std::abs(greens_exact(unit_walk, from_unit(single), 2, -1, 1.5, scheme) - oracle::dense_entry(e, 60, 2, -1)) <=
          1e-8);

    // Batched form matches single evaluations.
    const std::vector<SitePair> pairs{{0, 0}, {1, -1}};
    const std::vector<double> times{0.5, 1.0};
    const auto batch = greens_exact(unit_walk, d, pairs, times, scheme);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        for (std::size_t k = 0; k < times.size(); ++k) {
            CHECK(batch[p][k] == doctest::Approx(greens_exact(unit_walk, d, pairs[p].x, pairs[p].y, times[k], scheme))
                                     .epsilon(1e-13));
        }
    }
}

TEST_CASE("resolvent identity") {
    const CoordOperator a0 = build_walk_generator(RateField::homogeneous());
    const auto zero = resolvent_check(a0, Perturbation(), 1.0, L1Vector::delta(0));
    CHECK(zero.residual <= 1e-12);

    const Perturbation d = from_unit(trap());
    const auto r = resolvent_check(a0, d, 1.0, L1Vector::delta(0));
    CHECK(r.residual <= 1e-8);

    const RateField single({1.0, 1.0}, {{0, {2.0, 1.0}}});
    const auto r2 = resolvent_check(a0, from_unit(single), 3.0, L1Vector::delta(5));
    CHECK(r2.residual <= 1e-8);

    // Independently: R1 q solves (lambda - A1) r = q on a wide dense window.
    const Eigen::MatrixXd a1 = oracle::dense_generator(single, 80);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(161);
    q(85) = 1.0;
    const Eigen::VectorXd direct = (3.0 * Eigen::MatrixXd::Identity(161, 161) - a1).partialPivLu().solve(q);
    for (Site x = -10; x <= 10; ++x) CHECK(std::abs(r2.lhs.at(x) - direct(x + 80)) <= 1e-12);

    const CoordOperator biased = build_walk_generator(RateField({2.0, 1.0}));
    CHECK_NOTHROW(resolvent_check(biased, Perturbation(), 1.0, L1Vector::delta(0)));
}
