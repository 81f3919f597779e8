#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "femrbf/linsolve.hpp"

using namespace femrbf;

TEST_CASE("identity solve") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd b(3);
    b << 1, 2, 3;
    auto [x, rep] = pinv_solve(a, b);
    REQUIRE((x - b).lpNorm<Eigen::Infinity>() < 1e-14);
    REQUIRE(rep.condition_number == Catch::Approx(1.0));
    REQUIRE(rep.rank == 3);
    REQUIRE(rep.truncated_singular_values == 0);
    REQUIRE(rep.wall_time_s >= 0.0);
}

TEST_CASE("diagonal scaling and condition number") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 1e-6;
    Eigen::VectorXd b(2);
    b << 1, 1;
    auto [x, rep] = pinv_solve(a, b);
    REQUIRE(x(0) == Catch::Approx(1.0));
    REQUIRE(x(1) == Catch::Approx(1e6));
    REQUIRE(rep.condition_number == Catch::Approx(1e6));

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 10.0;
    REQUIRE(condition_number(d) == Catch::Approx(10.0));
    REQUIRE(condition_number(Eigen::MatrixXd::Identity(5, 5)) == Catch::Approx(1.0));
}

TEST_CASE("construct-and-invert oracle: A = Q D Q^T") {
    // known spectrum, so A^{-1} b is available independently of the solver
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) m(i, j) = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd d(5);
    d << 4.0, 2.5, 1.0, 0.5, 0.125;
    Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();

    Eigen::VectorXd b(5);
    for (int i = 0; i < 5; ++i) b(i) = dist(rng);
    const Eigen::VectorXd expected = q * d.cwiseInverse().asDiagonal() * q.transpose() * b;

    auto [x, rep] = pinv_solve(a, b);
    REQUIRE((x - expected).lpNorm<Eigen::Infinity>() < 1e-10);
    REQUIRE(rep.condition_number == Catch::Approx(4.0 / 0.125).epsilon(1e-10));
}

TEST_CASE("full-rank recovery and row-permutation invariance") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd a(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) a(i, j) = dist(rng);
    Eigen::VectorXd x0(6);
    for (int i = 0; i < 6; ++i) x0(i) = dist(rng);
    const Eigen::VectorXd b = a * x0;
    REQUIRE((pinv_solve(a, b).first - x0).lpNorm<Eigen::Infinity>() < 1e-10);

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
    const Eigen::MatrixXd pa = perm * a;
    const Eigen::VectorXd pb = perm * b;
    REQUIRE((pinv_solve(pa, pb).first - x0).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("rank deficiency is truncated, not amplified") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = 1.0;  // third singular value is exactly zero
    Eigen::VectorXd b(3);
    b << 1, 2, 3;
    auto [x, rep] = pinv_solve(a, b);
    REQUIRE(rep.rank == 2);
    REQUIRE(rep.truncated_singular_values == 1);
    REQUIRE(rep.overflow);
    REQUIRE(std::isinf(rep.condition_number));
    REQUIRE(x(2) == Catch::Approx(0.0).margin(1e-14));  // least-norm solution
}

TEST_CASE("overflow marker for ratios beyond double range") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1e200;
    a(1, 1) = 1e-200;
    REQUIRE(std::isinf(condition_number(a)));
}

TEST_CASE("empty matrix is rejected") {
    Eigen::MatrixXd a(0, 0);
    Eigen::VectorXd b(0);
    REQUIRE_THROWS_AS(pinv_solve(a, b), EmptyMatrix);
    REQUIRE_THROWS_AS(condition_number(a), EmptyMatrix);
}

TEST_CASE("factor once, apply many") {
    Eigen::MatrixXd a(3, 3);
    a << 2, 1, 0, 1, 3, 1, 0, 1, 2;
    PinvSolver solver(a);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd b = Eigen::VectorXd::Constant(3, 1.0 + trial);
        const Eigen::VectorXd x = solver.solve(b);
        REQUIRE((a * x - b).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    Eigen::VectorXd wrong(4);
    REQUIRE_THROWS_AS(solver.solve(wrong), ShapeMismatch);
}
