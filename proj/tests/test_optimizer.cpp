#include "rst/augmented_lagrangian.hpp"
#include "rst/parallel.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace rst;
using namespace rst::optim;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double rosenbrock(const Vector& z, Vector* g) {
    const double a = 1.0 - z[0], b = z[1] - z[0] * z[0];
    if (g) {
        g->resize(2);
        (*g)[0] = -2.0 * a - 400.0 * z[0] * b;
        (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
}

} // namespace

TEST_CASE("BFGS finds the Rosenbrock minimum") {
    const auto r = minimize_bfgs(rosenbrock, vec({-1.2, 1.0}), 1e-10, 2000);
    CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.z[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.value < 1e-14);
    CHECK_FALSE(r.stalled);
}

TEST_CASE("BFGS on a convex quadratic") {
    Matrix A(3, 3);
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Vector b = vec({1, -2, 0.5});
    auto f = [&](const Vector& z, Vector* g) {
        if (g) *g = A * z - b;
        return 0.5 * z.dot(A * z) - b.dot(z);
    };
    const auto r = minimize_bfgs(f, Vector::Zero(3), 1e-12, 200);
    const Vector exact = A.ldlt().solve(b);
    CHECK((r.z - exact).norm() <= 1e-10);
}

TEST_CASE("augmented Lagrangian: projection onto a half-plane") {
    Problem p;
    p.objective = [](const Vector& z, Vector* g) {
        if (g) *g = z;
        return 0.5 * z.squaredNorm();
    };
    // 4 - z0 - z1 <= 0
    p.inequalities.push_back([](const Vector& z, Vector* g) {
        if (g) *g = vec({-1, -1});
        return 4.0 - z[0] - z[1];
    });
    const auto r = minimize(p, Vector::Zero(2));
    CHECK(r.converged);
    CHECK(std::abs(r.z[0] - 2.0) <= 1e-8);
    CHECK(std::abs(r.z[1] - 2.0) <= 1e-8);
    CHECK(r.max_violation <= 1e-8);
    CHECK(r.multipliers[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("augmented Lagrangian: inactive and multiple constraints") {
    Problem p;
    p.objective = [](const Vector& z, Vector* g) {
        const Vector d = z - vec({1, 2});
        if (g) *g = 2.0 * d;
        return d.squaredNorm();
    };
    p.inequalities.push_back([](const Vector& z, Vector* g) {
        if (g) *g = vec({1, 0});
        return z[0] - 5.0;
    });
    p.inequalities.push_back([](const Vector& z, Vector* g) {
        if (g) *g = vec({0, 1});
        return z[1] - 1.0;
    });
    const auto r = minimize(p, vec({3, 3}));
    CHECK(r.converged);
    CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(r.z[1] - 1.0) <= 1e-8);
    CHECK(r.multipliers[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.multipliers[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("augmented Lagrangian: curved constraint") {
    Problem p;
    p.objective = [](const Vector& z, Vector* g) {
        if (g) *g = vec({1, 1});
        return z[0] + z[1];
    };
    // unit disc
    p.inequalities.push_back([](const Vector& z, Vector* g) {
        if (g) *g = 2.0 * z;
        return z.squaredNorm() - 1.0;
    });
    const auto r = minimize(p, vec({0.1, -0.3}));
    CHECK(r.converged);
    CHECK(r.z[0] == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-7));
    CHECK(r.z[1] == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-7));
}

TEST_CASE("parallel_for runs every task once and rethrows") {
    std::atomic<int> count{0};
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) {
        ++hits[i];
        ++count;
    });
    CHECK(count == 100);
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
    CHECK(resolve_threads(8, 3) == 3);
    CHECK(resolve_threads(0, 5) >= 1);
}
