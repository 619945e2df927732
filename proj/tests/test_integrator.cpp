#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "ramanhom/integrator.hpp"

using namespace ramanhom;
using Eigen::Vector2cd;
using cplx = std::complex<double>;

TEST_SUITE("integrator") {

TEST_CASE("exponential decay matches the closed form") {
    const double lambda = 1.4e8;
    auto rhs = [&](double, const Vector2cd& y) { return Vector2cd(-lambda * y[0], cplx(0, 0)); };
    IntegratorOptions opt;
    const Vector2cd y0(1.0, 0.0);
    const Vector2cd y1 = integrate_to(rhs, 0.0, 50e-9, y0, opt);
    CHECK(std::abs(y1[0].real() - std::exp(-lambda * 50e-9)) < 1e-10);
}

TEST_CASE("dense output samples interior points accurately") {
    const cplx iw(0.0, 2.0 * M_PI * 30e6);
    auto rhs = [&](double, const Vector2cd& y) { return Vector2cd(iw * y[0], cplx(0, 0)); };
    IntegratorOptions opt;
    std::vector<double> samples;
    for (int i = 0; i <= 100; ++i) samples.push_back(i * 1e-9);
    double max_err = 0.0;
    integrate_sampled(rhs, 0.0, 100e-9, Vector2cd(1.0, 0.0), opt, samples.begin(), samples.end(),
                      [&](double t, const Vector2cd& y) {
                          const cplx exact = std::exp(iw * t);
                          max_err = std::max(max_err, std::abs(y[0] - exact));
                      });
    CHECK(max_err < 1e-8);
}

TEST_CASE("oscillatory norm is preserved at tolerance") {
    // Rabi-like rotation: |y|^2 conserved.
    const double w = 2.0 * M_PI * 50e6;
    auto rhs = [&](double, const Vector2cd& y) {
        return Vector2cd(cplx(0, -0.5 * w) * y[1], cplx(0, -0.5 * w) * y[0]);
    };
    IntegratorOptions opt;
    const Vector2cd y1 = integrate_to(rhs, 0.0, 200e-9, Vector2cd(1.0, 0.0), opt);
    CHECK(y1.squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tightening the tolerance tightens the answer") {
    const double lambda = 1e8;
    auto rhs = [&](double, const Vector2cd& y) { return Vector2cd(-lambda * y[0], cplx(0, 0)); };
    IntegratorOptions loose, tight;
    loose.rtol = 1e-6;
    tight.rtol = 1e-12;
    tight.atol = 1e-16;
    const double exact = std::exp(-lambda * 30e-9);
    const double e_loose =
        std::abs(integrate_to(rhs, 0.0, 30e-9, Vector2cd(1.0, 0.0), loose)[0].real() - exact);
    const double e_tight =
        std::abs(integrate_to(rhs, 0.0, 30e-9, Vector2cd(1.0, 0.0), tight)[0].real() - exact);
    CHECK(e_tight < e_loose);
    CHECK(e_tight < 1e-13);
}

}  // TEST_SUITE
