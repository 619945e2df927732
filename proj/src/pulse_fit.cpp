#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ramanhom/pulse.hpp"

namespace ramanhom {
namespace {

struct Model {
    // f(t) = A exp(-u^beta), u = |t - t0| / (sqrt(2) sigma)
    static double eval(const Eigen::Vector4d& p, double t) {
        const double u = std::abs(t - p[1]) / (std::sqrt(2.0) * p[2]);
        return p[0] * std::exp(-std::pow(u, p[3]));
    }

    static Eigen::Vector4d gradient(const Eigen::Vector4d& p, double t) {
        const double a = p[0], t0 = p[1], sigma = p[2], beta = p[3];
        const double s2 = std::sqrt(2.0) * sigma;
        const double u = std::abs(t - t0) / s2;
        const double ub = std::pow(u, beta);
        const double e = std::exp(-ub);
        Eigen::Vector4d g;
        g[0] = e;
        if (u > 0.0) {
            const double sgn = (t - t0) >= 0.0 ? 1.0 : -1.0;
            g[1] = a * e * beta * std::pow(u, beta - 1.0) * sgn / s2;
            g[2] = a * e * beta * ub / sigma;
            g[3] = -a * e * ub * std::log(u);
        } else {
            g[1] = 0.0;
            g[2] = 0.0;
            g[3] = 0.0;
        }
        return g;
    }
};

double weighted_cost(const std::vector<std::pair<double, double>>& samples,
                     const Eigen::Vector4d& p) {
    double cost = 0.0;
    for (const auto& [t, c] : samples) {
        const double w = 1.0 / std::max(c, 1.0);
        const double r = Model::eval(p, t) - c;
        cost += w * r * r;
    }
    return cost;
}

}  // namespace

PulseFitResult fit_pulse(const std::vector<std::pair<double, double>>& samples) {
    std::size_t nonempty = 0;
    double total = 0.0, max_count = 0.0;
    for (const auto& [t, c] : samples) {
        if (c < 0.0) throw fit_error("fit_pulse: negative count");
        if (c > 0.0) ++nonempty;
        total += c;
        max_count = std::max(max_count, c);
    }
    if (samples.size() < 5 || nonempty < 5)
        throw fit_error("fit_pulse: need at least 5 nonempty bins, got " + std::to_string(nonempty));
    if (total <= 0.0) throw fit_error("fit_pulse: all counts are zero");

    // Initial guess: centroid, RMS width (exact for beta = 2), peak amplitude.
    double centroid = 0.0;
    for (const auto& [t, c] : samples) centroid += t * c;
    centroid /= total;
    double var = 0.0;
    for (const auto& [t, c] : samples) var += (t - centroid) * (t - centroid) * c;
    var /= total;
    if (!(var > 0.0)) throw fit_error("fit_pulse: degenerate histogram (zero width)");

    Eigen::Vector4d p(max_count, centroid, std::sqrt(var), 2.0);

    double lambda = 1e-3;
    double cost = weighted_cost(samples, p);
    std::size_t iterations = 0;
    const std::size_t max_iter = 200;

    for (; iterations < max_iter; ++iterations) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        for (const auto& [t, c] : samples) {
            const double w = 1.0 / std::max(c, 1.0);
            const double r = Model::eval(p, t) - c;
            const Eigen::Vector4d g = Model::gradient(p, t);
            jtj += w * g * g.transpose();
            jtr += w * g * r;
        }

        // Jacobi-precondition: parameter scales differ by many decades in SI
        // units, which would otherwise defeat the rank check.
        Eigen::Vector4d d;
        for (int k = 0; k < 4; ++k) {
            if (!(jtj(k, k) > 0.0))
                throw fit_error("fit_pulse: parameter " + std::to_string(k) +
                                " is unidentifiable from the data");
            d[k] = 1.0 / std::sqrt(jtj(k, k));
        }
        Eigen::Matrix4d aug = d.asDiagonal() * jtj * d.asDiagonal();
        for (int k = 0; k < 4; ++k) aug(k, k) *= (1.0 + lambda);
        Eigen::FullPivLU<Eigen::Matrix4d> lu(aug);
        if (!lu.isInvertible())
            throw fit_error("fit_pulse: singular normal equations (underdetermined data)");
        const Eigen::Vector4d step = d.asDiagonal() * lu.solve(Eigen::Vector4d(-(d.asDiagonal() * jtr)));

        const Eigen::Vector4d trial = p + step;
        bool ok = trial[0] > 0.0 && trial[2] > 0.0 && trial[3] > 0.0 && trial.allFinite();
        double trial_cost = ok ? weighted_cost(samples, trial) : std::numeric_limits<double>::infinity();
        if (ok && trial_cost <= cost) {
            const double improvement = cost - trial_cost;
            p = trial;
            cost = trial_cost;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (improvement < 1e-14 * (cost + 1e-30) && step.norm() < 1e-12 * (p.norm() + 1.0)) {
                ++iterations;
                break;
            }
        } else {
            lambda *= 4.0;
            if (lambda > 1e12)
                throw fit_error("fit_pulse: no descent direction found (degenerate or non-pulse data)");
        }
    }

    // Covariance from the weighted normal matrix, scaled by reduced chi^2.
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    for (const auto& [t, c] : samples) {
        const double w = 1.0 / std::max(c, 1.0);
        const Eigen::Vector4d g = Model::gradient(p, t);
        jtj += w * g * g.transpose();
    }
    Eigen::Vector4d d;
    for (int k = 0; k < 4; ++k) {
        if (!(jtj(k, k) > 0.0)) throw fit_error("fit_pulse: singular covariance (underdetermined data)");
        d[k] = 1.0 / std::sqrt(jtj(k, k));
    }
    const Eigen::Matrix4d scaled = d.asDiagonal() * jtj * d.asDiagonal();
    Eigen::FullPivLU<Eigen::Matrix4d> lu(scaled);
    if (!lu.isInvertible())
        throw fit_error("fit_pulse: singular covariance (underdetermined data)");
    const std::size_t dof = samples.size() > 4 ? samples.size() - 4 : 1;
    const double scale = cost / static_cast<double>(dof);
    const Eigen::Matrix4d cov = d.asDiagonal() * lu.inverse() * d.asDiagonal() * scale;

    PulseFitResult out;
    out.shape.amplitude = p[0];
    out.shape.center = p[1];
    out.shape.sigma = p[2];
    out.shape.beta = p[3];
    out.shape.validate();
    out.amplitude_err = std::sqrt(std::max(cov(0, 0), 0.0));
    out.center_err = std::sqrt(std::max(cov(1, 1), 0.0));
    out.sigma_err = std::sqrt(std::max(cov(2, 2), 0.0));
    out.beta_err = std::sqrt(std::max(cov(3, 3), 0.0));
    out.fwhm_value = fwhm(p[2], p[3]);
    // FWHM error from (sigma, beta) covariance: T = 2 sqrt2 (ln2)^(1/beta) sigma.
    const double dT_dsigma = out.fwhm_value / p[2];
    const double dT_dbeta = -out.fwhm_value * std::log(std::log(2.0)) / (p[3] * p[3]);
    const double var_fwhm = dT_dsigma * dT_dsigma * cov(2, 2) + dT_dbeta * dT_dbeta * cov(3, 3) +
                            2.0 * dT_dsigma * dT_dbeta * cov(2, 3);
    out.fwhm_err = std::sqrt(std::max(var_fwhm, 0.0));
    out.chi2 = cost;
    out.dof = dof;
    out.iterations = iterations;
    return out;
}

}  // namespace ramanhom
