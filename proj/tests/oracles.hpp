#pragma once

// Reference computations that share no code with the library: dense grid
// Bayes filtering, Gauss-Hermite quadrature, point-sampled ray rasterisation
// and particle propagation.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double normal_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return std::exp(-0.5 * r * r / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

struct Moments {
  double mean{0.0};
  double var{0.0};
};

// Posterior moments of a scalar state with Gaussian prior and an arbitrary
// likelihood, by brute-force evaluation on a uniform grid spanning +-span
// prior standard deviations.
inline Moments grid_bayes_1d(double prior_mean, double prior_var, const std::function<double(double)>& lik,
                             int points = 40001, double span = 12.0) {
  const double sd = std::sqrt(prior_var);
  const double lo = prior_mean - span * sd;
  const double step = 2.0 * span * sd / (points - 1);
  double w_sum = 0.0, m1 = 0.0;
  std::vector<double> w(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = lo + i * step;
    w[i] = normal_pdf(x, prior_mean, prior_var) * lik(x);
    w_sum += w[i];
    m1 += w[i] * x;
  }
  Moments out;
  out.mean = m1 / w_sum;
  double m2 = 0.0;
  for (int i = 0; i < points; ++i) {
    const double d = lo + i * step - out.mean;
    m2 += w[i] * d * d;
  }
  out.var = m2 / w_sum;
  return out;
}

// Physicists' Gauss-Hermite rule via the Golub-Welsch eigenproblem:
// integral of exp(-t^2) f(t) dt ~= sum w_i f(t_i).
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) j(i, i - 1) = j(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> nodes(n), weights(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = std::sqrt(std::numbers::pi) * v0 * v0;
  }
  return {nodes, weights};
}

// E[f(X)] for X ~ N(mean, cov) in 2-D with an n x n tensor Gauss-Hermite rule.
inline double gauss_hermite_expectation_2d(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                           const std::function<double(const Eigen::Vector2d&)>& f,
                                           int n = 41) {
  const auto [t, w] = gauss_hermite(n);
  const Eigen::Matrix2d l = Eigen::LLT<Eigen::Matrix2d>(cov).matrixL();
  double sum = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const Eigen::Vector2d u(std::sqrt(2.0) * t[a], std::sqrt(2.0) * t[b]);
      sum += w[a] * w[b] * f(mean + l * u);
    }
  return sum / std::numbers::pi;
}

// Cells visited by a ray, found by stepping a point along it. Each cell is
// listed once, in order of first visit.
struct SampledCell {
  int row;
  int col;
};

inline std::vector<SampledCell> sample_ray(double origin_x, double origin_y, double resolution,
                                           double x0, double y0, double angle, double length,
                                           double step_fraction = 0.01) {
  std::vector<SampledCell> cells;
  const double step = step_fraction * resolution;
  const double dx = std::cos(angle), dy = std::sin(angle);
  for (double s = 0.0; s <= length; s += step) {
    const double x = x0 + s * dx, y = y0 + s * dy;
    const SampledCell c{static_cast<int>(std::floor((y - origin_y) / resolution)),
                        static_cast<int>(std::floor((x - origin_x) / resolution))};
    if (cells.empty() || cells.back().row != c.row || cells.back().col != c.col) cells.push_back(c);
  }
  return cells;
}

// Sample mean and covariance of a unicycle step applied to particles drawn
// from N(mean, cov) with additive noise N(0, q).
inline std::pair<Eigen::Vector3d, Eigen::Matrix3d> propagate_particles(
    const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov, const Eigen::Matrix3d& q, double v,
    double omega, double dt, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Matrix3d lc = Eigen::LLT<Eigen::Matrix3d>(cov).matrixL();
  const Eigen::Matrix3d lq = Eigen::LLT<Eigen::Matrix3d>(q).matrixL();
  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(n));
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (auto& p : out) {
    const Eigen::Vector3d x = mean + lc * Eigen::Vector3d(g(rng), g(rng), g(rng));
    p = Eigen::Vector3d(x(0) + v * std::cos(x(2)) * dt, x(1) + v * std::sin(x(2)) * dt, x(2) + omega * dt) +
        lq * Eigen::Vector3d(g(rng), g(rng), g(rng));
    m += p;
  }
  m /= n;
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  for (const auto& p : out) c += (p - m) * (p - m).transpose();
  c /= (n - 1);
  return {m, c};
}

}  // namespace oracle
