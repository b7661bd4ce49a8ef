#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "symt/rng.hpp"

namespace symt {

// Unit-ball geometry for the three sequence-space norms used throughout.
enum class Ball { L1, L2, Linf };

inline Ball dual_ball(Ball b) {
    switch (b) {
        case Ball::L1: return Ball::Linf;
        case Ball::Linf: return Ball::L1;
        default: return Ball::L2;
    }
}

inline std::string to_string(Ball b) {
    switch (b) {
        case Ball::L1: return "l1";
        case Ball::L2: return "l2";
        default: return "linf";
    }
}

inline Ball ball_from_string(const std::string& s) {
    if (s == "l1") return Ball::L1;
    if (s == "l2") return Ball::L2;
    if (s == "linf") return Ball::Linf;
    throw std::invalid_argument("unknown ball: " + s);
}

inline double ball_norm(Ball b, const Eigen::VectorXd& x) {
    switch (b) {
        case Ball::L1: return x.lpNorm<1>();
        case Ball::L2: return x.norm();
        default: return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
    }
}

// Scale to the unit sphere of the ball. Zero input maps to e1.
inline Eigen::VectorXd normalize_to_sphere(Ball b, Eigen::VectorXd x) {
    const double nrm = ball_norm(b, x);
    if (nrm <= 0.0) {
        x.setZero();
        if (x.size() > 0) x(0) = 1.0;
        return x;
    }
    return x / nrm;
}

// Euclidean projection onto the l1 ball of radius 1 (sort-based threshold).
inline Eigen::VectorXd project_l1(Eigen::VectorXd v) {
    if (v.lpNorm<1>() <= 1.0) return v;
    Eigen::VectorXd u = v.cwiseAbs();
    std::vector<double> s(u.data(), u.data() + u.size());
    std::sort(s.begin(), s.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        cum += s[j];
        const double t = (cum - 1.0) / static_cast<double>(j + 1);
        if (t >= (j + 1 < s.size() ? s[j + 1] : 0.0)) {
            theta = t;
            break;
        }
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::max(0.0, std::abs(v(i)) - theta);
        v(i) = v(i) >= 0 ? mag : -mag;
    }
    return v;
}

inline Eigen::VectorXd project_to_ball(Ball b, Eigen::VectorXd x) {
    switch (b) {
        case Ball::L1: return project_l1(std::move(x));
        case Ball::L2: {
            const double n = x.norm();
            return n > 1.0 ? Eigen::VectorXd(x / n) : x;
        }
        default: return x.cwiseMax(-1.0).cwiseMin(1.0);
    }
}

// Operator norm of M between spaces both carrying the given ball norm.
inline double operator_norm(Ball b, const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    switch (b) {
        case Ball::L1: return M.cwiseAbs().colwise().sum().maxCoeff();
        case Ball::Linf: return M.cwiseAbs().rowwise().sum().maxCoeff();
        default: {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            return svd.singularValues()(0);
        }
    }
}

inline Eigen::VectorXd random_unit(Ball b, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = g(rng);
    return normalize_to_sphere(b, std::move(x));
}

// Random orthonormal d x d matrix (QR of a Gaussian sample, sign-fixed).
inline Eigen::MatrixXd random_rotation(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    return Q;
}

}  // namespace symt
