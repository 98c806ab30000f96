#pragma once

#include "choreo/autodiff.hpp"

#include <span>
#include <vector>

namespace choreo::ssm {

/// Zero-order-hold coefficients of a scalar mode: a_bar = exp(delta a),
/// b_bar = (delta a)^-1 (exp(delta a) - 1) delta b.
struct Zoh {
    double a_bar;
    double b_bar;
};

/// Below this |delta a| the inverse is replaced by b_bar = delta b (1 + delta a / 2).
inline constexpr double kSeriesThreshold = 1e-6;

/// Throws NumericalDegeneracy for non-positive or non-finite steps.
Zoh discretize(double delta, double a, double b);

/// (exp(z) - 1) / z and its derivative, with series fallbacks near zero.
double zoh_phi(double z);
double zoh_phi_prime(double z);

/// Diagonal continuous-time system with N modes; N = 1 is the scalar case.
struct DiagonalSystem {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;

    std::size_t modes() const { return a.size(); }
};

/// Recurrent form with per-step delta: h_l = a_bar_l h_{l-1} + b_bar_l u_l,
/// y_l = c . h_l, h_{-1} = 0.
std::vector<double> scan(std::span<const double> u, const DiagonalSystem& sys, std::span<const double> deltas);

/// K = (c b_bar, c a_bar b_bar, ..., c a_bar^{L-1} b_bar) for a fixed step.
std::vector<double> kernel(const DiagonalSystem& sys, double delta, int length);

/// Causal convolution of u with kernel(sys, delta, |u|).
std::vector<double> kernel_conv(std::span<const double> u, const DiagonalSystem& sys, double delta);

/// Differentiable selective scan over `groups` independent sequences of
/// `length` frames. u and delta are (groups*length) x D; a, b, c are D x N
/// (diagonal state per channel). Returns (groups*length) x D.
ad::Var selective_scan(const ad::Var& u, const ad::Var& delta, const ad::Var& a, const ad::Var& b,
                       const ad::Var& c, int groups, int length);

}  // namespace choreo::ssm
