#include "choreo/ssm.hpp"

#include "choreo/errors.hpp"

#include <cmath>

namespace choreo::ssm {

double zoh_phi(double z) {
    if (std::abs(z) < kSeriesThreshold) return 1.0 + z / 2.0;
    return std::expm1(z) / z;
}

double zoh_phi_prime(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 3.0 + z * z / 8.0;
    return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

Zoh discretize(double delta, double a, double b) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw NumericalDegeneracy("step size must be positive and finite");
    const double z = delta * a;
    if (!std::isfinite(z) || !std::isfinite(b)) throw NumericalDegeneracy("non-finite delta * A");
    return {std::exp(z), zoh_phi(z) * delta * b};
}

namespace {

void check_system(const DiagonalSystem& sys) {
    if (sys.a.empty() || sys.b.size() != sys.a.size() || sys.c.size() != sys.a.size())
        throw ShapeMismatch("diagonal system needs matching a, b, c");
}

}  // namespace

std::vector<double> scan(std::span<const double> u, const DiagonalSystem& sys, std::span<const double> deltas) {
    check_system(sys);
    if (deltas.size() != u.size()) throw ShapeMismatch("one delta per step required");
    std::vector<double> h(sys.modes(), 0.0);
    std::vector<double> y(u.size(), 0.0);
    for (std::size_t l = 0; l < u.size(); ++l) {
        double acc = 0.0;
        for (std::size_t n = 0; n < sys.modes(); ++n) {
            const Zoh z = discretize(deltas[l], sys.a[n], sys.b[n]);
            h[n] = z.a_bar * h[n] + z.b_bar * u[l];
            acc += sys.c[n] * h[n];
        }
        y[l] = acc;
    }
    return y;
}

std::vector<double> kernel(const DiagonalSystem& sys, double delta, int length) {
    check_system(sys);
    std::vector<double> k(static_cast<std::size_t>(length), 0.0);
    for (std::size_t n = 0; n < sys.modes(); ++n) {
        const Zoh z = discretize(delta, sys.a[n], sys.b[n]);
        double power = 1.0;
        for (int i = 0; i < length; ++i) {
            k[i] += sys.c[n] * power * z.b_bar;
            power *= z.a_bar;
        }
    }
    return k;
}

std::vector<double> kernel_conv(std::span<const double> u, const DiagonalSystem& sys, double delta) {
    const auto k = kernel(sys, delta, static_cast<int>(u.size()));
    std::vector<double> y(u.size(), 0.0);
    for (std::size_t l = 0; l < u.size(); ++l)
        for (std::size_t j = 0; j <= l; ++j) y[l] += k[j] * u[l - j];
    return y;
}

ad::Var selective_scan(const ad::Var& u, const ad::Var& delta, const ad::Var& a, const ad::Var& b,
                       const ad::Var& c, int groups, int length) {
    const Eigen::Index channels = u.cols();
    const Eigen::Index modes = a.cols();
    if (u.rows() != static_cast<Eigen::Index>(groups) * length || delta.rows() != u.rows() ||
        delta.cols() != channels)
        throw ShapeMismatch("selective_scan: u/delta shape");
    if (a.rows() != channels || b.rows() != channels || c.rows() != channels || b.cols() != modes ||
        c.cols() != modes)
        throw ShapeMismatch("selective_scan: a/b/c must be D x N");

    const Mat& U = u.value();
    const Mat& D = delta.value();
    const Mat& A = a.value();
    const Mat& B = b.value();
    const Mat& C = c.value();
    if (!(D.array() > 0.0).all() || !D.allFinite()) throw NumericalDegeneracy("selective_scan: delta must be > 0");

    Mat y = Mat::Zero(u.rows(), channels);
    auto states = std::make_shared<Mat>(u.rows(), channels * modes);
    for (int g = 0; g < groups; ++g) {
        for (Eigen::Index d = 0; d < channels; ++d) {
            for (Eigen::Index n = 0; n < modes; ++n) {
                double h = 0.0;
                for (int l = 0; l < length; ++l) {
                    const Eigen::Index r = static_cast<Eigen::Index>(g) * length + l;
                    const Zoh z = discretize(D(r, d), A(d, n), B(d, n));
                    h = z.a_bar * h + z.b_bar * U(r, d);
                    (*states)(r, d * modes + n) = h;
                    y(r, d) += C(d, n) * h;
                }
            }
        }
    }

    auto node = std::make_shared<ad::Node>();
    node->value = std::move(y);
    node->requires_grad = ad::needs_grad({&u, &delta, &a, &b, &c});
    if (!node->requires_grad) return ad::Var(node);
    auto pu = u.ptr(), pd = delta.ptr(), pa = a.ptr(), pb = b.ptr(), pc = c.ptr();
    node->parents = {pu, pd, pa, pb, pc};
    node->backward = [pu, pd, pa, pb, pc, states, groups, length, channels, modes](ad::Node& n) {
        const Mat& U = pu->value;
        const Mat& D = pd->value;
        const Mat& A = pa->value;
        const Mat& B = pb->value;
        const Mat& C = pc->value;
        Mat gu = Mat::Zero(U.rows(), channels), gdelta = Mat::Zero(U.rows(), channels);
        Mat ga = Mat::Zero(channels, modes), gb = Mat::Zero(channels, modes), gc = Mat::Zero(channels, modes);
        for (int g = 0; g < groups; ++g) {
            for (Eigen::Index d = 0; d < channels; ++d) {
                for (Eigen::Index m = 0; m < modes; ++m) {
                    const double am = A(d, m), bm = B(d, m), cm = C(d, m);
                    double carry = 0.0;
                    for (int l = length - 1; l >= 0; --l) {
                        const Eigen::Index r = static_cast<Eigen::Index>(g) * length + l;
                        const double gy = n.grad(r, d);
                        const double h = (*states)(r, d * modes + m);
                        const double h_prev = l > 0 ? (*states)(r - 1, d * modes + m) : 0.0;
                        gc(d, m) += gy * h;
                        const double gh = gy * cm + carry;
                        const double dt = D(r, d);
                        const double z = dt * am;
                        const double abar = std::exp(z);
                        const double phi = zoh_phi(z);
                        const double dphi = zoh_phi_prime(z);
                        const double bbar = dt * bm * phi;
                        const double g_abar = gh * h_prev;
                        const double g_bbar = gh * U(r, d);
                        gu(r, d) += gh * bbar;
                        gdelta(r, d) += g_abar * abar * am + g_bbar * (bm * phi + dt * bm * dphi * am);
                        ga(d, m) += g_abar * abar * dt + g_bbar * dt * bm * dphi * dt;
                        gb(d, m) += g_bbar * dt * phi;
                        carry = abar * gh;
                    }
                }
            }
        }
        pu->accumulate(gu);
        pd->accumulate(gdelta);
        pa->accumulate(ga);
        pb->accumulate(gb);
        pc->accumulate(gc);
    };
    return ad::Var(node);
}

}  // namespace choreo::ssm
