#include "choreo/diffusion.hpp"

#include "choreo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace choreo {

SwapMode SwapMode::identity(int dancers) {
    SwapMode s;
    for (int c = 0; c < dancers; ++c) s.order.push_back(c);
    return s;
}

void SwapMode::validate() const {
    std::vector<bool> seen(order.size(), false);
    for (int v : order) {
        if (v < 0 || v >= dancers() || seen[v]) throw InvalidConfig("swap order must be a permutation of 0..C-1");
        seen[v] = true;
    }
}

}  // namespace choreo

namespace choreo::diffusion {

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "linear") return ScheduleKind::Linear;
    if (name == "cosine") return ScheduleKind::Cosine;
    throw InvalidConfig("unknown schedule kind '" + name + "'");
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::Linear ? "linear" : "cosine"; }

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
    if (steps < 1) throw InvalidConfig("diffusion needs at least one step");
    constexpr double kMaxBeta = 0.999;
    std::vector<double> beta(steps);
    if (kind == ScheduleKind::Linear) {
        // Standard 1e-4 .. 2e-2 range rescaled to the step count.
        const double scale = 1000.0 / steps;
        const double lo = 1e-4 * scale, hi = 0.02 * scale;
        for (int t = 0; t < steps; ++t) {
            const double f = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
            beta[t] = std::min(lo + f * (hi - lo), kMaxBeta);
        }
    } else {
        constexpr double s = 0.008;
        auto f = [&](double t) {
            const double c = std::cos((t / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
            return c * c;
        };
        for (int t = 0; t < steps; ++t) beta[t] = std::min(1.0 - f(t + 1.0) / f(t), kMaxBeta);
    }
    NoiseSchedule sched;
    sched.steps = steps;
    sched.kind = kind;
    sched.alpha.resize(steps);
    sched.alpha_bar.resize(steps);
    double prod = 1.0;
    for (int t = 0; t < steps; ++t) {
        sched.alpha[t] = 1.0 - beta[t];
        prod *= sched.alpha[t];
        sched.alpha_bar[t] = prod;
    }
    return sched;
}

namespace {

void check_step(const NoiseSchedule& sched, int t) {
    if (t < 0 || t >= sched.steps) throw InvalidStep("step " + std::to_string(t) + " outside the schedule");
}

void check_same_shape(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("diffusion tensors differ in shape");
}

}  // namespace

Mat q_sample(const Mat& x0, int t, const Mat& noise, const NoiseSchedule& sched) {
    check_step(sched, t);
    check_same_shape(x0, noise);
    const double ab = sched.alpha_bar[t];
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

Posterior posterior(const NoiseSchedule& sched, int t) {
    check_step(sched, t);
    if (t == 0) throw InvalidStep("no ancestral step from t = 0");
    const double a = sched.alpha[t];
    const double ab = sched.alpha_bar[t];
    const double ab_prev = sched.alpha_bar[t - 1];
    Posterior p;
    p.x0_coef = std::sqrt(ab_prev) * (1.0 - a) / (1.0 - ab);
    p.xt_coef = std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab);
    p.variance = t == 1 ? 0.0 : (1.0 - a) * (1.0 - ab_prev) / (1.0 - ab);
    return p;
}

Mat p_step(const Mat& x_t, const Mat& x0_hat, int t, const Mat& noise, const NoiseSchedule& sched) {
    check_same_shape(x_t, x0_hat);
    check_same_shape(x_t, noise);
    const Posterior p = posterior(sched, t);
    Mat out = p.x0_coef * x0_hat + p.xt_coef * x_t;
    if (p.variance > 0.0) out += std::sqrt(p.variance) * noise;
    return out;
}

Mat sample_from(const Denoiser& denoiser, Mat x, const MusicTrack& music, const SwapMode& swap,
                const NoiseSchedule& sched, Rng& rng, SampleOptions opts) {
    for (int t = sched.steps - 1; t >= 1; --t) {
        const Mat x0_hat = denoiser(x, t, music, swap);
        check_same_shape(x, x0_hat);
        Mat noise = Mat::Zero(x.rows(), x.cols());
        if (t > 1) {
            Mat draw = gaussian(x.rows(), x.cols(), rng);
            if (opts.inject_noise) noise = std::move(draw);
        }
        x = p_step(x, x0_hat, t, noise, sched);
    }
    Mat out = denoiser(x, 0, music, swap);
    check_same_shape(x, out);
    return out;
}

Mat sample_loop(const Denoiser& denoiser, Eigen::Index rows, Eigen::Index cols, const MusicTrack& music,
                const SwapMode& swap, const NoiseSchedule& sched, std::uint64_t seed, SampleOptions opts) {
    Rng rng(seed);
    Mat x = gaussian(rows, cols, rng);
    return sample_from(denoiser, std::move(x), music, swap, sched, rng, opts);
}

}  // namespace choreo::diffusion
