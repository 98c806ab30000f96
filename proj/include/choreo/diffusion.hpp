#pragma once

#include "choreo/music.hpp"
#include "choreo/swap_mode.hpp"
#include "choreo/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace choreo::diffusion {

enum class ScheduleKind { Linear, Cosine };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

/// Index t = 0 is the least-noised state; alpha_bar[t] = prod_{s<=t} alpha[s].
struct NoiseSchedule {
    int steps = 0;
    ScheduleKind kind = ScheduleKind::Cosine;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
};

NoiseSchedule make_schedule(int steps, ScheduleKind kind);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
Mat q_sample(const Mat& x0, int t, const Mat& noise, const NoiseSchedule& sched);

/// Coefficients of q(x_{t-1} | x_t, x0): mean = x0_coef x0 + xt_coef x_t.
struct Posterior {
    double x0_coef;
    double xt_coef;
    double variance;  // zero at t = 1
};

Posterior posterior(const NoiseSchedule& sched, int t);

/// One ancestral step t -> t-1 around an x0 prediction.
Mat p_step(const Mat& x_t, const Mat& x0_hat, int t, const Mat& noise, const NoiseSchedule& sched);

/// Conditional x0 predictor: (x_t, t, music, swap) -> x0-shaped tensor.
using Denoiser = std::function<Mat(const Mat& x_t, int t, const MusicTrack& music, const SwapMode& swap)>;

struct SampleOptions {
    bool inject_noise = true;  // false zeroes every per-step noise draw
};

/// Reverse chain from a given x_{T-1}. Per-step noise comes from rng.
Mat sample_from(const Denoiser& denoiser, Mat x_start, const MusicTrack& music, const SwapMode& swap,
                const NoiseSchedule& sched, Rng& rng, SampleOptions opts = {});

/// Full reverse chain starting from seeded standard Gaussian noise of shape
/// (rows x cols). Deterministic per seed.
Mat sample_loop(const Denoiser& denoiser, Eigen::Index rows, Eigen::Index cols, const MusicTrack& music,
                const SwapMode& swap, const NoiseSchedule& sched, std::uint64_t seed, SampleOptions opts = {});

}  // namespace choreo::diffusion
