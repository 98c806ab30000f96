#pragma once

#include "choreo/diffusion.hpp"
#include "choreo/motion.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace choreo::lgds {

/// Half-open [start, end) frame ranges of equal length, spaced by hop.
struct WindowPlan {
    int total = 0;
    int window_len = 150;
    int hop = 75;
    std::vector<std::pair<int, int>> segments;

    int overlap() const { return window_len - hop; }
};

/// Throws InvalidLength unless total >= window_len and hop divides
/// total - window_len; InvalidConfig for hop outside [1, window_len].
WindowPlan plan_windows(int total, int window_len, int hop);

/// Smallest total >= requested that plan_windows accepts.
int round_up_total(int requested, int window_len, int hop);

/// q_sample at the last diffusion step with noise drawn from `seed`.
Mat renoise_segment(const Mat& x0_segment, const diffusion::NoiseSchedule& sched, std::uint64_t seed);

/// Frames [start, start + count) of every dancer of a (C*L) x K tensor.
Mat slice_frames(const Mat& x, int dancers, int frames, int start, int count);

/// Per-dancer concatenation along frames: (C*La) x K and (C*Lb) x K.
Mat concat_frames(const Mat& a, int frames_a, const Mat& b, int frames_b, int dancers);

struct WindowTrace {
    int start = 0;
    int end = 0;
    SwapMode swap;
    Mat input;            // x_{T-1} fed to the reverse chain
    Mat renoised_prefix;  // empty for the first window
    Mat prefix_source;    // kept frames the prefix was noised from
    std::uint64_t renoise_seed = 0;
};

struct LongSample {
    motion::GroupMotion motion;
    WindowPlan plan;
    std::vector<WindowTrace> windows;
};

/// Autoregressive window extension: the first window starts from fresh noise,
/// every later window starts from [renoised overlap | fresh noise], keeps the
/// already committed overlap, and appends its last `hop` frames.
LongSample extend_sequence(const diffusion::Denoiser& denoiser, int dancers, int total, int window_len, int hop,
                           const MusicTrack& music, const SwapMode& initial_swap,
                           const diffusion::NoiseSchedule& sched, std::uint64_t seed,
                           diffusion::SampleOptions opts = {});

struct SeamReport {
    double max_seam_jump = 0.0;     // largest root step across a window seam
    double max_within_step = 0.0;   // largest root step elsewhere
    double ratio = 0.0;             // seam / within (0 when within is 0 and seam is 0)
};

SeamReport seam_report(const motion::GroupMotion& motion, const WindowPlan& plan);

}  // namespace choreo::lgds
