#include "choreo/lgds.hpp"

#include "choreo/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace choreo::lgds {

WindowPlan plan_windows(int total, int window_len, int hop) {
    if (window_len < 1 || hop < 1 || hop > window_len)
        throw InvalidConfig("window length must be >= 1 and hop within [1, window length]");
    if (total < window_len)
        throw InvalidLength("total " + std::to_string(total) + " shorter than the window " + std::to_string(window_len));
    if ((total - window_len) % hop != 0)
        throw InvalidLength("total - window (" + std::to_string(total - window_len) + ") is not a multiple of hop " +
                            std::to_string(hop));
    WindowPlan plan;
    plan.total = total;
    plan.window_len = window_len;
    plan.hop = hop;
    for (int k = 0; k <= (total - window_len) / hop; ++k) plan.segments.emplace_back(k * hop, k * hop + window_len);
    return plan;
}

int round_up_total(int requested, int window_len, int hop) {
    if (requested <= window_len) return window_len;
    const int extra = requested - window_len;
    return window_len + (extra + hop - 1) / hop * hop;
}

Mat renoise_segment(const Mat& x0_segment, const diffusion::NoiseSchedule& sched, std::uint64_t seed) {
    Rng rng(seed);
    const Mat noise = gaussian(x0_segment.rows(), x0_segment.cols(), rng);
    return diffusion::q_sample(x0_segment, sched.steps - 1, noise, sched);
}

Mat slice_frames(const Mat& x, int dancers, int frames, int start, int count) {
    if (x.rows() != static_cast<Eigen::Index>(dancers) * frames || start < 0 || count < 0 || start + count > frames)
        throw ShapeMismatch("frame slice out of range");
    Mat out(static_cast<Eigen::Index>(dancers) * count, x.cols());
    for (int c = 0; c < dancers; ++c)
        out.middleRows(static_cast<Eigen::Index>(c) * count, count) =
            x.middleRows(static_cast<Eigen::Index>(c) * frames + start, count);
    return out;
}

Mat concat_frames(const Mat& a, int frames_a, const Mat& b, int frames_b, int dancers) {
    if (a.rows() != static_cast<Eigen::Index>(dancers) * frames_a ||
        b.rows() != static_cast<Eigen::Index>(dancers) * frames_b || a.cols() != b.cols())
        throw ShapeMismatch("frame concatenation shape mismatch");
    const int total = frames_a + frames_b;
    Mat out(static_cast<Eigen::Index>(dancers) * total, a.cols());
    for (int c = 0; c < dancers; ++c) {
        out.middleRows(static_cast<Eigen::Index>(c) * total, frames_a) =
            a.middleRows(static_cast<Eigen::Index>(c) * frames_a, frames_a);
        out.middleRows(static_cast<Eigen::Index>(c) * total + frames_a, frames_b) =
            b.middleRows(static_cast<Eigen::Index>(c) * frames_b, frames_b);
    }
    return out;
}

LongSample extend_sequence(const diffusion::Denoiser& denoiser, int dancers, int total, int window_len, int hop,
                           const MusicTrack& music, const SwapMode& initial_swap,
                           const diffusion::NoiseSchedule& sched, std::uint64_t seed,
                           diffusion::SampleOptions opts) {
    const WindowPlan plan = plan_windows(total, window_len, hop);
    if (music.frames() < total) throw ShapeMismatch("music track shorter than the requested sequence");
    if (initial_swap.dancers() != dancers) throw ShapeMismatch("swap order length differs from the dancer count");
    constexpr Eigen::Index kDims = motion::kFrameDims;
    const int overlap = plan.overlap();

    Rng rng(seed);
    std::vector<WindowTrace> traces;
    Mat kept;
    int kept_frames = 0;
    for (const auto& [start, end] : plan.segments) {
        WindowTrace tr;
        tr.start = start;
        tr.end = end;
        const MusicTrack window_music = music.slice(start, window_len);
        if (traces.empty()) {
            tr.swap = initial_swap;
            tr.input = gaussian(static_cast<Eigen::Index>(dancers) * window_len, kDims, rng);
        } else {
            tr.swap.order = motion::final_frame_order(motion::GroupMotion(dancers, kept_frames, kept));
            tr.prefix_source = slice_frames(kept, dancers, kept_frames, start, overlap);
            tr.renoise_seed = rng();
            tr.renoised_prefix = renoise_segment(tr.prefix_source, sched, tr.renoise_seed);
            const Mat fresh = gaussian(static_cast<Eigen::Index>(dancers) * hop, kDims, rng);
            tr.input = concat_frames(tr.renoised_prefix, overlap, fresh, hop, dancers);
        }
        const Mat out = diffusion::sample_from(denoiser, tr.input, window_music, tr.swap, sched, rng, opts);
        if (traces.empty()) {
            kept = out;
            kept_frames = window_len;
        } else {
            const Mat tail = slice_frames(out, dancers, window_len, overlap, hop);
            kept = concat_frames(kept, kept_frames, tail, hop, dancers);
            kept_frames += hop;
        }
        traces.push_back(std::move(tr));
    }
    return {motion::GroupMotion(dancers, kept_frames, std::move(kept)), plan, std::move(traces)};
}

SeamReport seam_report(const motion::GroupMotion& m, const WindowPlan& plan) {
    std::vector<bool> seam(static_cast<std::size_t>(m.frames()), false);
    for (std::size_t k = 1; k < plan.segments.size(); ++k) {
        const int s = plan.segments[k].first + plan.overlap();
        if (s > 0 && s < m.frames()) seam[s] = true;
    }
    SeamReport r;
    for (int c = 0; c < m.dancers(); ++c)
        for (int l = 1; l < m.frames(); ++l) {
            const double step = (m.root(c, l) - m.root(c, l - 1)).norm();
            double& slot = seam[l] ? r.max_seam_jump : r.max_within_step;
            slot = std::max(slot, step);
        }
    if (r.max_within_step > 0.0)
        r.ratio = r.max_seam_jump / r.max_within_step;
    else
        r.ratio = r.max_seam_jump > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return r;
}

}  // namespace choreo::lgds
