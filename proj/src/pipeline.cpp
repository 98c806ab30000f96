#include "choreo/pipeline.hpp"

#include "choreo/denoiser.hpp"
#include "choreo/errors.hpp"
#include "choreo/footwork.hpp"

namespace choreo {

diffusion::Denoiser make_denoiser(Model& model) {
    return [&model](const Mat& x_t, int t, const MusicTrack& music, const SwapMode& swap) {
        ad::NoGradGuard guard;
        return gdd::denoise_forward(x_t, t, music, swap, model.gdd, model.config).value();
    };
}

namespace {

Generated refine(Model& model, motion::GroupMotion raw) {
    ad::NoGradGuard guard;
    const motion::GroupMotion adapted = footwork::adapt_footwork(raw, model.fa);
    motion::GroupMotion result = footwork::finalize(raw, adapted);
    return {std::move(raw), std::move(result)};
}

}  // namespace

Generated sample_group(Model& model, const MusicTrack& music, const SwapMode& swap, std::uint64_t seed) {
    const int C = model.config.dancers, L = music.frames();
    if (swap.dancers() != C) throw ShapeMismatch("swap order length differs from the model's dancer count");
    const auto sched = diffusion::make_schedule(model.steps, model.schedule);
    Mat raw = diffusion::sample_loop(make_denoiser(model), static_cast<Eigen::Index>(C) * L, motion::kFrameDims,
                                     music, swap, sched, seed);
    return refine(model, motion::GroupMotion(C, L, std::move(raw)));
}

GeneratedLong sample_long(Model& model, int total, int window_len, int hop, const MusicTrack& music,
                          const SwapMode& swap, std::uint64_t seed) {
    const auto sched = diffusion::make_schedule(model.steps, model.schedule);
    lgds::LongSample trace = lgds::extend_sequence(make_denoiser(model), model.config.dancers, total, window_len, hop,
                                                   music, swap, sched, seed);
    Generated g = refine(model, trace.motion);
    return {std::move(g), std::move(trace)};
}

}  // namespace choreo
