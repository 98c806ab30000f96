#pragma once

#include "choreo/checkpoint.hpp"
#include "choreo/losses.hpp"
#include "choreo/motion.hpp"
#include "choreo/music.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace choreo::train {

struct TrainConfig {
    double learning_rate = 5e-5;
    int steps = 2000;
    int batch_size = 4;
    loss::LossWeights weights;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

/// Training example in sorted dancer order with its swap mode.
struct Sample {
    motion::GroupMotion motion;
    MusicTrack music;
    SwapMode swap;
};

/// Sorts dancers left to right (frame 0) and derives the final-frame swap mode.
Sample prepare_sample(const motion::GroupMotion& motion, const MusicTrack& music);

class Adam {
public:
    explicit Adam(std::vector<NamedParam> params) : params_(std::move(params)) {}

    /// One update from the gradients currently stored on the parameters.
    void step(const TrainConfig& cfg);
    long steps_taken() const { return t_; }

private:
    std::vector<NamedParam> params_;
    std::vector<Mat> m_, v_;
    long t_ = 0;
};

/// Graph for one example at a fixed step and noise: corrupt, denoise,
/// adapt the footwork, merge bodies, evaluate the five terms.
loss::LossTerms forward_loss(Model& model, const Sample& sample, int t, const Mat& noise,
                             const diffusion::NoiseSchedule& sched, const motion::SkeletonSpec& skel);

struct StepResult {
    loss::LossComponents components;  // batch means
    double total = 0.0;
};

/// Samples t ~ U[0, T) and Gaussian noise per example from rng, accumulates
/// gradients of the batch-mean weighted loss, and applies one Adam update.
/// Throws NonFiniteLoss when any term is not finite.
StepResult train_step(Model& model, Adam& opt, std::span<const Sample> batch, const diffusion::NoiseSchedule& sched,
                      const TrainConfig& cfg, Rng& rng, const motion::SkeletonSpec& skel);

struct StepRecord {
    int step = 0;
    loss::LossComponents components;
    double total = 0.0;
};

std::string format_log_line(const StepRecord& r);

/// Trains on a small corpus; batch b of step s takes corpus items
/// (s * B + i) mod N. Every record is also passed to `on_step` when set.
std::vector<StepRecord> overfit_run(Model& model, std::span<const Sample> corpus, const TrainConfig& cfg,
                                    const motion::SkeletonSpec& skel,
                                    const std::function<void(const StepRecord&)>& on_step = {});

/// Mean weighted loss over the corpus at a fixed grid of steps
/// (k * T / probes, k = 0..probes-1) with noise drawn from `seed`.
double evaluation_loss(Model& model, std::span<const Sample> corpus, const loss::LossWeights& weights,
                       const motion::SkeletonSpec& skel, std::uint64_t seed, int probes = 8);

struct GradCheckOptions {
    /// Central-difference step. Smaller steps let roundoff in the O(40) loss
    /// swamp gradients near the floor at d = 16.
    double epsilon = 1e-4;
    int samples = 240;
    std::uint64_t seed = 0;
    /// Denominator floor of the relative error. Attention key biases have an
    /// identically zero gradient, so entries below the floor are held to an
    /// absolute bound of tolerance * floor instead.
    double floor = 1e-4;
    loss::LossWeights weights;
    /// Restrict sampling to parameters whose name starts with one of these.
    std::vector<std::string> name_prefixes;
};

struct GradCheckEntry {
    std::string name;
    std::string group;
    Eigen::Index index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<GradCheckEntry> entries;
    std::map<std::string, double> max_by_group;
};

/// Reverse-mode gradients of the weighted loss against central differences
/// on parameters sampled round-robin across parameter groups.
GradCheckReport grad_check(Model& model, const Sample& sample, int t, const Mat& noise,
                           const diffusion::NoiseSchedule& sched, const motion::SkeletonSpec& skel,
                           const GradCheckOptions& opts);

}  // namespace choreo::train
