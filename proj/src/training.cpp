#include "choreo/training.hpp"

#include "choreo/denoiser.hpp"
#include "choreo/errors.hpp"
#include "choreo/footwork.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace choreo::train {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidConfig("learning rate must be >= 0");
    if (steps < 0) throw InvalidConfig("step count must be >= 0");
    if (batch_size < 1) throw InvalidConfig("batch size must be >= 1");
    weights.validate();
}

Sample prepare_sample(const motion::GroupMotion& m, const MusicTrack& music) {
    if (music.frames() != m.frames()) throw ShapeMismatch("music and motion frame counts differ");
    auto [sorted, perm] = motion::sort_dancers(m);
    SwapMode swap{motion::final_frame_order(sorted)};
    return {std::move(sorted), music, std::move(swap)};
}

void Adam::step(const TrainConfig& cfg) {
    if (m_.empty()) {
        for (const auto& p : params_) {
            m_.push_back(Mat::Zero(p.var->rows(), p.var->cols()));
            v_.push_back(Mat::Zero(p.var->rows(), p.var->cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Mat g = params_[i].var->grad();
        m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
        v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        const Mat update =
            ((m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + cfg.adam_eps)).matrix() * cfg.learning_rate;
        params_[i].var->mutable_value() -= update;
    }
}

loss::LossTerms forward_loss(Model& model, const Sample& s, int t, const Mat& noise,
                             const diffusion::NoiseSchedule& sched, const motion::SkeletonSpec& skel) {
    const int C = s.motion.dancers(), L = s.motion.frames();
    if (C != model.config.dancers) throw ShapeMismatch("sample dancer count differs from the model");
    const Mat x_t = diffusion::q_sample(s.motion.data(), t, noise, sched);
    const ad::Var raw = gdd::denoise_forward(x_t, t, s.music, s.swap, model.gdd, model.config);
    const ad::Var adapted = footwork::adapt_footwork(raw, C, L, model.fa);
    const ad::Var merged = footwork::finalize(raw, adapted);
    return loss::loss_terms(s.motion.data(), merged, C, L, skel);
}

namespace {

void zero_grads(std::vector<NamedParam>& params) {
    for (auto& p : params) p.var->zero_grad();
}

bool finite(const loss::LossComponents& c) {
    return std::isfinite(c.sim) && std::isfinite(c.fk) && std::isfinite(c.vel) && std::isfinite(c.con) &&
           std::isfinite(c.dist);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

StepResult train_step(Model& model, Adam& opt, std::span<const Sample> batch, const diffusion::NoiseSchedule& sched,
                      const TrainConfig& cfg, Rng& rng, const motion::SkeletonSpec& skel) {
    if (batch.empty()) throw InvalidConfig("empty batch");
    auto params = model.named();
    zero_grads(params);
    std::uniform_int_distribution<int> step_dist(0, sched.steps - 1);
    StepResult result;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const int t = step_dist(rng);
        const Mat noise = gaussian(s.motion.data().rows(), s.motion.data().cols(), rng);
        const loss::LossTerms terms = forward_loss(model, s, t, noise, sched, skel);
        const loss::LossComponents c = terms.values();
        if (!finite(c))
            throw NonFiniteLoss("non-finite loss at t=" + std::to_string(t) + " (sim=" + num(c.sim) +
                                " fk=" + num(c.fk) + " vel=" + num(c.vel) + " con=" + num(c.con) +
                                " dist=" + num(c.dist) + ")");
        const ad::Var total = loss::total_loss(terms, cfg.weights);
        ad::backward(ad::scale(total, inv_b));
        result.components.sim += c.sim * inv_b;
        result.components.fk += c.fk * inv_b;
        result.components.vel += c.vel * inv_b;
        result.components.con += c.con * inv_b;
        result.components.dist += c.dist * inv_b;
    }
    result.total = loss::total_loss(result.components, cfg.weights);
    opt.step(cfg);
    return result;
}

std::string format_log_line(const StepRecord& r) {
    return "step=" + std::to_string(r.step) + " sim=" + num(r.components.sim) + " fk=" + num(r.components.fk) +
           " vel=" + num(r.components.vel) + " con=" + num(r.components.con) + " dist=" + num(r.components.dist) +
           " total=" + num(r.total);
}

std::vector<StepRecord> overfit_run(Model& model, std::span<const Sample> corpus, const TrainConfig& cfg,
                                    const motion::SkeletonSpec& skel,
                                    const std::function<void(const StepRecord&)>& on_step) {
    cfg.validate();
    if (corpus.empty()) throw InvalidConfig("empty training corpus");
    const auto sched = diffusion::make_schedule(model.steps, model.schedule);
    Adam opt(model.named());
    Rng rng(cfg.seed);
    std::vector<StepRecord> curve;
    std::vector<Sample> batch;
    for (int step = 0; step < cfg.steps; ++step) {
        batch.clear();
        for (int i = 0; i < cfg.batch_size; ++i)
            batch.push_back(corpus[(static_cast<std::size_t>(step) * cfg.batch_size + i) % corpus.size()]);
        const StepResult r = train_step(model, opt, batch, sched, cfg, rng, skel);
        curve.push_back({step, r.components, r.total});
        if (on_step) on_step(curve.back());
    }
    return curve;
}

double evaluation_loss(Model& model, std::span<const Sample> corpus, const loss::LossWeights& weights,
                       const motion::SkeletonSpec& skel, std::uint64_t seed, int probes) {
    const auto sched = diffusion::make_schedule(model.steps, model.schedule);
    Rng rng(seed);
    double total = 0.0;
    int count = 0;
    for (const auto& s : corpus)
        for (int k = 0; k < probes; ++k, ++count) {
            const int t = k * sched.steps / probes;
            const Mat noise = gaussian(s.motion.data().rows(), s.motion.data().cols(), rng);
            total += loss::total_loss(forward_loss(model, s, t, noise, sched, skel).values(), weights);
        }
    return total / count;
}

GradCheckReport grad_check(Model& model, const Sample& sample, int t, const Mat& noise,
                           const diffusion::NoiseSchedule& sched, const motion::SkeletonSpec& skel,
                           const GradCheckOptions& opts) {
    auto params = model.named();
    auto eval = [&] {
        return loss::total_loss(forward_loss(model, sample, t, noise, sched, skel), opts.weights).scalar();
    };
    zero_grads(params);
    ad::backward(loss::total_loss(forward_loss(model, sample, t, noise, sched, skel), opts.weights));

    // Round-robin over groups so every group is covered.
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < params.size(); ++i) {
        bool keep = opts.name_prefixes.empty();
        for (const auto& pre : opts.name_prefixes) keep = keep || params[i].name.rfind(pre, 0) == 0;
        if (keep) by_group[params[i].group].push_back(i);
    }
    if (by_group.empty()) throw InvalidConfig("grad_check: no parameters selected");

    Rng rng(opts.seed);
    GradCheckReport report;
    int drawn = 0;
    while (drawn < opts.samples) {
        for (const auto& [group, members] : by_group) {
            if (drawn >= opts.samples) break;
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            NamedParam& p = params[members[pick(rng)]];
            const Mat grad = p.var->grad();
            std::uniform_int_distribution<Eigen::Index> entry(0, p.var->value().size() - 1);
            const Eigen::Index idx = entry(rng);
            double& slot = p.var->mutable_value().data()[idx];
            const double saved = slot;
            slot = saved + opts.epsilon;
            const double up = eval();
            slot = saved - opts.epsilon;
            const double down = eval();
            slot = saved;
            const double numeric = (up - down) / (2.0 * opts.epsilon);
            const double analytic = grad.data()[idx];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
            const double rel = std::abs(analytic - numeric) / denom;
            report.entries.push_back({p.name, group, idx, analytic, numeric, rel});
            report.max_rel_error = std::max(report.max_rel_error, rel);
            auto [it, inserted] = report.max_by_group.emplace(group, rel);
            if (!inserted) it->second = std::max(it->second, rel);
            ++drawn;
        }
    }
    return report;
}

}  // namespace choreo::train
