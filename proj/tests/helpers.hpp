#pragma once

#include "choreo/autodiff.hpp"
#include "choreo/checkpoint.hpp"
#include "choreo/dataset.hpp"
#include "choreo/motion.hpp"
#include "choreo/tensor.hpp"

#include <Eigen/Geometry>

#include <functional>
#include <random>
#include <vector>

namespace testing {

using namespace choreo;

inline Mat3 random_rotation(Rng& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

// rot6d stores the first two columns of the rotation, column-major.
inline void put_rotation(double* six, const Mat3& r) {
    for (int i = 0; i < 3; ++i) {
        six[i] = r(i, 0);
        six[3 + i] = r(i, 1);
    }
}

inline motion::GroupMotion identity_pose(int dancers, int frames) {
    motion::GroupMotion m(dancers, frames);
    for (Eigen::Index r = 0; r < m.data().rows(); ++r)
        for (int j = 0; j < motion::kJoints; ++j) {
            m.data()(r, motion::rot_col(j)) = 1.0;
            m.data()(r, motion::rot_col(j) + 4) = 1.0;
        }
    return m;
}

inline std::pair<motion::GroupMotion, MusicTrack> swap_sequence(int dancers, int frames, std::uint64_t seed) {
    dataset::ChoreographyRecipe r;
    r.dancers = dancers;
    r.frames = frames;
    r.formation = dataset::Formation::Swap;
    r.seed = seed;
    return dataset::synth_group_sequence(r);
}

// Largest relative error between reverse-mode and central-difference
// gradients of a scalar function of several matrix inputs.
inline double max_grad_error(const std::function<ad::Var(const std::vector<ad::Var>&)>& f,
                             const std::vector<Mat>& inputs, double h = 1e-6, double floor = 1e-3) {
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(ad::parameter(m));
    ad::backward(f(vars));
    auto eval = [&](const std::vector<Mat>& ms) {
        ad::NoGradGuard guard;
        std::vector<ad::Var> cs;
        for (const auto& m : ms) cs.push_back(ad::constant(m));
        return f(cs).scalar();
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Mat g = vars[i].grad();
        for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
            auto plus = inputs, minus = inputs;
            plus[i].data()[k] += h;
            minus[i].data()[k] -= h;
            const double num = (eval(plus) - eval(minus)) / (2 * h);
            const double ana = g.data()[k];
            worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor}));
        }
    }
    return worst;
}

inline Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    return gaussian(r, c, rng) * scale;
}

// d = 8, one layer, two heads, one adaptor block.
inline Model toy_model(std::uint64_t seed, int dancers = 2, int steps = 10) {
    gdd::ModelConfig c;
    c.dancers = dancers;
    c.hidden = 8;
    c.layers = 1;
    c.heads = 2;
    c.state = 4;
    c.fa_blocks = 1;
    Rng rng(seed);
    return Model::init(c, diffusion::ScheduleKind::Cosine, steps, rng);
}

}  // namespace testing
