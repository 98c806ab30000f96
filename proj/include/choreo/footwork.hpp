#pragma once

#include "choreo/autodiff.hpp"
#include "choreo/layers.hpp"
#include "choreo/motion.hpp"

#include <vector>

namespace choreo::footwork {

/// out = feature(x) * sigmoid(gate(ctx)) + bias(ctx)
struct ConcatSquashBlock {
    Linear feature;
    Linear gate;
    Linear bias;
};

struct FootworkParams {
    Linear input;                          // 151 -> h
    std::vector<ConcatSquashBlock> blocks; // h -> h, context = 3-dim root velocity
    Linear output;                         // h -> 151

    static constexpr int kContextDims = 3;

    static FootworkParams init(int hidden, int blocks, Rng& rng);
    static FootworkParams zeros(int hidden, int blocks);

    std::vector<NamedParam> named();
};

ad::Var concat_squash_forward(const ad::Var& x, const ad::Var& ctx, const ConcatSquashBlock& block);

/// Differentiable per-frame root displacement of a (C*L) x 151 motion;
/// the first frame of every dancer gets zero velocity.
ad::Var root_velocity(const ad::Var& motion, int dancers, int frames);

/// x_a = FA(x_r, V) on (C*L) x 151 features.
ad::Var adapt_footwork(const ad::Var& raw, int dancers, int frames, const FootworkParams& p);
motion::GroupMotion adapt_footwork(const motion::GroupMotion& raw, const FootworkParams& p);

/// Upper body from raw, lower body (with root and contacts) from adapted.
ad::Var finalize(const ad::Var& raw, const ad::Var& adapted);
motion::GroupMotion finalize(const motion::GroupMotion& raw, const motion::GroupMotion& adapted);

}  // namespace choreo::footwork
