#include "choreo/footwork.hpp"

#include "choreo/errors.hpp"

#include <string>

namespace choreo::footwork {

FootworkParams FootworkParams::init(int hidden, int blocks, Rng& rng) {
    if (hidden < 1 || blocks < 1) throw InvalidConfig("footwork adaptor sizes must be positive");
    FootworkParams p;
    p.input = Linear::uniform(motion::kFrameDims, hidden, rng);
    for (int w = 0; w < blocks; ++w) {
        ConcatSquashBlock b;
        b.feature = Linear::uniform(hidden, hidden, rng);
        b.gate = Linear::uniform(kContextDims, hidden, rng);
        b.bias = Linear::uniform(kContextDims, hidden, rng);
        p.blocks.push_back(std::move(b));
    }
    p.output = Linear::uniform(hidden, motion::kFrameDims, rng);
    return p;
}

FootworkParams FootworkParams::zeros(int hidden, int blocks) {
    if (hidden < 1 || blocks < 1) throw InvalidConfig("footwork adaptor sizes must be positive");
    FootworkParams p;
    p.input = Linear::zeros(motion::kFrameDims, hidden);
    for (int w = 0; w < blocks; ++w)
        p.blocks.push_back({Linear::zeros(hidden, hidden), Linear::zeros(kContextDims, hidden),
                            Linear::zeros(kContextDims, hidden)});
    p.output = Linear::zeros(hidden, motion::kFrameDims);
    return p;
}

std::vector<NamedParam> FootworkParams::named() {
    std::vector<NamedParam> out;
    append(out, "fa.input", "footwork", input);
    for (std::size_t w = 0; w < blocks.size(); ++w) {
        const std::string pre = "fa.block" + std::to_string(w) + ".";
        append(out, pre + "feature", "concat_squash", blocks[w].feature);
        append(out, pre + "gate", "concat_squash", blocks[w].gate);
        append(out, pre + "bias", "concat_squash", blocks[w].bias);
    }
    append(out, "fa.output", "footwork", output);
    return out;
}

ad::Var concat_squash_forward(const ad::Var& x, const ad::Var& ctx, const ConcatSquashBlock& block) {
    if (x.rows() != ctx.rows()) throw ShapeMismatch("concat-squash: one context row per feature row");
    return ad::add(ad::mul(block.feature(x), ad::sigmoid(block.gate(ctx))), block.bias(ctx));
}

ad::Var root_velocity(const ad::Var& m, int dancers, int frames) {
    if (m.rows() != static_cast<Eigen::Index>(dancers) * frames || m.cols() != motion::kFrameDims)
        throw ShapeMismatch("root_velocity expects (C*L) x 151");
    Mat v = Mat::Zero(m.rows(), 3);
    for (int c = 0; c < dancers; ++c)
        for (int l = 1; l < frames; ++l) {
            const Eigen::Index r = static_cast<Eigen::Index>(c) * frames + l;
            v.row(r) = m.value().block(r, motion::kRootOffset, 1, 3) - m.value().block(r - 1, motion::kRootOffset, 1, 3);
        }
    auto node = std::make_shared<ad::Node>();
    node->value = std::move(v);
    node->requires_grad = ad::needs_grad({&m});
    if (node->requires_grad) {
        auto pm = m.ptr();
        node->parents = {pm};
        node->backward = [pm, dancers, frames](ad::Node& n) {
            Mat g = Mat::Zero(pm->value.rows(), pm->value.cols());
            for (int c = 0; c < dancers; ++c)
                for (int l = 1; l < frames; ++l) {
                    const Eigen::Index r = static_cast<Eigen::Index>(c) * frames + l;
                    g.block(r, motion::kRootOffset, 1, 3) += n.grad.row(r);
                    g.block(r - 1, motion::kRootOffset, 1, 3) -= n.grad.row(r);
                }
            pm->accumulate(g);
        };
    }
    return ad::Var(node);
}

ad::Var adapt_footwork(const ad::Var& raw, int dancers, int frames, const FootworkParams& p) {
    const ad::Var vel = root_velocity(raw, dancers, frames);
    ad::Var h = p.input(raw);
    for (const auto& block : p.blocks) h = concat_squash_forward(h, vel, block);
    return p.output(h);
}

motion::GroupMotion adapt_footwork(const motion::GroupMotion& raw, const FootworkParams& p) {
    const ad::Var out = adapt_footwork(ad::constant(raw.data()), raw.dancers(), raw.frames(), p);
    return motion::GroupMotion(raw.dancers(), raw.frames(), out.value());
}

ad::Var finalize(const ad::Var& raw, const ad::Var& adapted) {
    static const auto mask = motion::lower_body_mask();
    return ad::select_cols(raw, adapted, mask);
}

motion::GroupMotion finalize(const motion::GroupMotion& raw, const motion::GroupMotion& adapted) {
    return motion::split_merge_body(raw, adapted);
}

}  // namespace choreo::footwork
