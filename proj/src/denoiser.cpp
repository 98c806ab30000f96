#include "choreo/denoiser.hpp"

#include "choreo/errors.hpp"
#include "choreo/motion.hpp"
#include "choreo/ssm.hpp"

#include <cmath>
#include <string>

namespace choreo::gdd {

void ModelConfig::validate() const {
    if (dancers < 1 || hidden < 1 || layers < 1 || heads < 1 || state < 1 || fa_blocks < 1)
        throw InvalidConfig("model sizes must be positive");
    if (hidden % heads != 0) throw InvalidConfig("hidden size must be divisible by the head count");
    if (hidden % 2 != 0) throw InvalidConfig("hidden size must be even for the timestep embedding");
}

namespace {

constexpr int kMusicDims = MusicTrack::kChannels;

SequenceLayer init_layer(const ModelConfig& cfg, Rng& rng) {
    const int d = cfg.hidden, n = cfg.state;
    SequenceLayer L;
    L.q = Linear::uniform(d, d, rng);
    L.k = Linear::uniform(d, d, rng);
    L.v = Linear::uniform(d, d, rng);
    L.o = Linear::uniform(d, d, rng);

    L.delta = Linear::uniform(d, d, rng);
    // Step sizes start log-uniform in [1e-3, 1e-1] through the softplus bias.
    std::uniform_real_distribution<double> logu(std::log(1e-3), std::log(1e-1));
    for (int k = 0; k < d; ++k) {
        const double dt = std::exp(logu(rng));
        L.delta.b.mutable_value()(0, k) = std::log(std::expm1(dt));
    }
    Mat a_log(d, n), b = Mat::Ones(d, n), c(d, n);
    const double cb = 1.0 / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> cu(-cb, cb);
    for (int i = 0; i < d; ++i)
        for (int m = 0; m < n; ++m) {
            a_log(i, m) = std::log(static_cast<double>(m + 1));
            c(i, m) = cu(rng);
        }
    L.a_log = ad::parameter(std::move(a_log));
    L.b = ad::parameter(std::move(b));
    L.c = ad::parameter(std::move(c));
    L.ssm_out = Linear::uniform(d, d, rng);

    L.cq = Linear::uniform(d, d, rng);
    L.ck = Linear::uniform(d, d, rng);
    L.cv = Linear::uniform(d, d, rng);
    L.co = Linear::uniform(d, d, rng);
    // Zero projection: scale = 1, shift = 0 at initialization.
    L.film = Linear::zeros(3 * d, 2 * d);
    return L;
}

SequenceLayer zero_layer(const ModelConfig& cfg) {
    const int d = cfg.hidden, n = cfg.state;
    SequenceLayer L;
    L.q = Linear::zeros(d, d);
    L.k = Linear::zeros(d, d);
    L.v = Linear::zeros(d, d);
    L.o = Linear::zeros(d, d);
    L.delta = Linear::zeros(d, d);
    L.a_log = ad::parameter(Mat::Zero(d, n));
    L.b = ad::parameter(Mat::Zero(d, n));
    L.c = ad::parameter(Mat::Zero(d, n));
    L.ssm_out = Linear::zeros(d, d);
    L.cq = Linear::zeros(d, d);
    L.ck = Linear::zeros(d, d);
    L.cv = Linear::zeros(d, d);
    L.co = Linear::zeros(d, d);
    L.film = Linear::zeros(3 * d, 2 * d);
    return L;
}

}  // namespace

DenoiserParams DenoiserParams::init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    const int d = cfg.hidden, C = cfg.dancers;
    DenoiserParams p;
    p.input = Linear::uniform(motion::kFrameDims, d, rng);
    p.dpe = ad::parameter(Mat::Zero(1, C));
    p.fuse1 = Linear::uniform(C * d, d, rng);
    p.fuse2 = Linear::uniform(d, d, rng);
    p.fuse3 = Linear::uniform(d, C * d, rng);
    p.time_proj = Linear::uniform(d, d, rng);
    p.music_proj = Linear::uniform(kMusicDims, d, rng);
    p.swap_proj = Linear::uniform(C * C, d, rng);
    for (int m = 0; m < cfg.layers; ++m) p.layers.push_back(init_layer(cfg, rng));
    p.output = Linear::uniform(d, motion::kFrameDims, rng);
    return p;
}

DenoiserParams DenoiserParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    const int d = cfg.hidden, C = cfg.dancers;
    DenoiserParams p;
    p.input = Linear::zeros(motion::kFrameDims, d);
    p.dpe = ad::parameter(Mat::Zero(1, C));
    p.fuse1 = Linear::zeros(C * d, d);
    p.fuse2 = Linear::zeros(d, d);
    p.fuse3 = Linear::zeros(d, C * d);
    p.time_proj = Linear::zeros(d, d);
    p.music_proj = Linear::zeros(kMusicDims, d);
    p.swap_proj = Linear::zeros(C * C, d);
    for (int m = 0; m < cfg.layers; ++m) p.layers.push_back(zero_layer(cfg));
    p.output = Linear::zeros(d, motion::kFrameDims);
    return p;
}

std::vector<NamedParam> DenoiserParams::named() {
    std::vector<NamedParam> out;
    append(out, "gdd.input", "io", input);
    out.push_back({"gdd.dpe", "dpe", &dpe});
    append(out, "gdd.fuse1", "fusion", fuse1);
    append(out, "gdd.fuse2", "fusion", fuse2);
    append(out, "gdd.fuse3", "fusion", fuse3);
    append(out, "gdd.time_proj", "conditioning", time_proj);
    append(out, "gdd.music_proj", "conditioning", music_proj);
    append(out, "gdd.swap_proj", "conditioning", swap_proj);
    for (std::size_t m = 0; m < layers.size(); ++m) {
        const std::string pre = "gdd.layer" + std::to_string(m) + ".";
        auto& L = layers[m];
        append(out, pre + "attn.q", "self_attention", L.q);
        append(out, pre + "attn.k", "self_attention", L.k);
        append(out, pre + "attn.v", "self_attention", L.v);
        append(out, pre + "attn.o", "self_attention", L.o);
        append(out, pre + "ssm.delta", "ssm", L.delta);
        out.push_back({pre + "ssm.a_log", "ssm", &L.a_log});
        out.push_back({pre + "ssm.b", "ssm", &L.b});
        out.push_back({pre + "ssm.c", "ssm", &L.c});
        append(out, pre + "ssm.out", "ssm", L.ssm_out);
        append(out, pre + "xattn.q", "cross_attention", L.cq);
        append(out, pre + "xattn.k", "cross_attention", L.ck);
        append(out, pre + "xattn.v", "cross_attention", L.cv);
        append(out, pre + "xattn.o", "cross_attention", L.co);
        append(out, pre + "film", "film", L.film);
    }
    append(out, "gdd.output", "io", output);
    return out;
}

RowVec timestep_embedding(int t, int width) {
    const int half = width / 2;
    RowVec e = RowVec::Zero(width);
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        e(i) = std::sin(t * freq);
        e(half + i) = std::cos(t * freq);
    }
    return e;
}

RowVec swap_one_hot(const SwapMode& swap) {
    swap.validate();
    const int C = swap.dancers();
    RowVec v = RowVec::Zero(static_cast<Eigen::Index>(C) * C);
    for (int c = 0; c < C; ++c) v(c * C + swap.order[c]) = 1.0;
    return v;
}

ConditionBundle build_conditioning(int t, const MusicTrack& music, const SwapMode& swap, const DenoiserParams& p,
                                   int frames) {
    if (music.frames() != frames)
        throw ShapeMismatch("music has " + std::to_string(music.frames()) + " frames, motion has " +
                            std::to_string(frames));
    const int C = static_cast<int>(p.dpe.cols());
    if (swap.dancers() != C) throw ShapeMismatch("swap order length differs from the dancer count");
    const int d = p.time_proj.in();
    ConditionBundle b;
    b.time = p.time_proj(ad::constant(timestep_embedding(t, d)));
    b.music = p.music_proj(ad::constant(music.features()));
    b.swap = p.swap_proj(ad::constant(swap_one_hot(swap)));
    return b;
}

ad::Var dpe_add(const ad::Var& x, const ad::Var& dpe, int dancers, int frames) {
    if (dpe.rows() != 1 || dpe.cols() != dancers) throw ShapeMismatch("DPE must hold one scalar per dancer");
    if (x.rows() != static_cast<Eigen::Index>(dancers) * frames) throw ShapeMismatch("dpe_add: row count");
    Mat v = x.value();
    for (int c = 0; c < dancers; ++c) v.middleRows(static_cast<Eigen::Index>(c) * frames, frames).array() += dpe.value()(0, c);
    auto node = std::make_shared<ad::Node>();
    node->value = std::move(v);
    node->requires_grad = ad::needs_grad({&x, &dpe});
    if (node->requires_grad) {
        auto px = x.ptr(), pd = dpe.ptr();
        node->parents = {px, pd};
        node->backward = [px, pd, dancers, frames](ad::Node& n) {
            px->accumulate(n.grad);
            if (pd->requires_grad) {
                Mat g(1, dancers);
                for (int c = 0; c < dancers; ++c)
                    g(0, c) = n.grad.middleRows(static_cast<Eigen::Index>(c) * frames, frames).sum();
                pd->accumulate(g);
            }
        };
    }
    return ad::Var(node);
}

ad::Var dancers_to_frames(const ad::Var& x, int dancers, int frames) {
    if (x.rows() != static_cast<Eigen::Index>(dancers) * frames) throw ShapeMismatch("dancers_to_frames: rows");
    std::vector<ad::Var> parts;
    for (int c = 0; c < dancers; ++c) parts.push_back(ad::rows(x, static_cast<Eigen::Index>(c) * frames, frames));
    return ad::concat_cols(parts);
}

ad::Var frames_to_dancers(const ad::Var& x, int dancers, int frames) {
    if (x.rows() != frames || x.cols() % dancers != 0) throw ShapeMismatch("frames_to_dancers: shape");
    const Eigen::Index d = x.cols() / dancers;
    std::vector<ad::Var> parts;
    for (int c = 0; c < dancers; ++c) parts.push_back(ad::cols(x, c * d, d));
    return ad::concat_rows(parts);
}

ad::Var fusion_project(const ad::Var& x, const DenoiserParams& p, int dancers, int frames) {
    if (p.fuse1.in() != dancers * x.cols())
        throw ShapeMismatch("fusion projection was built for a different dancer count");
    ad::Var wide = dancers_to_frames(x, dancers, frames);
    ad::Var h = ad::relu(p.fuse1(wide));
    h = ad::relu(p.fuse2(h));
    return frames_to_dancers(p.fuse3(h), dancers, frames);
}

ad::Var film_apply(const ad::Var& x, const ad::Var& scale, const ad::Var& shift) {
    return ad::add_row(ad::mul_row(x, scale), shift);
}

ad::Var film_modulate(const ad::Var& x, const ConditionBundle& cond, const Linear& film) {
    const ad::Var pooled = ad::mean_rows(cond.music);
    const std::vector<ad::Var> parts{cond.time, pooled, cond.swap};
    const ad::Var ss = film(ad::concat_cols(parts));
    const Eigen::Index d = x.cols();
    if (ss.cols() != 2 * d) throw ShapeMismatch("FiLM projection width must be twice the feature width");
    const ad::Var scale = ad::add(ad::constant(Mat::Ones(1, d)), ad::cols(ss, 0, d));
    return film_apply(x, scale, ad::cols(ss, d, d));
}

namespace {

ad::Var self_attention(const ad::Var& x, const SequenceLayer& L, int dancers, int frames, int heads) {
    return L.o(ad::attention(L.q(x), L.k(x), L.v(x), dancers, frames, dancers, frames, heads));
}

ad::Var ssm_block(const ad::Var& x, const SequenceLayer& L, int dancers, int frames) {
    const ad::Var delta = ad::softplus(L.delta(x));
    const ad::Var a = ad::neg(ad::exp(L.a_log));
    return L.ssm_out(ssm::selective_scan(x, delta, a, L.b, L.c, dancers, frames));
}

ad::Var cross_attention(const ad::Var& x, const ad::Var& music, const SequenceLayer& L, int dancers, int frames,
                        int heads) {
    return L.co(ad::attention(L.cq(x), L.ck(music), L.cv(music), dancers, frames, 1, frames, heads));
}

}  // namespace

ad::Var denoise_forward(const Mat& x_t, int t, const MusicTrack& music, const SwapMode& swap,
                        const DenoiserParams& p, const ModelConfig& cfg) {
    const int C = cfg.dancers;
    if (x_t.cols() != motion::kFrameDims || x_t.rows() % C != 0)
        throw ShapeMismatch("denoiser input must be (C*L) x 151");
    const int L = static_cast<int>(x_t.rows() / C);
    const ConditionBundle cond = build_conditioning(t, music, swap, p, L);

    ad::Var h = p.input(ad::constant(x_t));
    h = dpe_add(h, p.dpe, C, L);
    h = fusion_project(h, p, C, L);
    for (const auto& layer : p.layers) {
        h = ad::add(h, self_attention(ad::layer_norm(h), layer, C, L, cfg.heads));
        h = ad::add(h, ssm_block(ad::layer_norm(h), layer, C, L));
        h = ad::add(h, cross_attention(ad::layer_norm(h), cond.music, layer, C, L, cfg.heads));
        h = ad::add(h, film_modulate(ad::layer_norm(h), cond, layer.film));
    }
    return p.output(h);
}

}  // namespace choreo::gdd
