#pragma once

#include "choreo/autodiff.hpp"
#include "choreo/layers.hpp"
#include "choreo/music.hpp"
#include "choreo/swap_mode.hpp"

#include <vector>

namespace choreo::gdd {

/// Architecture sizes. Desk-scale defaults; the full-size network is
/// hidden = 512, layers = 8.
struct ModelConfig {
    int dancers = 2;
    int hidden = 64;
    int layers = 2;
    int heads = 8;
    int state = 4;      // diagonal SSM modes per channel
    int fa_blocks = 3;  // concat-squash blocks in the footwork adaptor

    /// Throws InvalidConfig for non-positive sizes or hidden % heads != 0.
    void validate() const;
};

struct SequenceLayer {
    Linear q, k, v, o;              // self-attention over frames
    Linear delta;                   // input-dependent step size (pre-softplus)
    ad::Var a_log, b, c;            // hidden x state; A = -exp(a_log)
    Linear ssm_out;
    Linear cq, ck, cv, co;          // cross-attention onto music
    Linear film;                    // [time | music | swap] (3d) -> [scale | shift] (2d)
};

struct DenoiserParams {
    Linear input;                   // 151 -> d
    ad::Var dpe;                    // 1 x C
    Linear fuse1, fuse2, fuse3;     // C*d -> d -> d -> C*d
    Linear time_proj;               // d -> d
    Linear music_proj;              // 35 -> d
    Linear swap_proj;               // C*C -> d
    std::vector<SequenceLayer> layers;
    Linear output;                  // d -> 151

    static DenoiserParams init(const ModelConfig& cfg, Rng& rng);
    static DenoiserParams zeros(const ModelConfig& cfg);

    std::vector<NamedParam> named();
};

struct ConditionBundle {
    ad::Var time;   // 1 x d
    ad::Var music;  // L x d
    ad::Var swap;   // 1 x d
};

/// Sinusoidal embedding: first half sin(t w_i), second half cos(t w_i),
/// w_i = 10000^(-i / (d/2)).
RowVec timestep_embedding(int t, int width);

/// Swap order as C one-hot rows flattened to 1 x C*C.
RowVec swap_one_hot(const SwapMode& swap);

ConditionBundle build_conditioning(int t, const MusicTrack& music, const SwapMode& swap, const DenoiserParams& p,
                                   int frames);

/// x[c*L + l, k] + dpe[c]
ad::Var dpe_add(const ad::Var& x, const ad::Var& dpe, int dancers, int frames);

/// (C*L) x d -> L x (C*d) and back.
ad::Var dancers_to_frames(const ad::Var& x, int dancers, int frames);
ad::Var frames_to_dancers(const ad::Var& x, int dancers, int frames);

ad::Var fusion_project(const ad::Var& x, const DenoiserParams& p, int dancers, int frames);

/// scale (1 x d) * x + shift (1 x d), broadcast over rows.
ad::Var film_apply(const ad::Var& x, const ad::Var& scale, const ad::Var& shift);

/// FiLM with scale = 1 + s, [s | shift] = film(cond).
ad::Var film_modulate(const ad::Var& x, const ConditionBundle& cond, const Linear& film);

/// Full Group Dance Decoder pass; x_t is (C*L) x 151 in sorted dancer order.
ad::Var denoise_forward(const Mat& x_t, int t, const MusicTrack& music, const SwapMode& swap,
                        const DenoiserParams& p, const ModelConfig& cfg);

}  // namespace choreo::gdd
