#pragma once

#include "choreo/checkpoint.hpp"
#include "choreo/diffusion.hpp"
#include "choreo/lgds.hpp"
#include "choreo/motion.hpp"

#include <cstdint>

namespace choreo {

/// Wraps the Group Dance Decoder as an inference-mode x0 predictor.
diffusion::Denoiser make_denoiser(Model& model);

struct Generated {
    motion::GroupMotion raw;     // decoder output after the reverse chain
    motion::GroupMotion result;  // raw upper body merged with the adapted lower body
};

/// Single-window generation: reverse chain, then one footwork pass.
Generated sample_group(Model& model, const MusicTrack& music, const SwapMode& swap, std::uint64_t seed);

struct GeneratedLong {
    Generated motion;
    lgds::LongSample trace;
};

/// Long-form generation; the footwork pass runs once over the stitched sequence.
GeneratedLong sample_long(Model& model, int total, int window_len, int hop, const MusicTrack& music,
                          const SwapMode& swap, std::uint64_t seed);

}  // namespace choreo
