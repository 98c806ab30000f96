#pragma once

#include "choreo/denoiser.hpp"
#include "choreo/diffusion.hpp"
#include "choreo/footwork.hpp"

#include <filesystem>
#include <iosfwd>

namespace choreo {

/// Everything a sampler needs: architecture, schedule, and both parameter sets.
struct Model {
    gdd::ModelConfig config;
    diffusion::ScheduleKind schedule = diffusion::ScheduleKind::Cosine;
    int steps = 50;
    gdd::DenoiserParams gdd;
    footwork::FootworkParams fa;

    static Model init(const gdd::ModelConfig& cfg, diffusion::ScheduleKind schedule, int steps, Rng& rng);

    /// gdd.* followed by fa.*, in a fixed order.
    std::vector<NamedParam> named();
    std::size_t parameter_count();
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(std::ostream& os, Model& model);
void save_checkpoint(const std::filesystem::path& path, Model& model);

/// Rebuilds the architecture from the header and fills every tensor.
/// Throws FormatError on any mismatch.
Model load_checkpoint(std::istream& is);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace choreo
