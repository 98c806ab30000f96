#pragma once

#include "choreo/motion.hpp"
#include "choreo/music.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

namespace choreo::dataset {

enum class Formation { Line, Circle, Swap, ConvergeDiverge };

Formation parse_formation(const std::string& name);
std::string to_string(Formation f);

struct ChoreographyRecipe {
    int dancers = 3;
    int frames = 60;
    double fps = 30.0;
    Formation formation = Formation::Line;
    int beat_period = 15;
    std::uint64_t seed = 0;
    /// Dancers 0 and 1 walk straight through each other (TIF > 0 on purpose).
    bool collision_fixture = false;

    /// Throws InvalidConfig: C in [2,5], L >= 30, beat period >= 2, fps > 0.
    void validate() const;
};

/// Foot speed (meters per frame) below which a contact flag is set.
inline constexpr double kContactSpeed = 0.02;

MusicTrack synth_music(const ChoreographyRecipe& recipe);

std::pair<motion::GroupMotion, MusicTrack> synth_group_sequence(
    const ChoreographyRecipe& recipe, const motion::SkeletonSpec& skel = motion::SkeletonSpec::smpl_default());

/// Contact flags recomputed from FK foot speeds; shape L x 4 per dancer,
/// stacked as (C*L) x 4.
Mat contact_flags_from_kinematics(const motion::GroupMotion& motion, const motion::SkeletonSpec& skel);

/// Every set contact flag has a foot speed below kContactSpeed.
bool contacts_consistent(const motion::GroupMotion& motion, const motion::SkeletonSpec& skel);

/// Contents of one motion container file.
struct MotionFile {
    motion::GroupMotion motion{1, 1};
    MusicTrack music{1};
    motion::SkeletonSpec skeleton = motion::SkeletonSpec::smpl_default();
    double fps = 30.0;
};

inline constexpr int kFormatVersion = 1;

/// Throws IoError when the file cannot be written.
void write_motion(const std::filesystem::path& path, const MotionFile& file);
void write_motion(std::ostream& os, const MotionFile& file);

/// Throws IoError (unreadable) or FormatError (bad header, version, shape,
/// truncated payload, non-finite values).
MotionFile read_motion(const std::filesystem::path& path);
MotionFile read_motion(std::istream& is);

}  // namespace choreo::dataset
