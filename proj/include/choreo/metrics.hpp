#pragma once

#include "choreo/motion.hpp"
#include "choreo/music.hpp"

#include <optional>
#include <span>
#include <string>

namespace choreo::metrics {

inline constexpr double kDefaultRadius = 0.2;  // meters
inline constexpr double kDefaultSigma = 3.0;   // frames

struct MetricReport {
    double tif = 0.0;
    double pfc = 0.0;
    double gmc = 0.0;
    double mmc = 0.0;
    double div = 0.0;
    std::optional<double> seam_ratio;

    /// key=value lines; gmr and fid are always "n/a".
    std::string to_text() const;
};

/// Fraction of frames in which some dancer pair is closer than 2 * radius on
/// the x-z ground plane. Throws InvalidConfig for fewer than two dancers.
double tif(const motion::GroupMotion& motion, double radius = kDefaultRadius);

/// Mean of |a_com| * min(|v_left_foot|, |v_right_foot|) over interior frames,
/// normalized by max |a_com|. a_com is the second difference of the root,
/// foot velocities are central differences of FK foot positions (m/s).
/// Returns 0 when max |a_com| is below 1e-9. Throws InvalidConfig when L < 3.
double pfc(const motion::GroupMotion& motion, int dancer, const motion::SkeletonSpec& skel, double fps = 30.0);

/// Mean over dancer pairs of the zero-lag Pearson correlation of flattened
/// joint-velocity sequences; zero-variance pairs contribute 0.
double gmc(const motion::GroupMotion& motion, const motion::SkeletonSpec& skel = motion::SkeletonSpec::smpl_default());

/// Frames that are strict local minima of total joint speed.
std::vector<int> kinematic_beats(const motion::GroupMotion& motion, int dancer, const motion::SkeletonSpec& skel);

/// Beat alignment: mean over music beats b of exp(-min_k (b-k)^2 / (2 sigma^2)).
double beat_alignment(std::span<const int> music_beats, std::span<const int> kinematic_beats, double sigma);

double mmc(const motion::GroupMotion& motion, int dancer, const MusicTrack& music, const motion::SkeletonSpec& skel,
           double sigma = kDefaultSigma);

/// Per-joint mean speed of one dancer: 24 values.
Eigen::VectorXd kinetic_features(const motion::GroupMotion& motion, int dancer, const motion::SkeletonSpec& skel);

/// Mean pairwise Euclidean distance between feature vectors.
/// Throws InvalidConfig for fewer than two.
double diversity(std::span<const Eigen::VectorXd> features);

/// All five metrics for one generated group (pfc/mmc averaged over dancers,
/// diversity across the group's dancers).
MetricReport evaluate(const motion::GroupMotion& motion, const MusicTrack& music, const motion::SkeletonSpec& skel,
                      double radius = kDefaultRadius, double sigma = kDefaultSigma, double fps = 30.0);

}  // namespace choreo::metrics
