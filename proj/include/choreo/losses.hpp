#pragma once

#include "choreo/autodiff.hpp"
#include "choreo/motion.hpp"

namespace choreo::loss {

/// Defaults are the published weighting coefficients.
struct LossWeights {
    double sim = 0.636;
    double fk = 0.646;
    double vel = 2.964;
    double con = 10.942;
    double dist = 0.636;

    /// Throws InvalidConfig for negative or non-finite weights.
    void validate() const;
};

struct LossComponents {
    double sim = 0.0;
    double fk = 0.0;
    double vel = 0.0;
    double con = 0.0;
    double dist = 0.0;
};

struct LossTerms {
    ad::Var sim, fk, vel, con, dist;

    LossComponents values() const;
};

/// Joint positions for every row of a (rows x 151) motion: rows x 72.
ad::Var forward_kinematics(const ad::Var& motion, const motion::SkeletonSpec& skel);

/// All five terms of the training objective for pred against gt, both
/// (C*L) x 151 in the same dancer order.
///   sim  mean squared error over all descriptor entries
///   fk   mean over dancer-frames of summed squared joint-position error
///   vel  mean over consecutive frame pairs of squared delta error (151 dims)
///   con  mean over frame pairs of squared contact-joint displacement, each
///        joint gated by its predicted contact flag
///   dist distance-consistency term, see distance_consistency_loss
LossTerms loss_terms(const Mat& gt, const ad::Var& pred, int dancers, int frames, const motion::SkeletonSpec& skel);

/// (1/(C-1)) sum_frames sum_{i<j} |(p_i - p_j) - (p^_i - p^_j)|^2, divided by L.
/// Zero for a single dancer.
ad::Var distance_consistency(const Mat& gt, const ad::Var& pred, int dancers, int frames);

struct DistanceLoss {
    double value = 0.0;
    bool single_dancer = false;  // C < 2: the term is undefined and reported as 0
};

DistanceLoss distance_consistency_loss(const motion::GroupMotion& gt, const motion::GroupMotion& pred);

/// sim, fk, vel, con for two motions of equal shape (dist left at zero).
LossComponents reconstruction_losses(const motion::GroupMotion& gt, const motion::GroupMotion& pred,
                                     const motion::SkeletonSpec& skel);

double total_loss(const LossComponents& c, const LossWeights& w);
ad::Var total_loss(const LossTerms& t, const LossWeights& w);

}  // namespace choreo::loss
