#include "choreo/losses.hpp"

#include "choreo/errors.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace choreo::loss {

using motion::kFrameDims;
using motion::kJoints;

void LossWeights::validate() const {
    for (double w : {sim, fk, vel, con, dist})
        if (!std::isfinite(w) || w < 0.0) throw InvalidConfig("loss weights must be finite and nonnegative");
}

LossComponents LossTerms::values() const {
    return {sim.scalar(), fk.scalar(), vel.scalar(), con.scalar(), dist.scalar()};
}

ad::Var forward_kinematics(const ad::Var& m, const motion::SkeletonSpec& skel) {
    if (m.cols() != kFrameDims) throw ShapeMismatch("forward kinematics expects 151-wide rows");
    Mat pos(m.rows(), kJoints * 3);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Mat p = motion::forward_kinematics(m.value().row(r), skel);
        for (int j = 0; j < kJoints; ++j) pos.block(r, j * 3, 1, 3) = p.row(j);
    }
    auto node = std::make_shared<ad::Node>();
    node->value = std::move(pos);
    node->requires_grad = ad::needs_grad({&m});
    if (node->requires_grad) {
        auto pm = m.ptr();
        node->parents = {pm};
        node->backward = [pm, skel](ad::Node& n) {
            Mat g(pm->value.rows(), kFrameDims);
            Mat gp(kJoints, 3);
            for (Eigen::Index r = 0; r < pm->value.rows(); ++r) {
                for (int j = 0; j < kJoints; ++j) gp.row(j) = n.grad.block(r, j * 3, 1, 3);
                g.row(r) = motion::forward_kinematics_backward(pm->value.row(r), skel, gp);
            }
            pm->accumulate(g);
        };
    }
    return ad::Var(node);
}

namespace {

ad::Var zero_scalar() { return ad::constant(Mat::Zero(1, 1)); }

/// Rows l+1 minus rows l within every dancer block: C*(L-1) rows.
ad::Var temporal_delta(const ad::Var& x, int dancers, int frames) {
    std::vector<ad::Var> parts;
    for (int c = 0; c < dancers; ++c) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(c) * frames;
        parts.push_back(ad::sub(ad::rows(x, r0 + 1, frames - 1), ad::rows(x, r0, frames - 1)));
    }
    return ad::concat_rows(parts);
}

/// Leading L-1 rows of every dancer block.
ad::Var leading_rows(const ad::Var& x, int dancers, int frames) {
    std::vector<ad::Var> parts;
    for (int c = 0; c < dancers; ++c)
        parts.push_back(ad::rows(x, static_cast<Eigen::Index>(c) * frames, frames - 1));
    return ad::concat_rows(parts);
}

void check_shapes(const Mat& gt, const ad::Var& pred, int dancers, int frames) {
    if (gt.rows() != pred.rows() || gt.cols() != pred.cols())
        throw ShapeMismatch("prediction and ground truth differ in shape");
    if (gt.rows() != static_cast<Eigen::Index>(dancers) * frames || gt.cols() != kFrameDims)
        throw ShapeMismatch("loss inputs must be (C*L) x 151");
}

}  // namespace

ad::Var distance_consistency(const Mat& gt, const ad::Var& pred, int dancers, int frames) {
    check_shapes(gt, pred, dancers, frames);
    if (dancers < 2) return zero_scalar();
    const ad::Var err = ad::sub(ad::constant(gt.middleCols(motion::kRootOffset, 3)),
                                ad::cols(pred, motion::kRootOffset, 3));
    std::vector<ad::Var> terms;
    for (int i = 0; i < dancers; ++i)
        for (int j = i + 1; j < dancers; ++j) {
            const ad::Var d = ad::sub(ad::rows(err, static_cast<Eigen::Index>(i) * frames, frames),
                                      ad::rows(err, static_cast<Eigen::Index>(j) * frames, frames));
            terms.push_back(ad::sum_squares(d));
        }
    const ad::Var total = ad::sum(ad::concat_rows(terms));
    return ad::scale(total, 1.0 / (static_cast<double>(dancers - 1) * frames));
}

LossTerms loss_terms(const Mat& gt, const ad::Var& pred, int dancers, int frames, const motion::SkeletonSpec& skel) {
    check_shapes(gt, pred, dancers, frames);
    const ad::Var gt_v = ad::constant(gt);
    const ad::Var err = ad::sub(gt_v, pred);
    const double rows = static_cast<double>(gt.rows());
    LossTerms t;
    t.sim = ad::mean(ad::mul(err, err));

    const ad::Var fk_pred = forward_kinematics(pred, skel);
    const ad::Var fk_gt = forward_kinematics(gt_v, skel);
    t.fk = ad::scale(ad::sum_squares(ad::sub(fk_gt, fk_pred)), 1.0 / rows);

    if (frames < 2) {
        t.vel = zero_scalar();
        t.con = zero_scalar();
    } else {
        const double pairs = static_cast<double>(dancers) * (frames - 1);
        t.vel = ad::scale(ad::sum_squares(temporal_delta(err, dancers, frames)), 1.0 / pairs);

        std::vector<int> foot_cols, flag_cols;
        for (std::size_t k = 0; k < motion::kContactJoints.size(); ++k)
            for (int a = 0; a < 3; ++a) {
                foot_cols.push_back(motion::kContactJoints[k] * 3 + a);
                flag_cols.push_back(static_cast<int>(k));
            }
        const ad::Var foot_delta = temporal_delta(ad::gather_cols(fk_pred, foot_cols), dancers, frames);
        const ad::Var flags = leading_rows(ad::cols(pred, 0, motion::kContactDims), dancers, frames);
        t.con = ad::scale(ad::sum_squares(ad::mul(foot_delta, ad::gather_cols(flags, flag_cols))), 1.0 / pairs);
    }
    t.dist = distance_consistency(gt, pred, dancers, frames);
    return t;
}

DistanceLoss distance_consistency_loss(const motion::GroupMotion& gt, const motion::GroupMotion& pred) {
    if (gt.dancers() != pred.dancers() || gt.frames() != pred.frames())
        throw ShapeMismatch("prediction and ground truth differ in shape");
    if (gt.dancers() < 2) return {0.0, true};
    return {distance_consistency(gt.data(), ad::constant(pred.data()), gt.dancers(), gt.frames()).scalar(), false};
}

LossComponents reconstruction_losses(const motion::GroupMotion& gt, const motion::GroupMotion& pred,
                                     const motion::SkeletonSpec& skel) {
    if (gt.dancers() != pred.dancers() || gt.frames() != pred.frames())
        throw ShapeMismatch("prediction and ground truth differ in shape");
    LossComponents c = loss_terms(gt.data(), ad::constant(pred.data()), gt.dancers(), gt.frames(), skel).values();
    c.dist = 0.0;
    return c;
}

double total_loss(const LossComponents& c, const LossWeights& w) {
    return w.sim * c.sim + w.fk * c.fk + w.vel * c.vel + w.con * c.con + w.dist * c.dist;
}

ad::Var total_loss(const LossTerms& t, const LossWeights& w) {
    const std::vector<ad::Var> parts{ad::scale(t.sim, w.sim), ad::scale(t.fk, w.fk), ad::scale(t.vel, w.vel),
                                     ad::scale(t.con, w.con), ad::scale(t.dist, w.dist)};
    return ad::sum(ad::concat_rows(parts));
}

}  // namespace choreo::loss
