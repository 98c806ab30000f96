#include "helpers.hpp"

#include "choreo/errors.hpp"
#include "choreo/losses.hpp"

#include <doctest.h>

using namespace choreo;
using namespace choreo::loss;
using motion::GroupMotion;

namespace {

const motion::SkeletonSpec kSkel = motion::SkeletonSpec::smpl_default();

GroupMotion perturbed(const GroupMotion& m, Rng& rng, double scale) {
    GroupMotion out = m;
    out.data() += gaussian(m.data().rows(), m.data().cols(), rng) * scale;
    return out;
}

// Per-frame loops over the definitions, independent of the graph code.
LossComponents oracle(const GroupMotion& gt, const GroupMotion& pred) {
    const int C = gt.dancers(), L = gt.frames();
    LossComponents c;
    c.sim = (gt.data() - pred.data()).squaredNorm() / static_cast<double>(gt.data().size());
    for (int d = 0; d < C; ++d)
        for (int l = 0; l < L; ++l) {
            const Mat pg = motion::forward_kinematics(gt.frame(d, l), kSkel);
            const Mat pp = motion::forward_kinematics(pred.frame(d, l), kSkel);
            c.fk += (pg - pp).squaredNorm();
            if (l == 0) continue;
            const RowVec dg = gt.frame(d, l) - gt.frame(d, l - 1);
            const RowVec dp = pred.frame(d, l) - pred.frame(d, l - 1);
            c.vel += (dg - dp).squaredNorm();
            const Mat prev = motion::forward_kinematics(pred.frame(d, l - 1), kSkel);
            for (std::size_t k = 0; k < motion::kContactJoints.size(); ++k) {
                const int j = motion::kContactJoints[k];
                const double flag = pred.frame(d, l - 1)(static_cast<Eigen::Index>(k));  // earlier frame of the pair
                c.con += (pp.row(j) - prev.row(j)).squaredNorm() * flag * flag;
            }
        }
    c.fk /= C * L;
    c.vel /= C * (L - 1);
    c.con /= C * (L - 1);
    return c;
}

GroupMotion group_with_roots(const std::vector<Vec3>& roots) {
    GroupMotion m = testing::identity_pose(static_cast<int>(roots.size()), 1);
    for (int c = 0; c < m.dancers(); ++c) m.set_root(c, 0, roots[c]);
    return m;
}

}  // namespace

TEST_CASE("published weights are the defaults") {
    const LossWeights w;
    CHECK(w.sim == 0.636);
    CHECK(w.fk == 0.646);
    CHECK(w.vel == 2.964);
    CHECK(w.con == 10.942);
    CHECK(w.dist == 0.636);
    CHECK(std::abs(total_loss(LossComponents{1, 1, 1, 1, 1}, w) - 15.824) <= 1e-12);
    CHECK(total_loss(LossComponents{}, w) == 0.0);
    CHECK(total_loss(LossComponents{1, 2, 3, 4, 5}, LossWeights{0, 0, 0, 0, 0}) == 0.0);
    CHECK_THROWS_AS((LossWeights{-1, 0, 0, 0, 0}).validate(), InvalidConfig);
}

TEST_CASE("total loss is the exact weighted sum") {
    const LossComponents c{0.1, 0.2, 0.3, 0.4, 0.5};
    const LossWeights w{1.5, 2.5, 3.5, 4.5, 5.5};
    CHECK(total_loss(c, w) == 1.5 * 0.1 + 2.5 * 0.2 + 3.5 * 0.3 + 4.5 * 0.4 + 5.5 * 0.5);
}

TEST_CASE("distance consistency hand case") {
    const GroupMotion gt = group_with_roots({Vec3(0, 0, 0), Vec3(1, 0, 0)});
    const GroupMotion pred = group_with_roots({Vec3(0, 0, 0), Vec3(3, 0, 0)});
    const DistanceLoss d = distance_consistency_loss(gt, pred);
    CHECK(std::abs(d.value - 4.0) <= 1e-12);
    CHECK_FALSE(d.single_dancer);
    CHECK(distance_consistency_loss(gt, gt).value == 0.0);
}

TEST_CASE("distance consistency with three dancers uses unordered pairs over C-1") {
    const GroupMotion gt = group_with_roots({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)});
    const GroupMotion pred = group_with_roots({Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(2, 0, 0)});
    // Pairs (0,1) and (1,2) each miss by (0,1,0); pair (0,2) matches.
    CHECK(distance_consistency_loss(gt, pred).value == doctest::Approx(2.0 / 2.0).epsilon(1e-15));
}

TEST_CASE("distance consistency is translation invariant") {
    Rng rng(1);
    const auto [gt, music] = testing::swap_sequence(3, 30, 4);
    const GroupMotion pred = perturbed(gt, rng, 0.1);
    const double base = distance_consistency_loss(gt, pred).value;
    for (const Vec3 shift : {Vec3(1, 2, 3), Vec3(-10, 0.5, 7)}) {
        GroupMotion moved = pred, moved_gt = gt;
        for (int c = 0; c < 3; ++c)
            for (int l = 0; l < 30; ++l) {
                moved.set_root(c, l, pred.root(c, l) + shift);
                moved_gt.set_root(c, l, gt.root(c, l) + shift);
            }
        CHECK(std::abs(distance_consistency_loss(gt, moved).value - base) <= 1e-12);
        CHECK(std::abs(distance_consistency_loss(moved_gt, pred).value - base) <= 1e-12);
    }
}

TEST_CASE("single dancer distance loss is flagged") {
    const GroupMotion m = testing::identity_pose(1, 4);
    const DistanceLoss d = distance_consistency_loss(m, m);
    CHECK(d.value == 0.0);
    CHECK(d.single_dancer);
}

TEST_CASE("losses vanish at pred == gt") {
    auto [gt, music] = testing::swap_sequence(2, 30, 2);
    gt.data().leftCols(motion::kContactDims).setZero();
    const auto c = reconstruction_losses(gt, gt, kSkel);
    CHECK(c.sim == 0.0);
    CHECK(c.fk == 0.0);
    CHECK(c.vel == 0.0);
    CHECK(c.con == 0.0);
    CHECK(distance_consistency_loss(gt, gt).value == 0.0);
}

TEST_CASE("root offset leaves velocity loss at zero") {
    const auto [gt, music] = testing::swap_sequence(2, 30, 3);
    GroupMotion pred = gt;
    for (int c = 0; c < 2; ++c)
        for (int l = 0; l < 30; ++l) pred.set_root(c, l, gt.root(c, l) + Vec3(0.3, 0, 0));
    const auto r = reconstruction_losses(gt, pred, kSkel);
    CHECK(std::abs(r.vel) < 1e-28);
    CHECK(r.sim > 0.0);
    CHECK(r.fk > 0.0);
}

TEST_CASE("contact loss is gated by predicted flags") {
    GroupMotion moving = testing::identity_pose(1, 5);
    for (int l = 0; l < 5; ++l) moving.set_root(0, l, Vec3(0.1 * l, 0, 0));
    GroupMotion on = moving, off = moving;
    on.data().leftCols(4).setOnes();
    off.data().leftCols(4).setZero();
    CHECK(reconstruction_losses(moving, on, kSkel).con > 0.0);
    CHECK(reconstruction_losses(moving, off, kSkel).con == 0.0);
}

TEST_CASE("loss terms match the per-frame oracle") {
    Rng rng(5);
    const auto [gt, music] = testing::swap_sequence(3, 30, 5);
    const GroupMotion pred = perturbed(gt, rng, 0.05);
    const auto got = reconstruction_losses(gt, pred, kSkel);
    const auto want = oracle(gt, pred);
    CHECK(got.sim == doctest::Approx(want.sim).epsilon(1e-12));
    CHECK(got.fk == doctest::Approx(want.fk).epsilon(1e-12));
    CHECK(got.vel == doctest::Approx(want.vel).epsilon(1e-12));
    CHECK(got.con == doctest::Approx(want.con).epsilon(1e-12));
}

TEST_CASE("losses are nonnegative") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto [gt, music] = testing::swap_sequence(2, 30, trial);
        const GroupMotion pred = perturbed(gt, rng, 0.5);
        const auto c = reconstruction_losses(gt, pred, kSkel);
        CHECK(c.sim >= 0.0);
        CHECK(c.fk >= 0.0);
        CHECK(c.vel >= 0.0);
        CHECK(c.con >= 0.0);
        CHECK(distance_consistency_loss(gt, pred).value >= 0.0);
    }
}

TEST_CASE("velocity loss ignores a shared constant") {
    Rng rng(7);
    const auto [gt, music] = testing::swap_sequence(2, 30, 7);
    const GroupMotion pred = perturbed(gt, rng, 0.1);
    GroupMotion gt2 = gt, pred2 = pred;
    const RowVec k = gaussian(1, motion::kFrameDims, rng);
    gt2.data().rowwise() += k;
    pred2.data().rowwise() += k;
    const double a = reconstruction_losses(gt, pred, kSkel).vel, b = reconstruction_losses(gt2, pred2, kSkel).vel;
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(8);
    const auto [gt, music] = testing::swap_sequence(2, 30, 8);
    GroupMotion small(2, 5);
    for (int c = 0; c < 2; ++c) small.dancer(c) = gt.dancer(c).topRows(5);
    const GroupMotion pred = perturbed(small, rng, 0.1);
    const LossWeights w{0.3, 0.7, 1.1, 1.3, 1.7};
    const double err = testing::max_grad_error(
        [&](const std::vector<ad::Var>& v) { return total_loss(loss_terms(small.data(), v[0], 2, 5, kSkel), w); },
        {pred.data()}, 1e-6, 1e-4);
    CHECK(err < 1e-5);
}

TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(reconstruction_losses(GroupMotion(2, 3), GroupMotion(2, 4), kSkel), ShapeMismatch);
    CHECK_THROWS_AS(distance_consistency_loss(GroupMotion(2, 3), GroupMotion(3, 3)), ShapeMismatch);
}
