#include "helpers.hpp"

#include "choreo/errors.hpp"
#include "choreo/motion.hpp"

#include <doctest.h>

#include <algorithm>

using namespace choreo;
using namespace choreo::motion;

namespace {

// Ancestor path composition, written without the library's traversal order.
Mat fk_oracle(const RowVec& frame, const SkeletonSpec& skel) {
    Mat out(kJoints, 3);
    for (int j = 0; j < kJoints; ++j) {
        std::vector<int> path;
        for (int k = j; k >= 0; k = skel.parents[k]) path.push_back(k);
        std::reverse(path.begin(), path.end());
        Vec3 pos = frame.segment(kRootOffset, 3).transpose();
        Mat3 acc = Mat3::Identity();
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i > 0) pos += acc * skel.offsets[path[i]];
            Mat3 local;
            const double* six = frame.data() + rot_col(path[i]);
            Vec3 a1(six[0], six[1], six[2]), a2(six[3], six[4], six[5]);
            Vec3 b1 = a1.normalized();
            Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
            local << b1, b2, b1.cross(b2);
            acc = acc * local;
        }
        out.row(j) = pos.transpose();
    }
    return out;
}

RowVec random_frame(Rng& rng) {
    std::normal_distribution<double> n;
    RowVec f(kFrameDims);
    for (int k = 0; k < kFrameDims; ++k) f(k) = n(rng);
    return f;
}

SkeletonSpec random_tree(Rng& rng) {
    SkeletonSpec s;
    std::normal_distribution<double> n(0.0, 0.3);
    s.parents[0] = -1;
    s.offsets[0] = Vec3::Zero();
    for (int j = 1; j < kJoints; ++j) {
        s.parents[j] = std::uniform_int_distribution<int>(0, j - 1)(rng);
        s.offsets[j] = Vec3(n(rng), n(rng), n(rng));
    }
    return s;
}

GroupMotion with_roots_x(const std::vector<double>& xs) {
    GroupMotion m = testing::identity_pose(static_cast<int>(xs.size()), 2);
    for (int c = 0; c < m.dancers(); ++c)
        for (int l = 0; l < 2; ++l) m.set_root(c, l, Vec3(xs[c], 0.0, 0.1 * c));
    return m;
}

}  // namespace

TEST_CASE("rot6d examples") {
    const double id[6] = {1, 0, 0, 0, 1, 0};
    CHECK(rot6d_to_matrix(id).isApprox(Mat3::Identity(), 1e-15));

    const double rz[6] = {0, 1, 0, -1, 0, 0};
    Mat3 expect;
    expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rot6d_to_matrix(rz) - expect).norm() < 1e-15);

    const double gs[6] = {2, 0, 0, 1, 1, 0};
    CHECK((rot6d_to_matrix(gs) - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("rot6d rejects degenerate columns") {
    const double zero[6] = {0, 0, 0, 0, 1, 0};
    CHECK_THROWS_AS(rot6d_to_matrix(zero), DegenerateInput);
    const double parallel[6] = {1, 0, 0, 2, 0, 0};
    CHECK_THROWS_AS(rot6d_to_matrix(parallel), DegenerateInput);
    const double tiny[6] = {1e-9, 0, 0, 0, 1, 0};
    CHECK_THROWS_AS(rot6d_to_matrix(tiny), DegenerateInput);
}

TEST_CASE("rot6d output is a proper rotation for random inputs") {
    Rng rng(11);
    std::normal_distribution<double> n;
    for (int i = 0; i < 1000; ++i) {
        double r6[6];
        for (double& v : r6) v = n(rng);
        const Mat3 r = rot6d_to_matrix(r6);
        CHECK((r.transpose() * r - Mat3::Identity()).norm() <= 1e-6);
        CHECK(std::abs(r.determinant() - 1.0) <= 1e-6);
    }
}

TEST_CASE("rot6d round-trips a rotation") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Mat3 r = testing::random_rotation(rng);
        double six[6];
        testing::put_rotation(six, r);
        CHECK((rot6d_to_matrix(six) - r).norm() < 1e-12);
    }
}

TEST_CASE("fk identity chain sums rest offsets") {
    const auto skel = SkeletonSpec::smpl_default();
    const GroupMotion m = testing::identity_pose(1, 1);
    const Mat pos = forward_kinematics(m.frame(0, 0), skel);
    for (int j = 0; j < kJoints; ++j) {
        Vec3 expect = Vec3::Zero();
        for (int k = j; k > 0; k = skel.parents[k]) expect += skel.offsets[k];
        CHECK((pos.row(j).transpose() - expect).norm() < 1e-12);
    }
}

TEST_CASE("fk single rotated parent") {
    SkeletonSpec skel = SkeletonSpec::smpl_default();
    GroupMotion m = testing::identity_pose(1, 1);
    const Mat3 rz = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
    testing::put_rotation(m.data().data() + rot_col(0), rz);
    skel.offsets[1] = Vec3(1, 0, 0);
    const Mat pos = forward_kinematics(m.frame(0, 0), skel);
    CHECK((pos.row(1).transpose() - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("fk is translation equivariant") {
    const auto skel = SkeletonSpec::smpl_default();
    GroupMotion a = testing::identity_pose(1, 1), b = a;
    b.set_root(0, 0, Vec3(5, 0, 0));
    const Mat d = forward_kinematics(b.frame(0, 0), skel) - forward_kinematics(a.frame(0, 0), skel);
    for (int j = 0; j < kJoints; ++j) CHECK((d.row(j) - RowVec::Unit(3, 0) * 5.0).norm() < 1e-12);
}

TEST_CASE("fk matches the ancestor composition oracle on random trees") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const SkeletonSpec skel = random_tree(rng);
        skel.validate();
        const RowVec f = random_frame(rng);
        const Mat diff = forward_kinematics(f, skel) - fk_oracle(f, skel);
        CHECK(diff.cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("fk adjoint matches finite differences") {
    Rng rng(8);
    const auto skel = SkeletonSpec::smpl_default();
    const RowVec f = random_frame(rng);
    const Mat w = testing::random_rotation(rng).row(0).replicate(kJoints, 1);  // arbitrary cotangent
    const RowVec g = forward_kinematics_backward(f, skel, w);
    const double h = 1e-6;
    for (int k = 0; k < kFrameDims; k += 7) {
        RowVec p = f, m = f;
        p(k) += h;
        m(k) -= h;
        const double num =
            ((forward_kinematics(p, skel).cwiseProduct(w)).sum() - (forward_kinematics(m, skel).cwiseProduct(w)).sum()) /
            (2 * h);
        CHECK(g(k) == doctest::Approx(num).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("skeleton validation") {
    SkeletonSpec s = SkeletonSpec::smpl_default();
    CHECK_NOTHROW(s.validate());
    const std::array<int, kJoints> smpl = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    CHECK(s.parents == smpl);
    SkeletonSpec cyc = s;
    cyc.parents[3] = 5;
    CHECK_THROWS_AS(cyc.validate(), InvalidConfig);
    SkeletonSpec two_roots = s;
    two_roots.parents[4] = -1;
    CHECK_THROWS_AS(two_roots.validate(), InvalidConfig);
    SkeletonSpec bad = s;
    bad.offsets[2] = Vec3(std::nan(""), 0, 0);
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("root velocity examples") {
    GroupMotion m = testing::identity_pose(1, 3);
    m.set_root(0, 1, Vec3(1, 0, 0));
    m.set_root(0, 2, Vec3(1, 1, 0));
    Mat expect(3, 3);
    expect << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    CHECK(root_velocity(m, 0) == expect);

    GroupMotion still = testing::identity_pose(1, 4);
    for (int l = 0; l < 4; ++l) still.set_root(0, l, Vec3(2, 3, 4));
    CHECK(root_velocity(still, 0).isZero(0.0));

    CHECK(root_velocity(testing::identity_pose(1, 1), 0) == Mat::Zero(1, 3));
}

TEST_CASE("split_merge_body partitions") {
    GroupMotion raw(2, 3), adapted(2, 3);
    for (int j = 0; j < kJoints; ++j) adapted.data().middleCols(rot_col(j), 6).setOnes();
    for (int c = 0; c < 2; ++c)
        for (int l = 0; l < 3; ++l) {
            raw.set_root(c, l, Vec3(1, 1, 1));
            adapted.set_root(c, l, Vec3(2, 2, 2));
        }
    const GroupMotion out = split_merge_body(raw, adapted);
    const auto lower = lower_body_mask();
    for (int j = 0; j < kJoints; ++j) {
        const bool is_lower = std::find(kLowerBodyJoints.begin(), kLowerBodyJoints.end(), j) != kLowerBodyJoints.end();
        CHECK(lower[rot_col(j)] == is_lower);
        CHECK(out.data().middleCols(rot_col(j), 6).isConstant(is_lower ? 1.0 : 0.0));
    }
    CHECK(out.root(1, 2) == Vec3(2, 2, 2));
    CHECK(split_merge_body(raw, raw) == raw);
    CHECK(split_merge_body(out, adapted) == out);
    CHECK_THROWS_AS(split_merge_body(raw, GroupMotion(2, 4)), ShapeMismatch);
}

TEST_CASE("sort_dancers examples") {
    auto [sorted, perm] = sort_dancers(with_roots_x({0.5, -1.0, 0.2}));
    CHECK(perm.order == std::vector<int>{1, 2, 0});
    CHECK(sorted.root(0, 0).x() == -1.0);
    CHECK(sorted.root(2, 0).x() == 0.5);

    CHECK(sort_dancers(with_roots_x({-1, 0, 1})).second.order == std::vector<int>{0, 1, 2});
    CHECK(sort_dancers(with_roots_x({0.3, 0.3})).second.order == std::vector<int>{0, 1});
}

TEST_CASE("sort then inverse permutation is the identity") {
    Rng rng(21);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const int C = 1 + trial % 5;
        GroupMotion m(C, 3);
        for (Eigen::Index r = 0; r < m.data().rows(); ++r)
            for (int k = 0; k < kFrameDims; ++k) m.data()(r, k) = u(rng);
        auto [sorted, perm] = sort_dancers(m);
        CHECK(perm.is_bijection());
        for (int c = 1; c < C; ++c) CHECK(sorted.root(c - 1, 0).x() <= sorted.root(c, 0).x());
        CHECK(apply_permutation(sorted, perm.inverse()) == m);
    }
}

TEST_CASE("final frame order ranks dancers left to right") {
    GroupMotion m = with_roots_x({0.0, 1.0, 2.0});
    m.set_root(0, 1, Vec3(3, 0, 0));
    CHECK(final_frame_order(m) == std::vector<int>{2, 0, 1});
}

TEST_CASE("group motion shape checks") {
    CHECK_THROWS_AS(GroupMotion(0, 3), ShapeMismatch);
    CHECK_THROWS_AS(GroupMotion(2, 3, Mat::Zero(5, kFrameDims)), ShapeMismatch);
}
