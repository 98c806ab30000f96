#include "choreo/motion.hpp"

#include "choreo/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace choreo::motion {

std::array<bool, kFrameDims> lower_body_mask() {
    std::array<bool, kFrameDims> mask{};
    for (int k = 0; k < kRotOffset; ++k) mask[k] = true;
    for (int j : kLowerBodyJoints)
        for (int k = 0; k < kRot6dDims; ++k) mask[rot_col(j) + k] = true;
    return mask;
}

GroupMotion::GroupMotion(int dancers, int frames)
    : GroupMotion(dancers, frames, Mat::Zero(static_cast<Eigen::Index>(dancers) * frames, kFrameDims)) {}

GroupMotion::GroupMotion(int dancers, int frames, Mat data)
    : dancers_(dancers), frames_(frames), data_(std::move(data)) {
    if (dancers < 1 || frames < 1)
        throw ShapeMismatch("group motion needs at least one dancer and one frame");
    if (data_.rows() != static_cast<Eigen::Index>(dancers) * frames || data_.cols() != kFrameDims)
        throw ShapeMismatch("group motion data must be (C*L) x 151, got " + std::to_string(data_.rows()) +
                            " x " + std::to_string(data_.cols()));
}

Vec3 GroupMotion::root(int dancer, int frame) const {
    auto r = this->frame(dancer, frame);
    return {r(kRootOffset), r(kRootOffset + 1), r(kRootOffset + 2)};
}

void GroupMotion::set_root(int dancer, int frame, const Vec3& p) {
    auto r = this->frame(dancer, frame);
    for (int k = 0; k < 3; ++k) r(kRootOffset + k) = p[k];
}

void SkeletonSpec::validate() const {
    if (parents[0] != -1) throw InvalidConfig("joint 0 must be the root (parent -1)");
    for (int j = 1; j < kJoints; ++j) {
        if (parents[j] < 0 || parents[j] >= j)
            throw InvalidConfig("joint " + std::to_string(j) + " must have a parent with a smaller index");
    }
    for (const auto& o : offsets)
        if (!o.allFinite()) throw InvalidConfig("non-finite bone offset");
}

SkeletonSpec SkeletonSpec::smpl_default() {
    SkeletonSpec s;
    s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    s.offsets = {
        Vec3(0.0, 0.0, 0.0),      // pelvis
        Vec3(0.06, -0.09, 0.0),   // left hip
        Vec3(-0.06, -0.09, 0.0),  // right hip
        Vec3(0.0, 0.11, 0.0),     // spine1
        Vec3(0.04, -0.38, 0.0),   // left knee
        Vec3(-0.04, -0.38, 0.0),  // right knee
        Vec3(0.0, 0.13, 0.0),     // spine2
        Vec3(0.0, -0.40, -0.04),  // left ankle
        Vec3(0.0, -0.40, -0.04),  // right ankle
        Vec3(0.0, 0.05, 0.0),     // spine3
        Vec3(0.02, -0.06, 0.12),  // left foot
        Vec3(-0.02, -0.06, 0.12), // right foot
        Vec3(0.0, 0.21, 0.0),     // neck
        Vec3(0.08, 0.11, 0.0),    // left collar
        Vec3(-0.08, 0.11, 0.0),   // right collar
        Vec3(0.0, 0.09, 0.05),    // head
        Vec3(0.12, 0.04, 0.0),    // left shoulder
        Vec3(-0.12, 0.04, 0.0),   // right shoulder
        Vec3(0.26, 0.0, 0.0),     // left elbow
        Vec3(-0.26, 0.0, 0.0),    // right elbow
        Vec3(0.25, 0.0, 0.0),     // left wrist
        Vec3(-0.25, 0.0, 0.0),    // right wrist
        Vec3(0.08, 0.0, 0.0),     // left hand
        Vec3(-0.08, 0.0, 0.0),    // right hand
    };
    return s;
}

bool DancerPermutation::is_bijection() const {
    std::vector<bool> seen(order.size(), false);
    for (int v : order) {
        if (v < 0 || v >= static_cast<int>(order.size()) || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

DancerPermutation DancerPermutation::inverse() const {
    DancerPermutation inv;
    inv.order.assign(order.size(), 0);
    for (std::size_t s = 0; s < order.size(); ++s) inv.order[order[s]] = static_cast<int>(s);
    return inv;
}

namespace {

constexpr double kMinNorm = 1e-8;

}  // namespace

Mat3 rot6d_to_matrix(const double* r6) {
    const Vec3 a1(r6[0], r6[1], r6[2]);
    const Vec3 a2(r6[3], r6[4], r6[5]);
    if (!a1.allFinite() || !a2.allFinite()) throw DegenerateInput("non-finite 6D rotation");
    const double n1 = a1.norm();
    if (n1 < kMinNorm) throw DegenerateInput("first 6D column has near-zero norm");
    const Vec3 b1 = a1 / n1;
    const Vec3 u = a2 - b1.dot(a2) * b1;
    const double n2 = u.norm();
    if (n2 < kMinNorm) throw DegenerateInput("6D columns are (nearly) parallel");
    const Vec3 b2 = u / n2;
    Mat3 r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b1.cross(b2);
    return r;
}

void rot6d_backward(const double* r6, const Mat3& grad_r, double* grad_r6) {
    const Vec3 a1(r6[0], r6[1], r6[2]);
    const Vec3 a2(r6[3], r6[4], r6[5]);
    const double n1 = a1.norm();
    const Vec3 b1 = a1 / n1;
    const double s = b1.dot(a2);
    const Vec3 u = a2 - s * b1;
    const double n2 = u.norm();
    const Vec3 b2 = u / n2;

    Vec3 g1 = grad_r.col(0);
    Vec3 g2 = grad_r.col(1);
    const Vec3 g3 = grad_r.col(2);
    // b3 = b1 x b2
    g1 += b2.cross(g3);
    g2 += g3.cross(b1);
    // b2 = u / |u|
    const Vec3 gu = (g2 - b2 * b2.dot(g2)) / n2;
    // u = a2 - (b1 . a2) b1
    const double gs = -gu.dot(b1);
    const Vec3 ga2 = gu + gs * b1;
    g1 += -s * gu + gs * a2;
    // b1 = a1 / |a1|
    const Vec3 ga1 = (g1 - b1 * b1.dot(g1)) / n1;
    for (int k = 0; k < 3; ++k) {
        grad_r6[k] += ga1[k];
        grad_r6[3 + k] += ga2[k];
    }
}

namespace {

struct FkState {
    std::array<Mat3, kJoints> local;
    std::array<Mat3, kJoints> global;
    Mat positions{kJoints, 3};
};

FkState run_fk(const Eigen::Ref<const RowVec>& frame, const SkeletonSpec& skel) {
    if (frame.size() != kFrameDims) throw ShapeMismatch("forward kinematics expects a 151-wide frame");
    FkState st;
    for (int j = 0; j < kJoints; ++j) {
        st.local[j] = rot6d_to_matrix(frame.data() + rot_col(j));
        const int p = skel.parents[j];
        if (p < 0) {
            st.global[j] = st.local[j];
            st.positions.row(j) = frame.segment(kRootOffset, 3);
        } else {
            st.global[j] = st.global[p] * st.local[j];
            const Vec3 pos = st.positions.row(p).transpose() + st.global[p] * skel.offsets[j];
            st.positions.row(j) = pos.transpose();
        }
    }
    return st;
}

}  // namespace

Mat forward_kinematics(const Eigen::Ref<const RowVec>& frame, const SkeletonSpec& skel) {
    return run_fk(frame, skel).positions;
}

RowVec forward_kinematics_backward(const Eigen::Ref<const RowVec>& frame, const SkeletonSpec& skel,
                                   const Mat& grad_positions) {
    const FkState st = run_fk(frame, skel);
    std::array<Vec3, kJoints> gpos;
    std::array<Mat3, kJoints> gglobal;
    for (int j = 0; j < kJoints; ++j) {
        gpos[j] = grad_positions.row(j).transpose();
        gglobal[j].setZero();
    }
    RowVec out = RowVec::Zero(kFrameDims);
    for (int j = kJoints - 1; j >= 0; --j) {
        const int p = skel.parents[j];
        Mat3 glocal;
        if (p < 0) {
            glocal = gglobal[j];
            for (int k = 0; k < 3; ++k) out(kRootOffset + k) += gpos[j][k];
        } else {
            gpos[p] += gpos[j];
            gglobal[p] += gpos[j] * skel.offsets[j].transpose();
            gglobal[p] += gglobal[j] * st.local[j].transpose();
            glocal = st.global[p].transpose() * gglobal[j];
        }
        rot6d_backward(frame.data() + rot_col(j), glocal, out.data() + rot_col(j));
    }
    return out;
}

Mat root_velocity(const GroupMotion& motion, int dancer) {
    const int frames = motion.frames();
    Mat v = Mat::Zero(frames, 3);
    for (int l = 1; l < frames; ++l)
        v.row(l) = (motion.root(dancer, l) - motion.root(dancer, l - 1)).transpose();
    return v;
}

GroupMotion split_merge_body(const GroupMotion& raw, const GroupMotion& adapted) {
    if (raw.dancers() != adapted.dancers() || raw.frames() != adapted.frames())
        throw ShapeMismatch("raw and adapted motions differ in shape");
    static const auto mask = lower_body_mask();
    GroupMotion out = raw;
    for (int k = 0; k < kFrameDims; ++k)
        if (mask[k]) out.data().col(k) = adapted.data().col(k);
    return out;
}

GroupMotion apply_permutation(const GroupMotion& motion, const DancerPermutation& perm) {
    if (static_cast<int>(perm.order.size()) != motion.dancers() || !perm.is_bijection())
        throw ShapeMismatch("permutation does not match the dancer count");
    GroupMotion out(motion.dancers(), motion.frames());
    for (int s = 0; s < motion.dancers(); ++s) out.dancer(s) = motion.dancer(perm.order[s]);
    return out;
}

std::pair<GroupMotion, DancerPermutation> sort_dancers(const GroupMotion& motion) {
    DancerPermutation perm;
    perm.order.resize(motion.dancers());
    std::iota(perm.order.begin(), perm.order.end(), 0);
    std::stable_sort(perm.order.begin(), perm.order.end(), [&](int a, int b) {
        return motion.root(a, 0).x() < motion.root(b, 0).x();
    });
    return {apply_permutation(motion, perm), perm};
}

std::vector<int> final_frame_order(const GroupMotion& motion) {
    const int last = motion.frames() - 1;
    std::vector<int> idx(motion.dancers());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return motion.root(a, last).x() < motion.root(b, last).x();
    });
    std::vector<int> rank(motion.dancers());
    for (int r = 0; r < motion.dancers(); ++r) rank[idx[r]] = r;
    return rank;
}

}  // namespace choreo::motion
