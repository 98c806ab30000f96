#pragma once

#include "choreo/tensor.hpp"

#include <array>
#include <vector>

namespace choreo::motion {

// Per-frame descriptor layout: [contacts(4) | root(3) | rot6d(24 x 6)].
inline constexpr int kContactDims = 4;
inline constexpr int kRootOffset = 4;
inline constexpr int kRotOffset = 7;
inline constexpr int kJoints = 24;
inline constexpr int kRot6dDims = 6;
inline constexpr int kFrameDims = kRotOffset + kJoints * kRot6dDims;  // 151
static_assert(kFrameDims == 151);

/// Joints whose rotations belong to the lower-body partition (hips, knees,
/// ankles, feet). Root translation and contact flags go with them.
inline constexpr std::array<int, 8> kLowerBodyJoints = {1, 2, 4, 5, 7, 8, 10, 11};

/// Contact joints in contact-flag order: left heel, right heel, left toe,
/// right toe (ankles 7/8 stand in for heels, feet 10/11 for toes).
inline constexpr std::array<int, 4> kContactJoints = {7, 8, 10, 11};

inline constexpr int rot_col(int joint) { return kRotOffset + joint * kRot6dDims; }

/// True for every descriptor column owned by the lower-body partition.
std::array<bool, kFrameDims> lower_body_mask();

/// C dancers x L frames x 151 channels. Shape is fixed at construction.
class GroupMotion {
public:
    GroupMotion(int dancers, int frames);
    GroupMotion(int dancers, int frames, Mat data);

    int dancers() const { return dancers_; }
    int frames() const { return frames_; }

    const Mat& data() const { return data_; }
    Mat& data() { return data_; }

    auto frame(int dancer, int frame) { return data_.row(row(dancer, frame)); }
    auto frame(int dancer, int frame) const { return data_.row(row(dancer, frame)); }

    /// L x 151 block for one dancer.
    auto dancer(int c) { return data_.middleRows(static_cast<Eigen::Index>(c) * frames_, frames_); }
    auto dancer(int c) const { return data_.middleRows(static_cast<Eigen::Index>(c) * frames_, frames_); }

    Vec3 root(int dancer, int frame) const;
    void set_root(int dancer, int frame, const Vec3& p);

    bool operator==(const GroupMotion& o) const {
        return dancers_ == o.dancers_ && frames_ == o.frames_ && data_ == o.data_;
    }

private:
    Eigen::Index row(int c, int l) const { return static_cast<Eigen::Index>(c) * frames_ + l; }

    int dancers_;
    int frames_;
    Mat data_;
};

/// Kinematic tree. Joints are topologically ordered: parents[j] < j for j > 0.
struct SkeletonSpec {
    std::array<int, kJoints> parents{};
    std::array<Vec3, kJoints> offsets{};

    /// Throws InvalidConfig when the tree or offsets are malformed.
    void validate() const;

    /// SMPL parent array with unit-scaled synthetic rest offsets (y up).
    static SkeletonSpec smpl_default();
};

/// Slot s of the sorted motion holds original dancer order[s].
struct DancerPermutation {
    std::vector<int> order;

    bool is_bijection() const;
    DancerPermutation inverse() const;
};

/// Gram-Schmidt reconstruction from the first two matrix columns.
/// Throws DegenerateInput when a column norm drops below 1e-8.
Mat3 rot6d_to_matrix(const double* r6);

/// Adjoint of rot6d_to_matrix: accumulates dL/dr6 given dL/dR.
void rot6d_backward(const double* r6, const Mat3& grad_r, double* grad_r6);

/// Joint positions (24 x 3) for one 151-wide descriptor row.
Mat forward_kinematics(const Eigen::Ref<const RowVec>& frame, const SkeletonSpec& skel);

/// Given dL/dpositions (24 x 3), returns dL/dframe (1 x 151). Contact
/// columns receive zero.
RowVec forward_kinematics_backward(const Eigen::Ref<const RowVec>& frame, const SkeletonSpec& skel,
                                   const Mat& grad_positions);

/// L x 3 per-frame root displacement of one dancer; row 0 is zero.
Mat root_velocity(const GroupMotion& motion, int dancer);

/// Upper-body rotations from raw, everything else from adapted.
GroupMotion split_merge_body(const GroupMotion& raw, const GroupMotion& adapted);

/// Orders dancers left to right by frame-0 root x (stable).
std::pair<GroupMotion, DancerPermutation> sort_dancers(const GroupMotion& motion);

/// Reorders dancers so that slot s holds motion's dancer perm.order[s].
GroupMotion apply_permutation(const GroupMotion& motion, const DancerPermutation& perm);

/// Left-to-right rank of each dancer slot at the final frame (stable on ties).
std::vector<int> final_frame_order(const GroupMotion& motion);

}  // namespace choreo::motion
