#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace choreo {

/// Dense row-major matrix of doubles; the only tensor type in the library.
/// Rank-3 data (dancers x frames x channels) is stored with dancers and frames
/// folded into rows: row = dancer * frames + frame.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using Rng = std::mt19937_64;

inline Mat gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace choreo
