#include "choreo/metrics.hpp"

#include "choreo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace choreo::metrics {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// L x 72 joint positions of one dancer.
Mat joint_track(const motion::GroupMotion& m, int dancer, const motion::SkeletonSpec& skel) {
    Mat out(m.frames(), motion::kJoints * 3);
    for (int l = 0; l < m.frames(); ++l) {
        const Mat p = motion::forward_kinematics(m.frame(dancer, l), skel);
        for (int j = 0; j < motion::kJoints; ++j) out.block(l, j * 3, 1, 3) = p.row(j);
    }
    return out;
}

constexpr double kStillAcceleration = 1e-9;  // m/s^2

Mat frame_deltas(const Mat& track) {
    return track.bottomRows(track.rows() - 1) - track.topRows(track.rows() - 1);
}

}  // namespace

std::string MetricReport::to_text() const {
    std::ostringstream os;
    os << "tif=" << fmt(tif) << "\n"
       << "pfc=" << fmt(pfc) << "\n"
       << "gmc=" << fmt(gmc) << "\n"
       << "mmc=" << fmt(mmc) << "\n"
       << "div=" << fmt(div) << "\n"
       << "gmr=n/a\n"
       << "fid=n/a\n";
    if (seam_ratio) os << "seam_ratio=" << fmt(*seam_ratio) << "\n";
    return os.str();
}

double tif(const motion::GroupMotion& m, double radius) {
    if (m.dancers() < 2) throw InvalidConfig("collision frequency needs at least two dancers");
    const double limit = 2.0 * radius;
    int hits = 0;
    for (int l = 0; l < m.frames(); ++l) {
        bool hit = false;
        for (int i = 0; i < m.dancers() && !hit; ++i)
            for (int j = i + 1; j < m.dancers() && !hit; ++j) {
                const Vec3 d = m.root(i, l) - m.root(j, l);
                hit = std::hypot(d.x(), d.z()) < limit;
            }
        hits += hit ? 1 : 0;
    }
    return static_cast<double>(hits) / m.frames();
}

double pfc(const motion::GroupMotion& m, int dancer, const motion::SkeletonSpec& skel, double fps) {
    if (m.frames() < 3) throw InvalidConfig("foot-contact score needs at least three frames");
    constexpr int kLeftFoot = 10, kRightFoot = 11;
    const Mat track = joint_track(m, dancer, skel);
    double max_acc = 0.0, acc_sum = 0.0;
    for (int l = 1; l + 1 < m.frames(); ++l) {
        const Vec3 a = (m.root(dancer, l + 1) - 2.0 * m.root(dancer, l) + m.root(dancer, l - 1)) * fps * fps;
        auto speed = [&](int joint) {
            const RowVec d = track.block(l + 1, joint * 3, 1, 3) - track.block(l - 1, joint * 3, 1, 3);
            return d.norm() * fps / 2.0;
        };
        const double an = a.norm();
        max_acc = std::max(max_acc, an);
        acc_sum += an * std::min(speed(kLeftFoot), speed(kRightFoot));
    }
    // Roundoff-level root acceleration would otherwise normalize to order one.
    if (max_acc < kStillAcceleration) return 0.0;
    return acc_sum / (m.frames() - 2) / max_acc;
}

double gmc(const motion::GroupMotion& m, const motion::SkeletonSpec& skel) {
    if (m.dancers() < 2) throw InvalidConfig("group correlation needs at least two dancers");
    if (m.frames() < 2) throw InvalidConfig("group correlation needs at least two frames");
    std::vector<Eigen::VectorXd> vel;
    for (int c = 0; c < m.dancers(); ++c) {
        const Mat d = frame_deltas(joint_track(m, c, skel));
        Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
        flat.array() -= flat.mean();
        vel.push_back(std::move(flat));
    }
    double total = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < vel.size(); ++i)
        for (std::size_t j = i + 1; j < vel.size(); ++j, ++pairs) {
            const double ni = vel[i].norm(), nj = vel[j].norm();
            if (ni == 0.0 || nj == 0.0) continue;
            total += vel[i].dot(vel[j]) / (ni * nj);
        }
    return total / pairs;
}

std::vector<int> kinematic_beats(const motion::GroupMotion& m, int dancer, const motion::SkeletonSpec& skel) {
    const Mat d = frame_deltas(joint_track(m, dancer, skel));
    // speed[i] belongs to frame i + 1
    std::vector<double> speed(static_cast<std::size_t>(d.rows()));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < motion::kJoints; ++j) s += d.block(i, j * 3, 1, 3).norm();
        speed[i] = s;
    }
    std::vector<int> beats;
    for (std::size_t i = 1; i + 1 < speed.size(); ++i)
        if (speed[i] < speed[i - 1] && speed[i] < speed[i + 1]) beats.push_back(static_cast<int>(i) + 1);
    return beats;
}

double beat_alignment(std::span<const int> music_beats, std::span<const int> kin_beats, double sigma) {
    if (music_beats.empty() || kin_beats.empty()) return 0.0;
    double total = 0.0;
    for (int b : music_beats) {
        double best = std::numeric_limits<double>::infinity();
        for (int k : kin_beats) best = std::min(best, static_cast<double>(b - k) * (b - k));
        total += std::exp(-best / (2.0 * sigma * sigma));
    }
    return total / static_cast<double>(music_beats.size());
}

double mmc(const motion::GroupMotion& m, int dancer, const MusicTrack& music, const motion::SkeletonSpec& skel,
           double sigma) {
    const auto mb = music.beat_frames();
    const auto kb = kinematic_beats(m, dancer, skel);
    return beat_alignment(mb, kb, sigma);
}

Eigen::VectorXd kinetic_features(const motion::GroupMotion& m, int dancer, const motion::SkeletonSpec& skel) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(motion::kJoints);
    if (m.frames() < 2) return f;
    const Mat d = frame_deltas(joint_track(m, dancer, skel));
    for (int j = 0; j < motion::kJoints; ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d.rows(); ++i) s += d.block(i, j * 3, 1, 3).norm();
        f[j] = s / static_cast<double>(d.rows());
    }
    return f;
}

double diversity(std::span<const Eigen::VectorXd> features) {
    if (features.size() < 2) throw InvalidConfig("diversity needs at least two sequences");
    double total = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        for (std::size_t j = i + 1; j < features.size(); ++j, ++pairs) total += (features[i] - features[j]).norm();
    return total / pairs;
}

MetricReport evaluate(const motion::GroupMotion& m, const MusicTrack& music, const motion::SkeletonSpec& skel,
                      double radius, double sigma, double fps) {
    MetricReport r;
    r.tif = tif(m, radius);
    r.gmc = gmc(m, skel);
    std::vector<Eigen::VectorXd> feats;
    for (int c = 0; c < m.dancers(); ++c) {
        r.pfc += pfc(m, c, skel, fps);
        r.mmc += mmc(m, c, music, skel, sigma);
        feats.push_back(kinetic_features(m, c, skel));
    }
    r.pfc /= m.dancers();
    r.mmc /= m.dancers();
    r.div = diversity(feats);
    return r;
}

}  // namespace choreo::metrics
