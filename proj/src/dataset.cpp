#include "choreo/dataset.hpp"

#include "binary_io.hpp"
#include "choreo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace choreo::dataset {

using motion::GroupMotion;
using motion::SkeletonSpec;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

Mat3 axis_angle(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

void put_rotation(Eigen::Ref<RowVec> frame, int joint, const Mat3& r) {
    const int col = motion::rot_col(joint);
    for (int k = 0; k < 3; ++k) {
        frame(col + k) = r(k, 0);
        frame(col + 3 + k) = r(k, 1);
    }
}

/// Moving-average smoothed white noise, unit-ish variance.
Eigen::VectorXd band_limited(int frames, Rng& rng, int width) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd white(frames + width);
    for (Eigen::Index i = 0; i < white.size(); ++i) white[i] = nd(rng);
    Eigen::VectorXd out(frames);
    for (int l = 0; l < frames; ++l) out[l] = white.segment(l, width).mean() * std::sqrt(static_cast<double>(width));
    return out;
}

}  // namespace

Formation parse_formation(const std::string& name) {
    if (name == "line") return Formation::Line;
    if (name == "circle") return Formation::Circle;
    if (name == "swap") return Formation::Swap;
    if (name == "converge-diverge") return Formation::ConvergeDiverge;
    throw InvalidConfig("unknown formation '" + name + "'");
}

std::string to_string(Formation f) {
    switch (f) {
        case Formation::Line: return "line";
        case Formation::Circle: return "circle";
        case Formation::Swap: return "swap";
        case Formation::ConvergeDiverge: return "converge-diverge";
    }
    return "line";
}

void ChoreographyRecipe::validate() const {
    if (dancers < 2 || dancers > 5) throw InvalidConfig("recipes support 2 to 5 dancers");
    if (frames < 30) throw InvalidConfig("recipes need at least 30 frames");
    if (beat_period < 2) throw InvalidConfig("beat period must be at least 2 frames");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw InvalidConfig("fps must be positive");
}

MusicTrack synth_music(const ChoreographyRecipe& recipe) {
    recipe.validate();
    const int L = recipe.frames;
    const int P = recipe.beat_period;
    Rng rng(recipe.seed ^ 0x6d75736963ULL);
    Mat f = Mat::Zero(L, MusicTrack::kChannels);
    for (int l = 0; l < L; ++l) f(l, MusicTrack::kEnvelope) = 0.5 + 0.5 * std::cos(kTau * l / P);
    for (int k = 0; k < MusicTrack::kSpectralCount; ++k)
        f.col(MusicTrack::kSpectralBegin + k) = 0.5 * band_limited(L, rng, 4 + k % 5);
    for (int k = 0; k < MusicTrack::kChromaCount; ++k) {
        const Eigen::VectorXd n = band_limited(L, rng, 8);
        for (int l = 0; l < L; ++l) f(l, MusicTrack::kChromaBegin + k) = 1.0 / (1.0 + std::exp(-n[l]));
    }
    for (int l = 0; l < L; ++l) {
        f(l, MusicTrack::kBeat) = l % P == 0 ? 1.0 : 0.0;
        const double e = f(l, MusicTrack::kEnvelope);
        const double prev = l > 0 ? f(l - 1, MusicTrack::kEnvelope) : -1.0;
        const double next = l + 1 < L ? f(l + 1, MusicTrack::kEnvelope) : -1.0;
        f(l, MusicTrack::kPeak) = (e > prev && e >= next) ? 1.0 : 0.0;
    }
    return MusicTrack(std::move(f));
}

namespace {

/// Ground-plane (x, z) position of dancer c at normalized time s in [0, 1].
Eigen::Vector2d formation_position(const ChoreographyRecipe& r, int c, double s) {
    const int C = r.dancers;
    const double centered = c - (C - 1) / 2.0;
    switch (r.formation) {
        case Formation::Line: return {centered * 1.0, 0.0};
        case Formation::Circle: {
            const double radius = std::max(1.0, 0.6 / (2.0 * std::sin(std::numbers::pi / C)));
            const double theta = kTau * c / C + 0.5 * std::numbers::pi * s;
            return {radius * std::cos(theta), radius * std::sin(theta)};
        }
        case Formation::Swap: {
            Eigen::Vector2d p(centered * 1.0, 0.0);
            if (c > 1) return p;
            // Dancers 0 and 1 trade places along a half circle in the middle third.
            const double mid = (0.0 - (C - 1) / 2.0 + 1.0 - (C - 1) / 2.0) / 2.0;
            const double theta = std::numbers::pi * smoothstep((s - 1.0 / 3.0) * 3.0);
            const double sign = c == 0 ? -1.0 : 1.0;
            return {mid + sign * 0.5 * std::cos(theta), -sign * 0.5 * std::sin(theta)};
        }
        case Formation::ConvergeDiverge: {
            const double spacing = 0.8 + 0.2 * std::cos(kTau * s);
            return {centered * spacing, 0.0};
        }
    }
    return {0.0, 0.0};
}

}  // namespace

std::pair<GroupMotion, MusicTrack> synth_group_sequence(const ChoreographyRecipe& recipe, const SkeletonSpec& skel) {
    recipe.validate();
    skel.validate();
    const int C = recipe.dancers, L = recipe.frames, P = recipe.beat_period;
    MusicTrack music = synth_music(recipe);
    Rng rng(recipe.seed);
    std::uniform_real_distribution<double> phase_dist(-0.3, 0.3);

    GroupMotion m(C, L);
    const Vec3 x_axis = Vec3::UnitX(), y_axis = Vec3::UnitY(), z_axis = Vec3::UnitZ();
    for (int c = 0; c < C; ++c) {
        const double phase = phase_dist(rng);
        const double sway_phase = phase_dist(rng) * 10.0;
        for (int l = 0; l < L; ++l) {
            const double s = static_cast<double>(l) / (L - 1);
            const double beat = kTau * l / P + phase;
            Eigen::Vector2d xz = formation_position(recipe, c, s);
            if (recipe.collision_fixture && c < 2) {
                const double start = c == 0 ? -0.5 : 0.5;
                xz = {start - 2.0 * start * smoothstep(s), 0.0};
            }
            xz.x() += 0.04 * std::sin(kTau * l / P + sway_phase);
            const double drift = 0.3 * std::sin(kTau * s);
            auto row = m.frame(c, l);
            m.set_root(c, l, Vec3(xz.x(), 0.93 + 0.02 * std::sin(2.0 * beat), xz.y() + drift));

            put_rotation(row, 0, axis_angle(y_axis, 0.2 * std::sin(beat)));
            for (int j = 1; j < motion::kJoints; ++j) put_rotation(row, j, Mat3::Identity());
            const double swing = std::sin(beat);
            put_rotation(row, 1, axis_angle(x_axis, 0.3 * swing));
            put_rotation(row, 2, axis_angle(x_axis, -0.3 * swing));
            put_rotation(row, 4, axis_angle(x_axis, 0.15 * (1.0 - std::cos(beat))));
            put_rotation(row, 5, axis_angle(x_axis, 0.15 * (1.0 + std::cos(beat))));
            put_rotation(row, 3, axis_angle(x_axis, 0.05 * std::sin(2.0 * beat)));
            put_rotation(row, 6, axis_angle(z_axis, 0.05 * std::sin(beat)));
            put_rotation(row, 9, axis_angle(y_axis, 0.1 * std::sin(beat)));
            put_rotation(row, 16, axis_angle(z_axis, 0.5 * swing));
            put_rotation(row, 17, axis_angle(z_axis, 0.5 * swing));
            put_rotation(row, 18, axis_angle(y_axis, 0.4 * (1.0 - std::cos(beat))));
            put_rotation(row, 19, axis_angle(y_axis, -0.4 * (1.0 - std::cos(beat))));
            put_rotation(row, 15, axis_angle(x_axis, 0.1 * std::sin(beat)));
        }
    }
    m.data().leftCols(motion::kContactDims) = contact_flags_from_kinematics(m, skel);
    return {std::move(m), std::move(music)};
}

Mat contact_flags_from_kinematics(const GroupMotion& m, const SkeletonSpec& skel) {
    Mat flags = Mat::Zero(m.data().rows(), motion::kContactDims);
    if (m.frames() < 2) return flags;
    for (int c = 0; c < m.dancers(); ++c) {
        std::vector<Mat> pos;
        for (int l = 0; l < m.frames(); ++l) pos.push_back(motion::forward_kinematics(m.frame(c, l), skel));
        for (int l = 0; l < m.frames(); ++l) {
            const int a = l == 0 ? 0 : l - 1;
            const int b = l == 0 ? 1 : l;
            for (int k = 0; k < motion::kContactDims; ++k) {
                const int j = motion::kContactJoints[k];
                const double speed = (pos[b].row(j) - pos[a].row(j)).norm();
                flags(static_cast<Eigen::Index>(c) * m.frames() + l, k) = speed < kContactSpeed ? 1.0 : 0.0;
            }
        }
    }
    return flags;
}

bool contacts_consistent(const GroupMotion& m, const SkeletonSpec& skel) {
    const Mat expected = contact_flags_from_kinematics(m, skel);
    for (Eigen::Index r = 0; r < expected.rows(); ++r)
        for (int k = 0; k < motion::kContactDims; ++k)
            if (m.data()(r, k) > 0.5 && expected(r, k) < 0.5) return false;
    return true;
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr const char* kMagic = "CHOREO-MOTION";

}  // namespace

void write_motion(std::ostream& os, const MotionFile& f) {
    if (!f.motion.data().allFinite() || !f.music.features().allFinite())
        throw FormatError("refusing to write non-finite values");
    if (f.music.frames() != f.motion.frames()) throw ShapeMismatch("music and motion frame counts differ");
    const int C = f.motion.dancers(), L = f.motion.frames();
    os << kMagic << "\n"
       << "version " << kFormatVersion << "\n"
       << "fps " << num(f.fps) << "\n"
       << "dancers " << C << "\n"
       << "frames " << L << "\n"
       << "motion_dims " << motion::kFrameDims << "\n"
       << "music_dims " << MusicTrack::kChannels << "\n"
       << "parents";
    for (int p : f.skeleton.parents) os << ' ' << p;
    os << "\n"
       << "motion_layout contacts:0-3 root:4-6 rot6d:7-150\n"
       << "music_layout envelope:0 spectral:1-20 chroma:21-32 beat:33 peak:34\n"
       << "coordinates y-up meters\n"
       << "payload float64-le offsets:72 motion:" << static_cast<long>(C) * L * motion::kFrameDims
       << " music:" << static_cast<long>(L) * MusicTrack::kChannels << "\n"
       << "end\n";
    std::vector<double> offsets;
    for (const auto& o : f.skeleton.offsets) offsets.insert(offsets.end(), {o.x(), o.y(), o.z()});
    detail::write_f64(os, offsets.data(), offsets.size());
    detail::write_f64(os, f.motion.data().data(), static_cast<std::size_t>(f.motion.data().size()));
    detail::write_f64(os, f.music.features().data(), static_cast<std::size_t>(f.music.features().size()));
}

void write_motion(const std::filesystem::path& path, const MotionFile& f) {
    std::ostringstream buf;
    write_motion(buf, f);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::string bytes = buf.str();
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

MotionFile read_motion(std::istream& is) {
    using detail::header_line;
    using detail::parse_int;
    auto expect = [&](const std::string& key, std::size_t min_tokens) {
        auto tok = header_line(is);
        if (tok.size() < min_tokens || tok[0] != key) throw FormatError("expected header key '" + key + "'");
        return tok;
    };
    if (auto tok = header_line(is); tok.size() != 1 || tok[0] != kMagic) throw FormatError("not a motion container");
    const long version = parse_int(expect("version", 2)[1], "version");
    if (version != kFormatVersion) throw FormatError("unsupported format version " + std::to_string(version));
    MotionFile f;
    f.fps = detail::parse_double(expect("fps", 2)[1], "fps");
    const long C = parse_int(expect("dancers", 2)[1], "dancers");
    const long L = parse_int(expect("frames", 2)[1], "frames");
    if (C < 1) throw FormatError("dancer count must be positive");
    if (L < 1) throw FormatError("frame count must be positive");
    if (parse_int(expect("motion_dims", 2)[1], "motion_dims") != motion::kFrameDims)
        throw FormatError("motion_dims must be 151");
    if (parse_int(expect("music_dims", 2)[1], "music_dims") != MusicTrack::kChannels)
        throw FormatError("music_dims must be 35");
    const auto parents = expect("parents", 1 + motion::kJoints);
    if (parents.size() != 1 + motion::kJoints) throw FormatError("parents must list 24 joints");
    for (int j = 0; j < motion::kJoints; ++j) f.skeleton.parents[j] = static_cast<int>(parse_int(parents[1 + j], "parent"));
    expect("motion_layout", 1);
    expect("music_layout", 1);
    expect("coordinates", 1);
    expect("payload", 1);
    if (auto tok = header_line(is); tok.size() != 1 || tok[0] != "end") throw FormatError("missing header terminator");

    std::vector<double> offsets(motion::kJoints * 3);
    detail::read_f64(is, offsets.data(), offsets.size());
    for (int j = 0; j < motion::kJoints; ++j) f.skeleton.offsets[j] = Vec3(offsets[j * 3], offsets[j * 3 + 1], offsets[j * 3 + 2]);
    try {
        f.skeleton.validate();
    } catch (const InvalidConfig& e) {
        throw FormatError(e.what());
    }
    Mat motion_data(C * L, motion::kFrameDims);
    detail::read_f64(is, motion_data.data(), static_cast<std::size_t>(motion_data.size()));
    Mat music(L, MusicTrack::kChannels);
    detail::read_f64(is, music.data(), static_cast<std::size_t>(music.size()));
    detail::expect_eof(is);
    if (!motion_data.allFinite()) throw FormatError("motion payload contains non-finite values");
    f.motion = GroupMotion(static_cast<int>(C), static_cast<int>(L), std::move(motion_data));
    f.music = MusicTrack(std::move(music));
    f.music.validate();
    return f;
}

MotionFile read_motion(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return read_motion(is);
}

}  // namespace choreo::dataset
