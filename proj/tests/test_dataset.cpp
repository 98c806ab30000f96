#include "helpers.hpp"

#include "choreo/dataset.hpp"
#include "choreo/errors.hpp"
#include "choreo/metrics.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace choreo;
using namespace choreo::dataset;
using motion::GroupMotion;

namespace {

const motion::SkeletonSpec kSkel = motion::SkeletonSpec::smpl_default();

ChoreographyRecipe recipe(Formation f, int dancers = 3, int frames = 60, std::uint64_t seed = 1) {
    ChoreographyRecipe r;
    r.formation = f;
    r.dancers = dancers;
    r.frames = frames;
    r.seed = seed;
    return r;
}

MotionFile sample_file(std::uint64_t seed = 3) {
    auto [m, music] = synth_group_sequence(recipe(Formation::Swap, 2, 30, seed));
    MotionFile f;
    f.motion = m;
    f.music = music;
    return f;
}

std::string encode(const MotionFile& f) {
    std::ostringstream os;
    write_motion(os, f);
    return os.str();
}

MotionFile decode(const std::string& bytes) {
    std::istringstream is(bytes);
    return read_motion(is);
}

std::string replace_line(std::string bytes, const std::string& from, const std::string& to) {
    const auto at = bytes.find(from);
    REQUIRE(at != std::string::npos);
    return bytes.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("synthesis is deterministic per seed") {
    const auto a = synth_group_sequence(recipe(Formation::Circle, 3, 60, 5));
    const auto b = synth_group_sequence(recipe(Formation::Circle, 3, 60, 5));
    const auto c = synth_group_sequence(recipe(Formation::Circle, 3, 60, 6));
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK_FALSE(a.first == c.first);
}

TEST_CASE("synthesized sequences are well formed") {
    for (auto f : {Formation::Line, Formation::Circle, Formation::Swap, Formation::ConvergeDiverge})
        for (int C : {2, 3, 5}) {
            const auto [m, music] = synth_group_sequence(recipe(f, C, 45, 11));
            CHECK(m.dancers() == C);
            CHECK(m.frames() == 45);
            CHECK(music.frames() == 45);
            CHECK(m.data().allFinite());
            CHECK_NOTHROW(music.validate());
            CHECK(contacts_consistent(m, kSkel));
            // Each stored rotation reconstructs to an orthonormal matrix.
            for (int l = 0; l < 45; l += 11)
                for (int j = 0; j < motion::kJoints; ++j) {
                    const Mat3 r = motion::rot6d_to_matrix(m.frame(0, l).data() + motion::rot_col(j));
                    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
                }
        }
}

TEST_CASE("music beats follow the beat period") {
    auto r = recipe(Formation::Line, 2, 60);
    r.beat_period = 12;
    CHECK(synth_music(r).beat_frames() == std::vector<int>{0, 12, 24, 36, 48});
}

TEST_CASE("formations") {
    const auto [line, lm] = synth_group_sequence(recipe(Formation::Line, 3, 60));
    CHECK(metrics::tif(line) == 0.0);
    CHECK(motion::final_frame_order(line) == std::vector<int>{0, 1, 2});

    const auto [swap, sm] = synth_group_sequence(recipe(Formation::Swap, 3, 60));
    CHECK(motion::final_frame_order(swap) == std::vector<int>{1, 0, 2});

    auto fixture = recipe(Formation::Line, 2, 60);
    fixture.collision_fixture = true;
    CHECK(metrics::tif(synth_group_sequence(fixture).first) > 0.0);

    CHECK(parse_formation(to_string(Formation::ConvergeDiverge)) == Formation::ConvergeDiverge);
    CHECK_THROWS_AS(parse_formation("square"), InvalidConfig);
}

TEST_CASE("recipe validation") {
    CHECK_THROWS_AS(synth_group_sequence(recipe(Formation::Line, 1)), InvalidConfig);
    CHECK_THROWS_AS(synth_group_sequence(recipe(Formation::Line, 6)), InvalidConfig);
    CHECK_THROWS_AS(synth_group_sequence(recipe(Formation::Line, 3, 29)), InvalidConfig);
    auto r = recipe(Formation::Line);
    r.beat_period = 1;
    CHECK_THROWS_AS(r.validate(), InvalidConfig);
    r = recipe(Formation::Line);
    r.fps = 0.0;
    CHECK_THROWS_AS(r.validate(), InvalidConfig);
}

TEST_CASE("contact flags mark slow feet") {
    GroupMotion still = testing::identity_pose(1, 4);
    CHECK(contact_flags_from_kinematics(still, kSkel) == Mat::Ones(4, 4));
    GroupMotion moving = still;
    for (int l = 0; l < 4; ++l) moving.set_root(0, l, Vec3(0.1 * l, 0, 0));
    CHECK(contact_flags_from_kinematics(moving, kSkel) == Mat::Zero(4, 4));
    moving.data().leftCols(4).setOnes();
    CHECK_FALSE(contacts_consistent(moving, kSkel));
}

TEST_CASE("container round trip is exact") {
    const MotionFile f = sample_file();
    const MotionFile back = decode(encode(f));
    CHECK(back.motion == f.motion);
    CHECK(back.music == f.music);
    CHECK(back.skeleton.parents == f.skeleton.parents);
    for (int j = 0; j < motion::kJoints; ++j) CHECK(back.skeleton.offsets[j] == f.skeleton.offsets[j]);
    CHECK(back.fps == f.fps);
    CHECK(encode(back) == encode(f));

    const auto path = std::filesystem::temp_directory_path() / "choreo_test_roundtrip.bin";
    write_motion(path, f);
    CHECK(read_motion(path).motion == f.motion);
    std::filesystem::remove(path);
}

TEST_CASE("container byte layout") {
    const MotionFile f = sample_file();
    const std::string bytes = encode(f);
    CHECK(bytes.rfind("CHOREO-MOTION\nversion 1\n", 0) == 0);
    const auto end = bytes.find("\nend\n");
    REQUIRE(end != std::string::npos);
    const std::size_t payload = end + 5;
    const std::size_t C = 2, L = 30;
    CHECK(bytes.size() == payload + 8 * (72 + C * L * 151 + L * 35));

    auto le_double = [&](std::size_t at) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
        return std::bit_cast<double>(bits);
    };
    CHECK(le_double(payload + 8 * 4) == f.skeleton.offsets[1].y());
    // Motion is row-major: dancer, then frame, then channel.
    const std::size_t motion_at = payload + 8 * 72;
    CHECK(le_double(motion_at + 8 * (151 * (L + 2) + 5)) == f.motion.data()(L + 2, 5));
    const std::size_t music_at = motion_at + 8 * C * L * 151;
    CHECK(le_double(music_at + 8 * (35 * 3 + 33)) == f.music.features()(3, 33));
}

TEST_CASE("container format errors") {
    const std::string good = encode(sample_file());
    CHECK_THROWS_AS(decode(replace_line(good, "version 1", "version 2")), FormatError);
    CHECK_THROWS_AS(decode(replace_line(good, "CHOREO-MOTION", "CHOREO-MOTIOX")), FormatError);
    CHECK_THROWS_AS(decode(replace_line(good, "motion_dims 151", "motion_dims 150")), FormatError);
    CHECK_THROWS_AS(decode(replace_line(good, "music_dims 35", "music_dims 34")), FormatError);
    CHECK_THROWS_AS(decode(replace_line(good, "dancers 2", "dancers 0")), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, 40)), FormatError);
    CHECK_THROWS_AS(decode(good + "x"), FormatError);
    CHECK_THROWS_AS(decode(""), FormatError);

    // A NaN in the motion payload.
    std::string bad = good;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto bits = std::bit_cast<std::uint64_t>(nan);
    const std::size_t at = good.find("\nend\n") + 5 + 8 * 72 + 8 * 10;
    for (int b = 0; b < 8; ++b) bad[at + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    CHECK_THROWS_AS(decode(bad), FormatError);

    MotionFile nonfinite = sample_file();
    nonfinite.motion.data()(0, 0) = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    CHECK_THROWS_AS(write_motion(os, nonfinite), FormatError);

    CHECK_THROWS_AS(read_motion(std::filesystem::path("/nonexistent/choreo.bin")), IoError);
}
