#include "choreo/checkpoint.hpp"
#include "choreo/cli.hpp"
#include "choreo/dataset.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using namespace choreo;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("choreo_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

const std::vector<std::string> kTinyModel{"--hidden", "8", "--layers", "1", "--heads", "2",
                                          "--fa-blocks", "1", "--diffusion-steps", "4"};

std::string tiny_checkpoint(const TempDir& dir) {
    REQUIRE(run({"synth", "--dancers", "2", "--frames", "30", "--pattern", "swap", "--seed", "1", "--out",
                 dir / "corpus"})
                .code == 0);
    std::vector<std::string> args{"train", "--data", dir / "corpus", "--steps", "2", "--batch", "1",
                                  "--out", dir / "model.ckpt"};
    args.insert(args.end(), kTinyModel.begin(), kTinyModel.end());
    const Run r = run(args);
    REQUIRE(r.code == 0);
    return dir / "model.ckpt";
}

}  // namespace

TEST_CASE("synth writes the corpus") {
    TempDir dir("synth");
    const Run r = run({"synth", "--dancers", "3", "--frames", "60", "--pattern", "swap", "--seed", "7", "--out",
                       dir / "corpus"});
    CHECK(r.code == 0);
    const auto f = dataset::read_motion(fs::path(dir / "corpus/seq_000.bin"));
    CHECK(f.motion.dancers() == 3);
    CHECK(f.motion.frames() == 60);

    const Run again = run({"synth", "--dancers", "3", "--frames", "60", "--pattern", "swap", "--seed", "7", "--out",
                           dir / "again"});
    CHECK(slurp(dir / "corpus/seq_000.bin") == slurp(dir / "again/seq_000.bin"));
}

TEST_CASE("eval of a missing file is a validation error with no report") {
    TempDir dir("missing");
    const Run r = run({"eval", "--pred", dir / "missing.bin", "--report", dir / "report.txt"});
    CHECK(r.code == cli::kExitValidation);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(dir / "report.txt"));
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == cli::kExitValidation);
    CHECK(run({"dance"}).code == cli::kExitValidation);
    CHECK(run({"synth", "--bogus", "1", "--out", "/tmp/x"}).code == cli::kExitValidation);
    CHECK(run({"synth", "--dancers", "9", "--out", "/tmp/x"}).code == cli::kExitValidation);
    CHECK(run({"synth", "--pattern", "square", "--out", "/tmp/x"}).code == cli::kExitValidation);
    CHECK(run({"synth", "--dancers", "two"}).code == cli::kExitValidation);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("sample-long writes exactly the requested frames") {
    TempDir dir("long");
    const std::string ckpt = tiny_checkpoint(dir);
    const Run r = run({"sample-long", "--checkpoint", ckpt, "--frames", "225", "--window", "150", "--hop", "75",
                       "--seed", "3", "--out", dir / "long.bin", "--plot", dir / "plots"});
    REQUIRE(r.code == 0);
    const auto f = dataset::read_motion(fs::path(dir / "long.bin"));
    CHECK(f.motion.frames() == 225);
    CHECK(f.music.frames() == 225);
    CHECK(fs::exists(dir / "plots/trajectories.svg"));
    CHECK(fs::exists(dir / "plots/seams.svg"));

    // A length between plan boundaries is rounded up internally and trimmed.
    REQUIRE(run({"sample-long", "--checkpoint", ckpt, "--frames", "200", "--out", dir / "trim.bin"}).code == 0);
    CHECK(dataset::read_motion(fs::path(dir / "trim.bin")).motion.frames() == 200);

    CHECK(run({"sample-long", "--checkpoint", ckpt, "--frames", "200", "--swap-order", "0,0", "--out",
               dir / "bad.bin"})
              .code == cli::kExitValidation);
}

TEST_CASE("single-window sampling and evaluation") {
    TempDir dir("sample");
    const std::string ckpt = tiny_checkpoint(dir);
    REQUIRE(run({"sample", "--checkpoint", ckpt, "--frames", "20", "--swap-order", "1,0", "--out", dir / "s.bin"})
                .code == 0);
    const Run e = run({"eval", "--pred", dir / "s.bin"});
    CHECK(e.code == 0);
    CHECK(e.out.find("tif=") == 0);
    CHECK(e.out.find("gmr=n/a\nfid=n/a\n") != std::string::npos);
    CHECK(run({"eval", "--pred", dir / "s.bin", "--window", "10"}).code == cli::kExitValidation);
    const Run seams = run({"eval", "--pred", dir / "s.bin", "--window", "10", "--hop", "5"});
    CHECK(seams.out.find("seam_ratio=") != std::string::npos);
}

TEST_CASE("config file sits between defaults and flags") {
    TempDir dir("config");
    REQUIRE(run({"synth", "--dancers", "2", "--frames", "30", "--out", dir / "corpus"}).code == 0);
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[train]\nhidden = 4\nheads = 2\nlayers = 1\nfa-blocks = 1\ndiffusion-steps = 3\nsteps = 1\n";
    }
    REQUIRE(run({"--config", dir / "run.toml", "train", "--data", dir / "corpus", "--out", dir / "a.ckpt"}).code == 0);
    REQUIRE(run({"--config", dir / "run.toml", "train", "--data", dir / "corpus", "--hidden", "6", "--out",
                 dir / "b.ckpt"})
                .code == 0);
    const Model a = load_checkpoint(fs::path(dir / "a.ckpt"));
    const Model b = load_checkpoint(fs::path(dir / "b.ckpt"));
    CHECK(a.config.hidden == 4);
    CHECK(a.steps == 3);
    CHECK(b.config.hidden == 6);
    CHECK(b.config.layers == 1);

    {
        std::ofstream cfg(dir / "bad.toml");
        cfg << "[train]\nwidth = 4\n";
    }
    CHECK(run({"--config", dir / "bad.toml", "train", "--data", dir / "corpus", "--out", dir / "c.ckpt"}).code ==
          cli::kExitValidation);
}

TEST_CASE("output directory from the environment") {
    TempDir dir("env");
    ::setenv(cli::kOutDirEnv, dir.path.c_str(), 1);
    const Run r = run({"synth", "--dancers", "2", "--frames", "30"});
    ::unsetenv(cli::kOutDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "corpus/seq_000.bin"));
    CHECK(run({"train", "--data", dir / "corpus", "--steps", "1"}).code == cli::kExitValidation);
}

TEST_CASE("commands leave their inputs untouched") {
    TempDir dir("inputs");
    const std::string ckpt = tiny_checkpoint(dir);
    const std::string corpus = slurp(dir / "corpus/seq_000.bin"), model = slurp(ckpt);
    REQUIRE(run({"sample", "--checkpoint", ckpt, "--music", dir / "corpus/seq_000.bin", "--frames", "30", "--out",
                 dir / "s.bin"})
                .code == 0);
    REQUIRE(run({"eval", "--pred", dir / "corpus/seq_000.bin", "--report", dir / "r.txt"}).code == 0);
    CHECK(slurp(dir / "corpus/seq_000.bin") == corpus);
    CHECK(slurp(ckpt) == model);
    // Music shorter than the request is refused.
    CHECK(run({"sample", "--checkpoint", ckpt, "--music", dir / "corpus/seq_000.bin", "--frames", "31", "--out",
               dir / "t.bin"})
              .code == cli::kExitValidation);
}

TEST_CASE("gradcheck subcommand") {
    const Run r = run({"gradcheck", "--samples", "60"});
    CHECK(r.code == 0);
    CHECK(r.out.find("group=ssm") != std::string::npos);
    CHECK(r.out.find("entries=60") != std::string::npos);
}

TEST_CASE("installed binary exit codes") {
    TempDir dir("binary");
    const std::string cli = CHOREO_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status(cli + " synth --dancers 2 --frames 30 --out " + (dir / "c")) == 0);
    CHECK(status(cli + " eval --pred " + (dir / "nope.bin")) == 1);
    CHECK(status(cli + " eval --pred " + (dir / "c/seq_000.bin") + " --report " + (dir / "r.txt")) == 0);
    CHECK(status(cli + " --nonsense") == 1);
}
