#include "choreo/cli.hpp"

#include "choreo/checkpoint.hpp"
#include "choreo/dataset.hpp"
#include "choreo/errors.hpp"
#include "choreo/lgds.hpp"
#include "choreo/metrics.hpp"
#include "choreo/pipeline.hpp"
#include "choreo/plot.hpp"
#include "choreo/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace choreo::cli {
namespace {

namespace fs = std::filesystem;

// Raised for bad flag combinations detected after parsing.
struct UsageError : Error {
    using Error::Error;
};

fs::path resolve_out(const std::string& flag, const char* default_name) {
    if (!flag.empty()) return flag;
    if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) return fs::path(dir) / default_name;
    throw UsageError(std::string("--out is required when ") + kOutDirEnv + " is unset");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IoError("write failed for " + path.string());
}

SwapMode parse_swap(const std::string& text, int dancers) {
    if (text.empty()) return SwapMode::identity(dancers);
    SwapMode s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            s.order.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--swap-order expects comma-separated integers, got '" + text + "'");
        }
    }
    if (s.dancers() != dancers)
        throw UsageError("--swap-order has " + std::to_string(s.dancers()) + " entries, model has " +
                         std::to_string(dancers) + " dancers");
    s.validate();
    return s;
}

// Music for generation: frames [0, frames) of a container file, or synthetic beats.
MusicTrack music_for(const std::string& path, int frames, std::uint64_t seed, int beat_period) {
    if (path.empty()) {
        dataset::ChoreographyRecipe r;
        r.frames = std::max(frames, 30);  // recipe minimum
        r.seed = seed;
        r.beat_period = beat_period;
        return dataset::synth_music(r).slice(0, frames);
    }
    const auto file = dataset::read_motion(fs::path(path));
    if (file.music.frames() < frames)
        throw InvalidLength("music in " + path + " has " + std::to_string(file.music.frames()) + " frames, need " +
                            std::to_string(frames));
    return file.music.slice(0, frames);
}

void write_plots(const fs::path& dir, const motion::GroupMotion& m, const std::vector<int>& seams) {
    write_text(dir / "trajectories.svg", plot::trajectories_svg(m, seams));
    write_text(dir / "seams.svg", plot::displacement_svg(m, seams));
}

std::vector<int> seam_frames(const lgds::WindowPlan& plan) {
    std::vector<int> out;
    for (std::size_t k = 1; k < plan.segments.size(); ++k) out.push_back(plan.segments[k].first + plan.overlap());
    return out;
}

std::vector<fs::path> corpus_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == ".bin") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw UsageError("no .bin sequences found in --data");
    return files;
}

struct ModelFlags {
    int hidden = 64;
    int layers = 2;
    int heads = 8;
    int state = 4;
    int fa_blocks = 3;
    int steps = 50;
    std::string schedule = "cosine";

    void add(CLI::App* app) {
        app->add_option("--hidden", hidden, "hidden width d")->capture_default_str();
        app->add_option("--layers", layers, "sequence layers M")->capture_default_str();
        app->add_option("--heads", heads, "attention heads")->capture_default_str();
        app->add_option("--state", state, "SSM modes per channel")->capture_default_str();
        app->add_option("--fa-blocks", fa_blocks, "footwork concat-squash blocks")->capture_default_str();
        app->add_option("--diffusion-steps", steps, "diffusion steps T")->capture_default_str();
        app->add_option("--schedule", schedule, "linear or cosine")->capture_default_str();
    }
    gdd::ModelConfig config(int dancers) const {
        gdd::ModelConfig c;
        c.dancers = dancers;
        c.hidden = hidden;
        c.layers = layers;
        c.heads = heads;
        c.state = state;
        c.fa_blocks = fa_blocks;
        c.validate();
        return c;
    }
};

struct WeightFlags {
    loss::LossWeights w;
    void add(CLI::App* app) {
        app->add_option("--w-sim", w.sim)->capture_default_str();
        app->add_option("--w-fk", w.fk)->capture_default_str();
        app->add_option("--w-vel", w.vel)->capture_default_str();
        app->add_option("--w-con", w.con)->capture_default_str();
        app->add_option("--w-dist", w.dist)->capture_default_str();
    }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Group dance generation with swap-aware diffusion"};
    app.require_subcommand(1);
    app.set_config("--config", "", "structured-text config file; flags override it");
    app.allow_config_extras(false);

    // synth
    auto* synth = app.add_subcommand("synth", "emit a synthetic corpus");
    dataset::ChoreographyRecipe recipe;
    std::string pattern = "line", synth_out;
    int count = 1;
    synth->add_option("--dancers", recipe.dancers)->capture_default_str();
    synth->add_option("--frames", recipe.frames)->capture_default_str();
    synth->add_option("--pattern", pattern, "line, circle, swap or converge-diverge")->capture_default_str();
    synth->add_option("--beat-period", recipe.beat_period)->capture_default_str();
    synth->add_option("--fps", recipe.fps)->capture_default_str();
    synth->add_option("--seed", recipe.seed)->capture_default_str();
    synth->add_option("--count", count, "sequences; sequence i uses seed + i")->capture_default_str();
    synth->add_flag("--collision", recipe.collision_fixture, "dancers 0 and 1 pass through each other");
    synth->add_option("--out", synth_out, "output directory");

    // train
    auto* train = app.add_subcommand("train", "overfit a model on a corpus");
    std::vector<std::string> train_data;
    std::string train_out, train_log;
    ModelFlags train_model;
    WeightFlags train_weights;
    train::TrainConfig tcfg;
    train->add_option("--data", train_data, "sequence files or directories")->required();
    train_model.add(train);
    train_weights.add(train);
    train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
    train->add_option("--steps", tcfg.steps)->capture_default_str();
    train->add_option("--batch", tcfg.batch_size)->capture_default_str();
    train->add_option("--seed", tcfg.seed)->capture_default_str();
    train->add_option("--out", train_out, "checkpoint path");
    train->add_option("--log", train_log, "per-step log path");

    // sample / sample-long share flags
    struct SampleFlags {
        std::string checkpoint, music, swap, out, plot;
        int frames = 150, beat_period = 15;
        std::uint64_t seed = 0;
    } sf, lf;
    auto add_sample = [](CLI::App* a, SampleFlags& f) {
        a->add_option("--checkpoint", f.checkpoint)->required()->check(CLI::ExistingFile);
        a->add_option("--music", f.music, "container file whose music track conditions generation")
            ->check(CLI::ExistingFile);
        a->add_option("--beat-period", f.beat_period, "synthetic music beat period when --music is absent")
            ->capture_default_str();
        a->add_option("--frames", f.frames)->capture_default_str();
        a->add_option("--swap-order", f.swap, "comma-separated final-frame ranks; default identity");
        a->add_option("--seed", f.seed)->capture_default_str();
        a->add_option("--out", f.out, "output container path");
    };
    auto* sample = app.add_subcommand("sample", "single-window generation");
    add_sample(sample, sf);
    auto* slong = app.add_subcommand("sample-long", "long-form generation over overlapping windows");
    add_sample(slong, lf);
    int window = 150, hop = 75;
    slong->add_option("--window", window)->capture_default_str();
    slong->add_option("--hop", hop)->capture_default_str();
    slong->add_option("--plot", lf.plot, "directory for SVG charts");

    // eval
    auto* eval = app.add_subcommand("eval", "metrics over generated files");
    std::vector<std::string> preds;
    std::string report_path, eval_plot;
    double radius = metrics::kDefaultRadius, sigma = metrics::kDefaultSigma;
    int eval_window = 0, eval_hop = 0;
    eval->add_option("--pred", preds)->required()->check(CLI::ExistingFile);
    eval->add_option("--report", report_path, "report path; stdout when omitted");
    eval->add_option("--radius", radius)->capture_default_str();
    eval->add_option("--sigma", sigma)->capture_default_str();
    eval->add_option("--window", eval_window, "window length used to generate; enables the seam ratio");
    eval->add_option("--hop", eval_hop);
    eval->add_option("--plot", eval_plot, "directory for SVG charts");

    // gradcheck
    auto* gcheck = app.add_subcommand("gradcheck", "compare reverse-mode gradients with finite differences");
    ModelFlags gmodel;
    gmodel.hidden = 8;
    gmodel.layers = 1;
    gmodel.heads = 2;
    gmodel.fa_blocks = 1;
    gmodel.steps = 10;
    int g_dancers = 2, g_frames = 8, g_t = 5;
    train::GradCheckOptions gopts;
    double g_tol = 1e-4;
    gmodel.add(gcheck);
    gcheck->add_option("--dancers", g_dancers)->capture_default_str();
    gcheck->add_option("--frames", g_frames)->capture_default_str();
    gcheck->add_option("--t", g_t, "diffusion step")->capture_default_str();
    gcheck->add_option("--samples", gopts.samples)->capture_default_str();
    gcheck->add_option("--epsilon", gopts.epsilon)->capture_default_str();
    gcheck->add_option("--seed", gopts.seed)->capture_default_str();
    gcheck->add_option("--tolerance", g_tol)->capture_default_str();

    std::vector<std::string> argv_store;
    argv_store.push_back("choreo");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        const auto skel = motion::SkeletonSpec::smpl_default();

        if (synth->parsed()) {
            recipe.formation = dataset::parse_formation(pattern);
            recipe.validate();
            if (count < 1) throw UsageError("--count must be positive");
            const fs::path dir = synth_out.empty() ? resolve_out("", "corpus") : fs::path(synth_out);
            fs::create_directories(dir);
            for (int i = 0; i < count; ++i) {
                auto r = recipe;
                r.seed = recipe.seed + static_cast<std::uint64_t>(i);
                auto [m, music] = dataset::synth_group_sequence(r, skel);
                dataset::MotionFile f{std::move(m), std::move(music), skel, r.fps};
                char name[32];
                std::snprintf(name, sizeof name, "seq_%03d.bin", i);
                dataset::write_motion(dir / name, f);
                out << (dir / name).string() << "\n";
            }
            return kExitOk;
        }

        if (train->parsed()) {
            tcfg.weights = train_weights.w;
            tcfg.validate();
            const auto files = corpus_files(train_data);
            std::vector<train::Sample> corpus;
            for (const auto& p : files) {
                const auto f = dataset::read_motion(p);
                corpus.push_back(train::prepare_sample(f.motion, f.music));
            }
            const int C = corpus.front().motion.dancers();
            for (const auto& s : corpus)
                if (s.motion.dancers() != C) throw UsageError("corpus mixes dancer counts");
            const fs::path ckpt = resolve_out(train_out, "model.ckpt");
            const auto cfg = train_model.config(C);
            Rng rng(tcfg.seed);
            Model model = Model::init(cfg, diffusion::parse_schedule_kind(train_model.schedule), train_model.steps,
                                      rng);
            std::ofstream log;
            if (!train_log.empty()) {
                log.open(train_log, std::ios::binary);
                if (!log) throw IoError("cannot open " + train_log + " for writing");
            }
            train::overfit_run(model, corpus, tcfg, skel, [&](const train::StepRecord& r) {
                const std::string line = train::format_log_line(r);
                out << line << "\n";
                if (log) log << line << "\n";
            });
            save_checkpoint(ckpt, model);
            out << "checkpoint=" << ckpt.string() << "\n";
            return kExitOk;
        }

        if (sample->parsed()) {
            if (sf.frames < 1) throw UsageError("--frames must be positive");
            Model model = load_checkpoint(fs::path(sf.checkpoint));
            const SwapMode swap = parse_swap(sf.swap, model.config.dancers);
            const MusicTrack music = music_for(sf.music, sf.frames, sf.seed, sf.beat_period);
            const fs::path path = resolve_out(sf.out, "sample.bin");
            auto g = sample_group(model, music, swap, sf.seed);
            dataset::write_motion(path, {std::move(g.result), music, skel, 30.0});
            out << path.string() << "\n";
            return kExitOk;
        }

        if (slong->parsed()) {
            if (lf.frames < 1) throw UsageError("--frames must be positive");
            const int total = lgds::round_up_total(lf.frames, window, hop);
            Model model = load_checkpoint(fs::path(lf.checkpoint));
            const SwapMode swap = parse_swap(lf.swap, model.config.dancers);
            const MusicTrack music = music_for(lf.music, total, lf.seed, lf.beat_period);
            const fs::path path = resolve_out(lf.out, "sample_long.bin");
            auto g = sample_long(model, total, window, hop, music, swap, lf.seed);
            const int C = model.config.dancers;
            motion::GroupMotion trimmed(C, lf.frames,
                                        lgds::slice_frames(g.motion.result.data(), C, total, 0, lf.frames));
            if (!lf.plot.empty()) {
                std::vector<int> seams;
                for (int s : seam_frames(g.trace.plan))
                    if (s < lf.frames) seams.push_back(s);
                write_plots(lf.plot, trimmed, seams);
            }
            dataset::write_motion(path, {std::move(trimmed), music.slice(0, lf.frames), skel, 30.0});
            out << path.string() << "\n";
            return kExitOk;
        }

        if (eval->parsed()) {
            if ((eval_window > 0) != (eval_hop > 0)) throw UsageError("--window and --hop go together");
            std::vector<dataset::MotionFile> files;
            for (const auto& p : preds) files.push_back(dataset::read_motion(fs::path(p)));
            metrics::MetricReport total;
            std::vector<Eigen::VectorXd> kinetic;
            double seam_sum = 0.0;
            for (const auto& f : files) {
                const auto r = metrics::evaluate(f.motion, f.music, f.skeleton, radius, sigma, f.fps);
                total.tif += r.tif;
                total.pfc += r.pfc;
                total.gmc += r.gmc;
                total.mmc += r.mmc;
                for (int c = 0; c < f.motion.dancers(); ++c)
                    kinetic.push_back(metrics::kinetic_features(f.motion, c, f.skeleton));
                if (eval_window > 0) {
                    // Only the frames covered by whole windows carry seams.
                    const int covered = f.motion.frames() < eval_window
                                            ? 0
                                            : eval_window + (f.motion.frames() - eval_window) / eval_hop * eval_hop;
                    if (covered == 0) throw InvalidLength("sequence shorter than --window");
                    const auto plan = lgds::plan_windows(covered, eval_window, eval_hop);
                    seam_sum += lgds::seam_report(f.motion, plan).ratio;
                }
            }
            const double n = static_cast<double>(files.size());
            total.tif /= n;
            total.pfc /= n;
            total.gmc /= n;
            total.mmc /= n;
            total.div = kinetic.size() >= 2 ? metrics::diversity(kinetic) : 0.0;
            if (eval_window > 0) total.seam_ratio = seam_sum / n;
            const std::string text = total.to_text();
            if (!eval_plot.empty()) {
                std::vector<int> seams;
                if (eval_window > 0) {
                    const auto& m = files.front().motion;
                    const int covered = eval_window + (m.frames() - eval_window) / eval_hop * eval_hop;
                    seams = seam_frames(lgds::plan_windows(covered, eval_window, eval_hop));
                }
                write_plots(eval_plot, files.front().motion, seams);
            }
            if (report_path.empty())
                out << text;
            else
                write_text(report_path, text);
            return kExitOk;
        }

        if (gcheck->parsed()) {
            const auto cfg = gmodel.config(g_dancers);
            const auto kind = diffusion::parse_schedule_kind(gmodel.schedule);
            if (g_t < 0 || g_t >= gmodel.steps) throw UsageError("--t must lie in [0, diffusion-steps)");
            dataset::ChoreographyRecipe r;
            r.dancers = std::max(2, g_dancers);
            r.frames = std::max(30, g_frames);
            r.formation = dataset::Formation::Swap;
            r.seed = gopts.seed;
            auto [m, music] = dataset::synth_group_sequence(r, skel);
            motion::GroupMotion cut(g_dancers, g_frames);
            for (int c = 0; c < g_dancers; ++c) cut.dancer(c) = m.dancer(c).topRows(g_frames);
            const auto s = train::prepare_sample(cut, music.slice(0, g_frames));
            Rng rng(gopts.seed);
            Model model = Model::init(cfg, kind, gmodel.steps, rng);
            const auto sched = diffusion::make_schedule(gmodel.steps, kind);
            const Mat noise = gaussian(cut.data().rows(), cut.data().cols(), rng);
            const auto rep = train::grad_check(model, s, g_t, noise, sched, skel, gopts);
            char buf[128];
            for (const auto& [group, e] : rep.max_by_group) {
                std::snprintf(buf, sizeof buf, "group=%s max_rel_error=%.3e\n", group.c_str(), e);
                out << buf;
            }
            std::snprintf(buf, sizeof buf, "entries=%zu max_rel_error=%.3e tolerance=%.1e\n", rep.entries.size(),
                          rep.max_rel_error, g_tol);
            out << buf;
            if (rep.max_rel_error >= g_tol) {
                err << "error: gradient mismatch above tolerance\n";
                return kExitRuntime;
            }
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InvalidConfig& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InvalidLength& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ShapeMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace choreo::cli
