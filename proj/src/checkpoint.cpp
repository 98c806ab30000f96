#include "choreo/checkpoint.hpp"

#include "binary_io.hpp"
#include "choreo/errors.hpp"

#include <fstream>
#include <sstream>

namespace choreo {

namespace {
constexpr const char* kMagic = "CHOREO-PARAMS";
}

Model Model::init(const gdd::ModelConfig& cfg, diffusion::ScheduleKind schedule, int steps, Rng& rng) {
    cfg.validate();
    if (steps < 1) throw InvalidConfig("diffusion needs at least one step");
    Model m;
    m.config = cfg;
    m.schedule = schedule;
    m.steps = steps;
    m.gdd = gdd::DenoiserParams::init(cfg, rng);
    m.fa = footwork::FootworkParams::init(cfg.hidden, cfg.fa_blocks, rng);
    return m;
}

std::vector<NamedParam> Model::named() {
    auto out = gdd.named();
    for (auto& p : fa.named()) out.push_back(p);
    return out;
}

std::size_t Model::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : named()) n += static_cast<std::size_t>(p.var->value().size());
    return n;
}

void save_checkpoint(std::ostream& os, Model& model) {
    const auto params = model.named();
    const auto& c = model.config;
    os << kMagic << "\n"
       << "version " << kCheckpointVersion << "\n"
       << "config dancers " << c.dancers << " hidden " << c.hidden << " layers " << c.layers << " heads " << c.heads
       << " state " << c.state << " fa_blocks " << c.fa_blocks << "\n"
       << "schedule " << diffusion::to_string(model.schedule) << " " << model.steps << "\n"
       << "tensors " << params.size() << "\n";
    for (const auto& p : params) os << "tensor " << p.name << " " << p.var->rows() << " " << p.var->cols() << "\n";
    os << "end\n";
    for (const auto& p : params) {
        const Mat& v = p.var->value();
        if (!v.allFinite()) throw FormatError("parameter " + p.name + " is not finite");
        detail::write_f64(os, v.data(), static_cast<std::size_t>(v.size()));
    }
}

void save_checkpoint(const std::filesystem::path& path, Model& model) {
    std::ostringstream buf;
    save_checkpoint(buf, model);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::string bytes = buf.str();
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

Model load_checkpoint(std::istream& is) {
    using detail::header_line;
    using detail::parse_int;
    if (auto tok = header_line(is); tok.size() != 1 || tok[0] != kMagic) throw FormatError("not a parameter checkpoint");
    auto tok = header_line(is);
    if (tok.size() != 2 || tok[0] != "version") throw FormatError("missing version");
    if (parse_int(tok[1], "version") != kCheckpointVersion) throw FormatError("unsupported checkpoint version");

    tok = header_line(is);
    if (tok.size() != 13 || tok[0] != "config") throw FormatError("malformed config line");
    gdd::ModelConfig cfg;
    for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
        const int v = static_cast<int>(parse_int(tok[i + 1], tok[i].c_str()));
        if (tok[i] == "dancers") cfg.dancers = v;
        else if (tok[i] == "hidden") cfg.hidden = v;
        else if (tok[i] == "layers") cfg.layers = v;
        else if (tok[i] == "heads") cfg.heads = v;
        else if (tok[i] == "state") cfg.state = v;
        else if (tok[i] == "fa_blocks") cfg.fa_blocks = v;
        else throw FormatError("unknown config key " + tok[i]);
    }
    tok = header_line(is);
    if (tok.size() != 3 || tok[0] != "schedule") throw FormatError("malformed schedule line");
    Model model;
    try {
        cfg.validate();
        model.config = cfg;
        model.schedule = diffusion::parse_schedule_kind(tok[1]);
    } catch (const InvalidConfig& e) {
        throw FormatError(e.what());
    }
    model.steps = static_cast<int>(parse_int(tok[2], "steps"));
    if (model.steps < 1) throw FormatError("step count must be positive");
    model.gdd = gdd::DenoiserParams::zeros(cfg);
    model.fa = footwork::FootworkParams::zeros(cfg.hidden, cfg.fa_blocks);

    auto params = model.named();
    tok = header_line(is);
    if (tok.size() != 2 || tok[0] != "tensors" || parse_int(tok[1], "tensors") != static_cast<long>(params.size()))
        throw FormatError("tensor count does not match the architecture");
    for (const auto& p : params) {
        tok = header_line(is);
        if (tok.size() != 4 || tok[0] != "tensor" || tok[1] != p.name ||
            parse_int(tok[2], "rows") != p.var->rows() || parse_int(tok[3], "cols") != p.var->cols())
            throw FormatError("unexpected tensor entry, wanted " + p.name);
    }
    if (tok = header_line(is); tok.size() != 1 || tok[0] != "end") throw FormatError("missing header terminator");
    for (auto& p : params) {
        Mat& v = p.var->mutable_value();
        detail::read_f64(is, v.data(), static_cast<std::size_t>(v.size()));
        if (!v.allFinite()) throw FormatError("parameter " + p.name + " is not finite");
    }
    detail::expect_eof(is);
    return model;
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return load_checkpoint(is);
}

}  // namespace choreo
