#include <set>
#include <string>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"
#include "ssmrecon/pipeline.hpp"

namespace ssmrecon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& section(const json& doc, const char* name, const std::set<std::string>& allowed) {
    static const json empty = json::object();
    if (!doc.contains(name)) return empty;
    const json& s = doc.at(name);
    if (!s.is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
    for (const auto& [key, value] : s.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError(std::string("unknown config key '") + name + "." + key + "'");
        }
    }
    return s;
}

template <typename T>
void read(const json& s, const char* section_name, const char* key, T& out) {
    if (!s.contains(key)) return;
    try {
        out = s.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + section_name + "." + key + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

void PipelineConfig::validate() const {
    synth.validate();
    fit.validate();
    train.validate();
    SliceProtocol probe;
    probe.offsets = slice_offsets;
    probe.resolution = resolution;
    probe.window = Box3{Vec3::Zero(), Vec3::Ones()};
    probe.validate();
    if (!(window_margin >= 0.0)) throw ConfigError("slicer.window_margin must be >= 0");
    if (components && *components < 1) throw ConfigError("ssm.components must be >= 1");
    if (procrustes_rounds < 1) throw ConfigError("register.procrustes_rounds must be >= 1");
    if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
        throw ConfigError("split.train_fraction must lie in (0, 1)");
    }
    if (evaluate.samples < 1) throw ConfigError("evaluate.samples must be >= 1");
}

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> sections{"paths", "synth", "slicer", "ssm", "register",
                                                "train", "split", "evaluate"};
    for (const auto& [key, value] : doc.items()) {
        if (!sections.contains(key)) throw ConfigError("unknown config section '" + key + "'");
    }
    PipelineConfig cfg;

    const json& paths = section(doc, "paths", {"population_dir", "ssm_file", "weights_file", "output_dir"});
    std::string p;
    p = cfg.paths.population_dir.string(); read(paths, "paths", "population_dir", p); cfg.paths.population_dir = resolve(base_dir, p);
    p = cfg.paths.ssm_file.string(); read(paths, "paths", "ssm_file", p); cfg.paths.ssm_file = resolve(base_dir, p);
    p = cfg.paths.weights_file.string(); read(paths, "paths", "weights_file", p); cfg.paths.weights_file = resolve(base_dir, p);
    p = cfg.paths.output_dir.string(); read(paths, "paths", "output_dir", p); cfg.paths.output_dir = resolve(base_dir, p);

    const json& synth = section(doc, "synth", {"n", "seed", "base_level", "mode_count", "amplitude",
                                               "volume_min", "volume_max", "levels", "aspect"});
    read(synth, "synth", "n", cfg.synth.n);
    read(synth, "synth", "seed", cfg.synth.seed);
    read(synth, "synth", "base_level", cfg.synth.base_level);
    read(synth, "synth", "mode_count", cfg.synth.mode_count);
    read(synth, "synth", "amplitude", cfg.synth.amplitude);
    read(synth, "synth", "volume_min", cfg.synth.volume_min);
    read(synth, "synth", "volume_max", cfg.synth.volume_max);
    read(synth, "synth", "levels", cfg.synth.levels);
    if (synth.contains("aspect")) {
        std::vector<double> a;
        read(synth, "synth", "aspect", a);
        if (a.size() != 3) throw ConfigError("synth.aspect must hold 3 numbers");
        cfg.synth.aspect = Vec3(a[0], a[1], a[2]);
    }

    const json& slicer = section(doc, "slicer", {"offsets", "resolution", "window_margin"});
    read(slicer, "slicer", "offsets", cfg.slice_offsets);
    read(slicer, "slicer", "resolution", cfg.resolution);
    read(slicer, "slicer", "window_margin", cfg.window_margin);

    const json& ssm = section(doc, "ssm", {"components"});
    if (ssm.contains("components") && !ssm.at("components").is_null()) {
        int k = 0;
        read(ssm, "ssm", "components", k);
        cfg.components = k;
    }

    const json& reg = section(doc, "register", {"iterations", "smoothness", "damping", "tolerance",
                                                "rigid_iterations", "procrustes_rounds"});
    read(reg, "register", "iterations", cfg.fit.iterations);
    read(reg, "register", "smoothness", cfg.fit.smoothness);
    read(reg, "register", "damping", cfg.fit.damping);
    read(reg, "register", "tolerance", cfg.fit.tolerance);
    read(reg, "register", "rigid_iterations", cfg.fit.rigid_iterations);
    read(reg, "register", "procrustes_rounds", cfg.procrustes_rounds);

    const json& tr = section(doc, "train", {"optimizer", "momentum", "learning_rate", "epochs", "batch_size", "validation_fraction",
                                            "patience", "seed", "hidden"});
    if (tr.contains("optimizer")) {
        std::string name;
        read(tr, "train", "optimizer", name);
        if (name == "sgd") cfg.train.optimizer = Optimizer::sgd;
        else if (name == "adam") cfg.train.optimizer = Optimizer::adam;
        else throw ConfigError("train.optimizer must be \"sgd\" or \"adam\"");
    }
    read(tr, "train", "momentum", cfg.train.momentum);
    read(tr, "train", "learning_rate", cfg.train.learning_rate);
    read(tr, "train", "epochs", cfg.train.epochs);
    read(tr, "train", "batch_size", cfg.train.batch_size);
    read(tr, "train", "validation_fraction", cfg.train.validation_fraction);
    read(tr, "train", "patience", cfg.train.patience);
    read(tr, "train", "seed", cfg.train.seed);
    read(tr, "train", "hidden", cfg.train.hidden);

    const json& split = section(doc, "split", {"train_fraction", "seed", "ssm_uses_all"});
    read(split, "split", "train_fraction", cfg.split.train_fraction);
    read(split, "split", "seed", cfg.split.seed);
    read(split, "split", "ssm_uses_all", cfg.split.ssm_uses_all);

    const json& ev = section(doc, "evaluate", {"samples", "seed", "oracle_injection"});
    read(ev, "evaluate", "samples", cfg.evaluate.samples);
    read(ev, "evaluate", "seed", cfg.evaluate.seed);
    read(ev, "evaluate", "oracle_injection", cfg.evaluate.oracle_injection);

    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    json doc;
    try {
        doc = read_json(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(doc, path.parent_path());
}

json config_to_json(const PipelineConfig& cfg) {
    json doc;
    doc["paths"] = {{"population_dir", cfg.paths.population_dir.string()},
                    {"ssm_file", cfg.paths.ssm_file.string()},
                    {"weights_file", cfg.paths.weights_file.string()},
                    {"output_dir", cfg.paths.output_dir.string()}};
    doc["synth"] = {{"n", cfg.synth.n},
                    {"seed", cfg.synth.seed},
                    {"base_level", cfg.synth.base_level},
                    {"mode_count", cfg.synth.mode_count},
                    {"amplitude", cfg.synth.amplitude},
                    {"volume_min", cfg.synth.volume_min},
                    {"volume_max", cfg.synth.volume_max},
                    {"levels", cfg.synth.levels},
                    {"aspect", {cfg.synth.aspect.x(), cfg.synth.aspect.y(), cfg.synth.aspect.z()}}};
    doc["slicer"] = {{"offsets", cfg.slice_offsets},
                     {"resolution", cfg.resolution},
                     {"window_margin", cfg.window_margin}};
    doc["ssm"] = {{"components", cfg.components ? json(*cfg.components) : json(nullptr)}};
    doc["register"] = {{"iterations", cfg.fit.iterations},
                       {"smoothness", cfg.fit.smoothness},
                       {"damping", cfg.fit.damping},
                       {"tolerance", cfg.fit.tolerance},
                       {"rigid_iterations", cfg.fit.rigid_iterations},
                       {"procrustes_rounds", cfg.procrustes_rounds}};
    doc["train"] = {{"optimizer", cfg.train.optimizer == Optimizer::adam ? "adam" : "sgd"},
                    {"momentum", cfg.train.momentum},
                    {"learning_rate", cfg.train.learning_rate},
                    {"epochs", cfg.train.epochs},
                    {"batch_size", cfg.train.batch_size},
                    {"validation_fraction", cfg.train.validation_fraction},
                    {"patience", cfg.train.patience},
                    {"seed", cfg.train.seed},
                    {"hidden", cfg.train.hidden}};
    doc["split"] = {{"train_fraction", cfg.split.train_fraction},
                    {"seed", cfg.split.seed},
                    {"ssm_uses_all", cfg.split.ssm_uses_all}};
    doc["evaluate"] = {{"samples", cfg.evaluate.samples},
                       {"seed", cfg.evaluate.seed},
                       {"oracle_injection", cfg.evaluate.oracle_injection}};
    return doc;
}

}  // namespace ssmrecon
