#include "ssmrecon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"
#include "ssmrecon/obj_io.hpp"
#include "ssmrecon/parallel.hpp"

namespace ssmrecon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";

std::string subject_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "subject_%03d", index);
    return buf;
}

fs::path subject_mesh_path(const PipelineConfig& cfg, const std::string& id) {
    return cfg.paths.population_dir / (id + ".obj");
}
fs::path registered_path(const PipelineConfig& cfg, const std::string& id) {
    return cfg.paths.output_dir / "registered" / (id + ".obj");
}
fs::path stack_path(const PipelineConfig& cfg, const std::string& id) {
    return cfg.paths.output_dir / "masks" / (id + ".json");
}

std::vector<std::string> ids_of(const std::vector<SubjectRecord>& records) {
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.id);
    return ids;
}

// Rethrows a per-subject failure with the subject id prefixed, keeping its category.
[[noreturn]] void rethrow_for(const std::string& id, const Error& e) {
    const std::string msg = "subject " + id + ": " + e.what();
    if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg);
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    throw DataError(msg);
}

template <typename Fn>
void for_each_subject(const std::vector<std::string>& ids, Fn&& fn) {
    parallel_for(ids.size(), [&](std::size_t i) {
        try {
            fn(i);
        } catch (const Error& e) {
            rethrow_for(ids[i], e);
        }
    });
}

SliceProtocol protocol_for(const PipelineConfig& cfg, const ShapeSpace& space) {
    if (!space.window) throw DataError("shape model has no slicing window; rebuild it with build-ssm");
    SliceProtocol protocol;
    protocol.offsets = cfg.slice_offsets;
    protocol.resolution = cfg.resolution;
    protocol.window = *space.window;
    protocol.validate();
    return protocol;
}

int resolved_components(const PipelineConfig& cfg, int population, std::ostream& log) {
    const int requested = cfg.components.value_or(default_component_count(population));
    const int k = std::min(requested, population - 1);
    if (k != requested) {
        log << "note: K = " << requested << " exceeds N - 1 = " << population - 1 << "; using K = " << k << "\n";
    }
    return k;
}

}  // namespace

std::vector<SubjectRecord> load_population_manifest(const fs::path& dir) {
    const json doc = read_json(dir / kManifestName);
    try {
        std::vector<SubjectRecord> out;
        for (const auto& s : doc.at("subjects")) {
            out.push_back(SubjectRecord{s.at("id").get<std::string>(), s.at("volume_cm3").get<double>(),
                                        s.at("seed").get<std::uint64_t>()});
        }
        if (out.empty()) throw DataError((dir / kManifestName).string() + ": no subjects");
        return out;
    } catch (const json::exception& e) {
        throw DataError((dir / kManifestName).string() + ": " + e.what());
    }
}

Split make_split(const std::vector<std::string>& ids, const SplitConfig& cfg) {
    if (ids.size() < 3) throw DataError("need at least 3 subjects to split into train and test");
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(ids.size())));
    n_train = std::clamp<std::size_t>(n_train, 2, ids.size() - 1);
    Split split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? split.train : split.test).push_back(ids[order[i]]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

void cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
    cfg.synth.validate();
    std::vector<SynthSubject> subjects(static_cast<std::size_t>(cfg.synth.n));
    std::vector<std::string> ids;
    for (int i = 0; i < cfg.synth.n; ++i) ids.push_back(subject_id(i));
    fs::create_directories(cfg.paths.population_dir);
    for_each_subject(ids, [&](std::size_t i) {
        subjects[i] = generate_subject(cfg.synth, static_cast<int>(i));
        save_mesh(subjects[i].mesh, subject_mesh_path(cfg, ids[i]));
    });

    json list = json::array();
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        list.push_back({{"id", ids[i]},
                        {"file", ids[i] + ".obj"},
                        {"volume_cm3", subjects[i].volume},
                        {"seed", subjects[i].seed},
                        {"level", subjects[i].level},
                        {"amplitude", subjects[i].amplitude}});
    }
    write_json(cfg.paths.population_dir / kManifestName,
               {{"format_version", 1}, {"seed", cfg.synth.seed}, {"subjects", std::move(list)}});
    log << "synth: wrote " << subjects.size() << " subjects to " << cfg.paths.population_dir.string() << "\n";
}

void cmd_build_ssm(const PipelineConfig& cfg, std::ostream& log) {
    const auto records = load_population_manifest(cfg.paths.population_dir);
    const Split split = make_split(ids_of(records), cfg.split);
    write_json(cfg.paths.output_dir / "split.json", {{"train", split.train}, {"test", split.test}});

    std::vector<std::string> ids = split.train;
    if (cfg.split.ssm_uses_all) ids = ids_of(records);
    if (ids.size() < 2) throw DataError("build-ssm: need at least 2 meshes in the population");

    std::vector<TriMesh> originals(ids.size());
    for_each_subject(ids, [&](std::size_t i) { originals[i] = load_mesh(subject_mesh_path(cfg, ids[i])); });

    // The first mesh is the reference model every other member is fitted to.
    const TriMesh& reference = originals.front();
    std::vector<TriMesh> fitted(ids.size());
    for_each_subject(ids, [&](std::size_t i) {
        fitted[i] = i == 0 ? reference : nonrigid_fit(reference, originals[i], cfg.fit);
    });
    const std::vector<TriMesh> aligned = generalized_procrustes(fitted, cfg.procrustes_rounds);

    const int k = resolved_components(cfg, static_cast<int>(ids.size()), log);
    ShapeSpace space = build_ssm(aligned, k);
    std::vector<Box3> boxes;
    for (const TriMesh& m : originals) boxes.push_back(bounding_box(m));
    space.window = shared_window(boxes, cfg.window_margin);
    save_ssm(space, cfg.paths.ssm_file);

    fs::remove_all(cfg.paths.output_dir / "registered");
    for_each_subject(ids, [&](std::size_t i) { save_mesh(aligned[i], registered_path(cfg, ids[i])); });
    log << "build-ssm: N = " << ids.size() << ", M = " << space.vertex_count << ", K = " << k
        << " -> " << model_paths(cfg.paths.ssm_file, "ssm").manifest.string() << "\n";
}

void cmd_slice(const PipelineConfig& cfg, std::ostream& log) {
    const ShapeSpace space = load_ssm(cfg.paths.ssm_file);
    const SliceProtocol protocol = protocol_for(cfg, space);
    const auto ids = ids_of(load_population_manifest(cfg.paths.population_dir));
    fs::remove_all(cfg.paths.output_dir / "masks");
    for_each_subject(ids, [&](std::size_t i) {
        const TriMesh mesh = load_mesh(subject_mesh_path(cfg, ids[i]));
        save_mask_stack(make_mask_stack(mesh, protocol), stack_path(cfg, ids[i]));
    });
    log << "slice: " << ids.size() << " subjects x " << protocol.offsets.size() << " masks at "
        << protocol.resolution << "^2\n";
}

void cmd_train(const PipelineConfig& cfg, std::ostream& log) {
    const ShapeSpace space = load_ssm(cfg.paths.ssm_file);
    const Split split = make_split(ids_of(load_population_manifest(cfg.paths.population_dir)), cfg.split);
    const auto& ids = split.train;

    std::vector<Sample> samples(ids.size());
    for_each_subject(ids, [&](std::size_t i) {
        const TriMesh registered = load_mesh(registered_path(cfg, ids[i]));
        samples[i].target = project(space, registered);
        const MaskStack stack = load_mask_stack(stack_path(cfg, ids[i]));
        if (stack.masks.size() != cfg.slice_offsets.size() || stack.resolution() != cfg.resolution) {
            throw DataError("mask stack does not match the configured slice protocol; rerun slice");
        }
        samples[i].input = encode_input(stack);
    });

    const TrainResult result = train(samples, cfg.train);
    save_weights(result.params, cfg.paths.weights_file);

    fs::create_directories(cfg.paths.output_dir);
    std::ofstream csv(cfg.paths.output_dir / "train_log.csv", std::ios::binary);
    if (!csv) throw DataError("cannot write training log");
    csv << "epoch,train_loss,val_loss\n";
    char buf[128];
    for (const EpochLog& e : result.log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss);
        csv << buf;
    }
    log << "train: " << result.train_indices.size() << " train / " << result.val_indices.size()
        << " val samples, best epoch " << result.best_epoch << " of " << result.log.size() - 1
        << ", train loss " << result.log.front().train_loss << " -> " << result.log.back().train_loss << "\n";
}

ReconstructResult cmd_reconstruct(const PipelineConfig& cfg, const std::optional<std::string>& subject,
                                  const std::optional<fs::path>& stack_manifest, std::ostream& log) {
    if (subject.has_value() == stack_manifest.has_value()) {
        throw ConfigError("reconstruct needs exactly one of --subject or --stack");
    }
    const ShapeSpace space = load_ssm(cfg.paths.ssm_file);
    const MlpParams params = load_weights(cfg.paths.weights_file);
    const fs::path manifest = subject ? stack_path(cfg, *subject) : *stack_manifest;
    std::string stem = subject ? *subject : manifest.filename().string();
    if (const auto dot = stem.find('.'); !subject && dot != std::string::npos) stem.resize(dot);

    ReconstructResult out;
    out.params = forward(params, load_mask_stack(manifest));
    const TriMesh mesh = reconstruct(space, out.params);
    out.obj = cfg.paths.output_dir / "recon" / (stem + ".obj");
    save_mesh(mesh, out.obj);
    out.volume = signed_volume(mesh);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", out.volume);
    log << "reconstruct: " << out.obj.string() << " volume " << buf << " cm3\n";
    return out;
}

namespace {

MethodRow method_row(const std::string& label, const std::vector<double>& predicted,
                     const std::vector<double>& truth, const std::vector<double>& cd,
                     const std::vector<double>& msd_values) {
    MethodRow row;
    row.label = label;
    row.rmse = rmse(predicted, truth);
    // mu = method - reference, matching the published table's sign.
    row.test = stats::paired_t_test(predicted, truth);
    row.volumes = stats::summary(predicted);
    row.mean_chamfer = std::accumulate(cd.begin(), cd.end(), 0.0) / static_cast<double>(cd.size());
    row.mean_msd = std::accumulate(msd_values.begin(), msd_values.end(), 0.0) / static_cast<double>(msd_values.size());
    return row;
}

json row_json(const MethodRow& r) {
    return {{"label", r.label},
            {"rmse", r.rmse},
            {"paired_t_test", stats::to_json(r.test)},
            {"volume_mean", r.volumes.mean},
            {"volume_std", r.volumes.std},
            {"mean_chamfer", r.mean_chamfer},
            {"mean_msd", r.mean_msd}};
}

}  // namespace

EvaluationReport cmd_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    const ShapeSpace space = load_ssm(cfg.paths.ssm_file);
    const auto records = load_population_manifest(cfg.paths.population_dir);
    const Split split = make_split(ids_of(records), cfg.split);
    const auto& ids = split.test;
    if (ids.size() < 2) throw DataError("evaluate: need at least 2 test subjects");
    std::optional<MlpParams> params;
    if (!cfg.evaluate.oracle_injection) params = load_weights(cfg.paths.weights_file);

    const TriMesh mean_mesh = space.mean_mesh();
    const double mean_volume = signed_volume(mean_mesh);

    EvaluationReport report;
    report.components = space.component_count();
    report.slices = static_cast<int>(cfg.slice_offsets.size());
    report.resolution = cfg.resolution;
    report.subjects.resize(ids.size());

    for_each_subject(ids, [&](std::size_t i) {
        SubjectResult& r = report.subjects[i];
        r.id = ids[i];
        const TriMesh truth = load_mesh(subject_mesh_path(cfg, ids[i]));
        r.truth_volume = signed_volume(truth);
        TriMesh recon;
        if (params) {
            recon = reconstruct(space, forward(*params, load_mask_stack(stack_path(cfg, ids[i]))));
        } else {
            recon = truth;
        }
        r.predicted_volume = signed_volume(recon);
        const MeshMetrics m = mesh_metrics(recon, truth, cfg.evaluate.samples, cfg.evaluate.seed);
        r.chamfer = m.chamfer;
        r.msd = m.msd;
        r.baseline_volume = mean_volume;
        const MeshMetrics b = mesh_metrics(mean_mesh, truth, cfg.evaluate.samples, cfg.evaluate.seed);
        r.baseline_chamfer = b.chamfer;
        r.baseline_msd = b.msd;
    });

    std::vector<double> truth, pred, base, cd, md, bcd, bmd;
    for (const SubjectResult& r : report.subjects) {
        truth.push_back(r.truth_volume);
        pred.push_back(r.predicted_volume);
        base.push_back(r.baseline_volume);
        cd.push_back(r.chamfer);
        md.push_back(r.msd);
        bcd.push_back(r.baseline_chamfer);
        bmd.push_back(r.baseline_msd);
    }
    report.truth_volumes = stats::summary(truth);
    report.reconstruction = method_row("Truth & Ours", pred, truth, cd, md);
    report.baseline = method_row("Truth & Mean", base, truth, bcd, bmd);

    write_json(cfg.paths.output_dir / "report.json", report.to_json());
    {
        std::ofstream txt(cfg.paths.output_dir / "report.txt", std::ios::binary);
        if (!txt) throw DataError("cannot write report.txt");
        txt << report.to_table();
    }
    log << report.to_table();
    return report;
}

json EvaluationReport::to_json() const {
    json subjects_json = json::array();
    for (const SubjectResult& r : subjects) {
        subjects_json.push_back({{"id", r.id},
                                 {"truth_volume", r.truth_volume},
                                 {"predicted_volume", r.predicted_volume},
                                 {"baseline_volume", r.baseline_volume},
                                 {"chamfer", r.chamfer},
                                 {"msd", r.msd},
                                 {"baseline_chamfer", r.baseline_chamfer},
                                 {"baseline_msd", r.baseline_msd}});
    }
    return {{"format_version", 1},
            {"components", components},
            {"slices", slices},
            {"resolution", resolution},
            {"test_subjects", subjects.size()},
            {"truth_volume_mean", truth_volumes.mean},
            {"truth_volume_std", truth_volumes.std},
            {"methods", {row_json(reconstruction), row_json(baseline)}},
            {"subjects", std::move(subjects_json)}};
}

std::string EvaluationReport::to_table() const {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "K = %d, slices = %d, resolution = %d, test subjects = %zu\n",
                  components, slices, resolution, subjects.size());
    out << buf;
    std::snprintf(buf, sizeof buf, "Truth volumes: mean = %.1f, std. = %.1f\n", truth_volumes.mean,
                  truth_volumes.std);
    out << buf;
    out << stats::table_header() << "\n";
    for (const MethodRow* row : {&baseline, &reconstruction}) {
        out << stats::table_row(row->label, row->rmse, row->test) << "\n";
    }
    out << "\n";
    std::snprintf(buf, sizeof buf, "%-18s %9s %9s %12s %9s\n", "Recon. Accuracy", "MSD (mm)", "CD (mm)",
                  "vol. mean", "vol. std.");
    out << buf;
    for (const MethodRow* row : {&baseline, &reconstruction}) {
        std::snprintf(buf, sizeof buf, "%-18s %9.2f %9.2f %12.1f %9.1f\n", row->label.c_str(), row->mean_msd,
                      row->mean_chamfer, row->volumes.mean, row->volumes.std);
        out << buf;
    }
    return out.str();
}

const std::vector<PublishedPairedRow>& published_paired_rows() {
    // Paired comparisons against CT volumes on 35 patients.
    static const std::vector<PublishedPairedRow> rows{
        {"CT & Childs'", -201.5, 234.8, 35, 39.7, -5.1, -282.1, -120.8, 0.000, true},
        {"CT & Ours", 78.1, 268.4, 35, 45.4, 1.7, -14.1, 170.3, 0.094, false},
    };
    return rows;
}

StatsVectorCheck check_published_row(const PublishedPairedRow& row) {
    StatsVectorCheck c;
    c.label = row.label;
    c.computed = stats::paired_t_from_summary(row.mean, row.std, row.n);
    char buf[160];
    auto check = [&](const char* name, double got, double want, double tol) {
        if (!(std::abs(got - want) <= tol)) {
            std::snprintf(buf, sizeof buf, "%s: computed %.4f, published %.4f (tol %.3f)", name, got, want, tol);
            c.misses.emplace_back(buf);
        }
    };
    check("SEM", c.computed.sem, row.sem, kStatsSemTolerance);
    check("t", c.computed.t, row.t, kStatsTTolerance);
    check("CI lower", c.computed.ci_lower, row.ci_lower, kStatsCiTolerance);
    check("CI upper", c.computed.ci_upper, row.ci_upper, kStatsCiTolerance);
    if (row.p_is_bound) {
        if (!(c.computed.p < 0.001)) {
            std::snprintf(buf, sizeof buf, "p: computed %.4f, published < 0.001", c.computed.p);
            c.misses.emplace_back(buf);
        }
    } else {
        check("p", c.computed.p, row.p, kStatsPTolerance);
    }
    if (c.computed.df != row.n - 1) c.misses.emplace_back("df mismatch");
    c.pass = c.misses.empty();
    return c;
}

std::vector<StatsVectorCheck> cmd_stats_vectors(std::ostream& out) {
    std::vector<StatsVectorCheck> checks;
    char buf[256];
    out << stats::table_header() << "\n";
    for (const PublishedPairedRow& row : published_paired_rows()) {
        StatsVectorCheck c = check_published_row(row);
        out << stats::table_row(row.label, std::nan(""), c.computed) << "  " << (c.pass ? "PASS" : "FAIL") << "\n";
        std::snprintf(buf, sizeof buf, "  published: SEM %.1f  t %.1f  CI (%.1f, %.1f)  p %s\n", row.sem, row.t,
                      row.ci_lower, row.ci_upper, stats::format_p(row.p).c_str());
        out << buf;
        for (const std::string& m : c.misses) out << "  miss: " << m << "\n";
        checks.push_back(std::move(c));
    }
    return checks;
}

}  // namespace ssmrecon
