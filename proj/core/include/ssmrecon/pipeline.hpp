#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssmrecon/metrics.hpp"
#include "ssmrecon/register.hpp"
#include "ssmrecon/regressor.hpp"
#include "ssmrecon/slicer.hpp"
#include "ssmrecon/stats.hpp"
#include "ssmrecon/synth.hpp"

namespace ssmrecon {

struct PipelinePaths {
    std::filesystem::path population_dir = "population";
    std::filesystem::path ssm_file = "model/liver.ssm.json";
    std::filesystem::path weights_file = "model/liver.mlp.json";
    std::filesystem::path output_dir = "out";
};

struct SplitConfig {
    double train_fraction = 0.74;
    std::uint64_t seed = 11;
    /// Build the shape model from every subject instead of the training split.
    bool ssm_uses_all = false;
};

struct EvaluateConfig {
    std::size_t samples = kDefaultSurfaceSamples;
    std::uint64_t seed = 3;
    /// Replace predictions by the ground truth (pipeline self-check).
    bool oracle_injection = false;
};

struct PipelineConfig {
    PipelinePaths paths;
    SynthConfig synth;
    std::vector<double> slice_offsets{0.35, 0.50, 0.65};
    int resolution = 192;
    double window_margin = 0.10;
    std::optional<int> components;  ///< unset: 50 when the population allows
    FitConfig fit;
    int procrustes_rounds = 20;
    TrainConfig train;
    SplitConfig split;
    EvaluateConfig evaluate;

    void validate() const;
};

/// Parses a JSON config. Relative paths resolve against `base_dir`. Unknown
/// keys throw ConfigError.
[[nodiscard]] PipelineConfig parse_config(const nlohmann::json& doc,
                                          const std::filesystem::path& base_dir);
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json config_to_json(const PipelineConfig& cfg);

struct SubjectRecord {
    std::string id;
    double volume = 0.0;
    std::uint64_t seed = 0;
};

/// Ground-truth manifest of a population directory.
[[nodiscard]] std::vector<SubjectRecord> load_population_manifest(const std::filesystem::path& dir);

struct Split {
    std::vector<std::string> train;
    std::vector<std::string> test;
};
[[nodiscard]] Split make_split(const std::vector<std::string>& ids, const SplitConfig& cfg);

struct SubjectResult {
    std::string id;
    double truth_volume = 0.0;
    double predicted_volume = 0.0;
    double baseline_volume = 0.0;
    double chamfer = 0.0;
    double msd = 0.0;
    double baseline_chamfer = 0.0;
    double baseline_msd = 0.0;
};

struct MethodRow {
    std::string label;
    double rmse = 0.0;
    stats::PairedTestReport test;
    stats::Summary volumes;
    double mean_chamfer = 0.0;
    double mean_msd = 0.0;
};

struct EvaluationReport {
    int components = 0;
    int slices = 0;
    int resolution = 0;
    std::vector<SubjectResult> subjects;
    stats::Summary truth_volumes;
    MethodRow reconstruction;
    MethodRow baseline;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string to_table() const;
};

void cmd_synth(const PipelineConfig& cfg, std::ostream& log);
void cmd_build_ssm(const PipelineConfig& cfg, std::ostream& log);
void cmd_slice(const PipelineConfig& cfg, std::ostream& log);
void cmd_train(const PipelineConfig& cfg, std::ostream& log);

struct ReconstructResult {
    std::filesystem::path obj;
    double volume = 0.0;
    ShapeParams params;
};
/// Exactly one of subject / stack_manifest must be given.
[[nodiscard]] ReconstructResult cmd_reconstruct(const PipelineConfig& cfg,
                                                const std::optional<std::string>& subject,
                                                const std::optional<std::filesystem::path>& stack_manifest,
                                                std::ostream& log);
[[nodiscard]] EvaluationReport cmd_evaluate(const PipelineConfig& cfg, std::ostream& log);

struct StatsVectorCheck {
    std::string label;
    stats::PairedTestReport computed;
    bool pass = false;
    std::vector<std::string> misses;
};
/// A published paired-test row: the summary (mean, std, n) plus the derived
/// columns it is checked against.
struct PublishedPairedRow {
    std::string label;
    double mean = 0.0;
    double std = 0.0;
    int n = 0;
    double sem = 0.0;
    double t = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double p = 0.0;
    bool p_is_bound = false;  ///< published as ".000": require p < 0.001
};

inline constexpr double kStatsSemTolerance = 0.05;
inline constexpr double kStatsTTolerance = 0.05;
inline constexpr double kStatsCiTolerance = 0.15;
inline constexpr double kStatsPTolerance = 0.002;

[[nodiscard]] const std::vector<PublishedPairedRow>& published_paired_rows();
/// Recomputes a row from its summary and lists every column outside tolerance.
[[nodiscard]] StatsVectorCheck check_published_row(const PublishedPairedRow& row);

/// Feeds the published paired-test summaries through the report arithmetic.
[[nodiscard]] std::vector<StatsVectorCheck> cmd_stats_vectors(std::ostream& out);

}  // namespace ssmrecon
