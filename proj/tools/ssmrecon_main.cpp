// ssmrecon: shape-model liver reconstruction from a few planar masks.
//
//   ssmrecon <synth|build-ssm|slice|train|reconstruct|evaluate|stats-vectors>
//            --config <path> [--subject <id>] [--stack <manifest>]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ssmrecon/error.hpp"
#include "ssmrecon/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical shape model reconstruction and volumetry from planar masks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string subject;
    std::string stack;

    auto add = [&](const char* name, const char* help, bool needs_config = true) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto* opt = sub->add_option("--config", config_path, "pipeline config (JSON)");
        if (needs_config) opt->required();
        return sub;
    };
    CLI::App* synth = add("synth", "generate a synthetic population");
    CLI::App* build = add("build-ssm", "register the population and build the shape model");
    CLI::App* slice = add("slice", "rasterise sagittal mask stacks for every subject");
    CLI::App* train = add("train", "train the parametric regression network");
    CLI::App* recon = add("reconstruct", "predict a mesh and its volume from a mask stack");
    recon->add_option("--subject", subject, "subject id");
    recon->add_option("--stack", stack, "mask-stack manifest");
    CLI::App* evaluate = add("evaluate", "evaluate on the test split");
    CLI::App* vectors = add("stats-vectors", "check the paired-test arithmetic on published rows", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (vectors->parsed()) {
            bool ok = true;
            for (const auto& c : ssmrecon::cmd_stats_vectors(std::cout)) ok = ok && c.pass;
            return ok ? kOk : kNumerical;
        }
        const ssmrecon::PipelineConfig cfg = ssmrecon::load_config(config_path);
        if (synth->parsed()) ssmrecon::cmd_synth(cfg, std::cout);
        else if (build->parsed()) ssmrecon::cmd_build_ssm(cfg, std::cout);
        else if (slice->parsed()) ssmrecon::cmd_slice(cfg, std::cout);
        else if (train->parsed()) ssmrecon::cmd_train(cfg, std::cout);
        else if (evaluate->parsed()) (void)ssmrecon::cmd_evaluate(cfg, std::cout);
        else if (recon->parsed()) {
            std::optional<std::string> id;
            std::optional<std::filesystem::path> manifest;
            if (!subject.empty()) id = subject;
            if (!stack.empty()) manifest = stack;
            (void)ssmrecon::cmd_reconstruct(cfg, id, manifest, std::cout);
        }
        return kOk;
    } catch (const ssmrecon::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const ssmrecon::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const ssmrecon::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}
