#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ssmrecon/binary_io.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string("\"") + SSMRECON_CLI_PATH + "\" " + args + " > \"" +
                            (dir / "cli.log").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_arg(const fs::path& dir, const json& doc) {
    ssmrecon::write_json(dir / "config.json", doc);
    return "--config \"" + (dir / "config.json").string() + "\"";
}

}  // namespace

TEST(Cli, StatsVectorsSucceed) {
    testutil::TempDir dir("cli");
    EXPECT_EQ(run("stats-vectors", dir.path()), 0);
}

TEST(Cli, UsageErrorsExitOne) {
    testutil::TempDir dir("cli");
    EXPECT_EQ(run("", dir.path()), 1);
    EXPECT_EQ(run("fly --config x.json", dir.path()), 1);
    EXPECT_EQ(run("synth", dir.path()), 1);
    EXPECT_EQ(run("synth --config \"" + (dir.path() / "absent.json").string() + "\"", dir.path()), 1);
    EXPECT_EQ(run("synth " + config_arg(dir.path(), {{"synth", {{"bogus", 1}}}}), dir.path()), 1);
    EXPECT_EQ(run("reconstruct " + config_arg(dir.path(), json::object()), dir.path()), 1);
}

TEST(Cli, MissingDataExitsTwo) {
    testutil::TempDir dir("cli");
    EXPECT_EQ(run("build-ssm " + config_arg(dir.path(), json::object()), dir.path()), 2);
}

TEST(Cli, DivergentTrainingExitsThree) {
    testutil::TempDir dir("cli");
    const std::string cfg = config_arg(
        dir.path(), {{"synth", {{"n", 8}, {"levels", {3}}}},
                     {"slicer", {{"resolution", 32}}},
                     {"ssm", {{"components", 3}}},
                     {"train", {{"hidden", 8}, {"epochs", 50}, {"learning_rate", 1e12}, {"batch_size", 2}}}});
    ASSERT_EQ(run("synth " + cfg, dir.path()), 0);
    ASSERT_EQ(run("build-ssm " + cfg, dir.path()), 0);
    ASSERT_EQ(run("slice " + cfg, dir.path()), 0);
    EXPECT_EQ(run("train " + cfg, dir.path()), 3);
}
