#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "crn/cli.hpp"
#include "crn/config.hpp"
#include "crn/errors.hpp"
#include "test_support.hpp"

using namespace crn;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"crn"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    return cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string fixture_config() {
    return (fs::path(CRN_FIXTURE_DIR) / "pipeline.json").string();
}

std::string error_of(const std::string& text) {
    try {
        parse_pipeline_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config defaults") {
    auto cfg = parse_pipeline_config("{}");
    CHECK(cfg.coins.empty());
    CHECK_FALSE(cfg.default_group);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(cfg.strategies.size() == 5);
    CHECK(cfg.backtest.env.fee_rate == doctest::Approx(0.001));
    CHECK(cfg.backtest.agents.ppo.clip == doctest::Approx(0.2));
}

TEST_CASE("config values and paths") {
    auto cfg = parse_pipeline_config(R"({
        "coins": [{"name": "BTC", "ohlcv": "btc.csv", "tweets": "/abs/t.csv", "feature_group": "OHLCV+TI"},
                  {"name": "ETH", "ohlcv": "eth.csv"}],
        "feature_group": "ALL",
        "env": {"fee_rate": 0.002},
        "train_steps": {"ppo": 4096},
        "strategies": ["CRN_PPO", "BUY_AND_HOLD"],
        "seeds": [7]
    })", "/data");
    REQUIRE(cfg.coins.size() == 2);
    CHECK(cfg.coins[0].ohlcv == fs::path("/data/btc.csv"));
    CHECK(*cfg.coins[0].tweets == fs::path("/abs/t.csv"));
    CHECK_FALSE(cfg.coins[1].macro);
    CHECK(*cfg.for_coin(cfg.coins[0]).group == FeatureGroup::OhlcvTi);
    CHECK(*cfg.for_coin(cfg.coins[1]).group == FeatureGroup::All);
    CHECK(cfg.backtest.env.fee_rate == doctest::Approx(0.002));
    CHECK(cfg.backtest.ppo_steps == 4096);
    CHECK(cfg.strategies.size() == 2);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7});

    // The canonical form parses back to the same hashable config.
    auto again = parse_pipeline_config(cfg.to_json().dump());
    CHECK(again.to_json() == cfg.to_json());
}

TEST_CASE("config errors name the key") {
    CHECK(error_of(R"({"fee": 1})").find("'fee'") != std::string::npos);
    CHECK(error_of(R"({"env": {"fee_rat": 0.1}})").find("'env.fee_rat'") != std::string::npos);
    CHECK(error_of(R"({"env": {"fee_rate": "high"}})").find("env.fee_rate") != std::string::npos);
    CHECK(error_of(R"({"coins": [{"name": "X"}]})").find("coins[0].ohlcv") != std::string::npos);
    CHECK(error_of(R"({"coins": {}})").find("'coins'") != std::string::npos);
    CHECK(error_of(R"({"feature_group": "TI"})").find("feature_group") != std::string::npos);
    CHECK(error_of(R"({"strategies": ["SAC"]})").find("strategies") != std::string::npos);
    CHECK(error_of(R"({"seeds": []})").find("seeds") != std::string::npos);
    CHECK(error_of(R"({"ppo": {"clip": 1.5}})").find("ppo") != std::string::npos);
    CHECK(error_of(R"({"pgm": {"bins": 1}})").find("pgm.bins") != std::string::npos);
    CHECK(error_of("{\n  \"seeds\": [1,\n}").find("line 3") != std::string::npos);
    CHECK_THROWS_AS(load_pipeline_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("cli exit codes") {
    crn::testing::TempDir dir;
    CHECK(run_cli({"--help"}) == cli::kExitOk);
    CHECK(run_cli({"frobnicate"}) == cli::kExitUsage);
    CHECK(run_cli({}) == cli::kExitUsage);
    CHECK(run_cli({"--log-level", "loud", "ingest"}) == cli::kExitUsage);

    crn::testing::write_file(dir / "bad.json", R"({"nope": 1})");
    CHECK(run_cli({"--config", (dir / "bad.json").string(), "ingest"}) == cli::kExitError);
    CHECK(run_cli({"--config", (dir / "missing.json").string(), "ingest"}) == cli::kExitError);
    // A valid config without coins is still a configuration error.
    crn::testing::write_file(dir / "empty.json", "{}");
    CHECK(run_cli({"--config", (dir / "empty.json").string(), "--out", (dir / "o").string(), "ingest"}) ==
          cli::kExitError);
    // Later stages refuse to run without their inputs.
    CHECK(run_cli({"--config", fixture_config(), "--out", (dir / "o").string(), "indicators"}) == cli::kExitError);
}

TEST_CASE("cli pipeline on the fixture") {
    crn::testing::TempDir dir;
    const auto out = (dir / "out").string();
    for (const char* stage :
         {"ingest", "indicators", "select-features", "train-dbn", "train-agent", "backtest", "report"}) {
        CHECK_MESSAGE(run_cli({"--log-level", "warn", "--config", fixture_config(), "--out", out, stage}) == 0, stage);
    }
    CHECK(fs::exists(dir / "out" / "data" / "SYN.csv"));
    CHECK(fs::exists(dir / "out" / "selection" / "SYN.json"));
    CHECK(fs::exists(dir / "out" / "dbn" / "SYN.json"));
    CHECK(fs::exists(dir / "out" / "agents" / "SYN_CRN_PPO_seed2.json"));
    CHECK(fs::exists(dir / "out" / "trades" / "SYN_BASE_DDPG_seed1.csv"));
    CHECK(fs::exists(dir / "out" / "report" / "roi_table.txt"));
    auto table = crn::testing::read_file(dir / "out" / "report" / "roi_table.csv");
    CHECK(table.find("BUY_AND_HOLD") != std::string::npos);

    // --seed narrows the run; CRN_OUT stands in for --out.
    const auto env_out = (dir / "env_out").string();
    ::setenv("CRN_OUT", env_out.c_str(), 1);
    CHECK(run_cli({"--log-level", "warn", "--config", fixture_config(), "--seed", "9", "ingest"}) == 0);
    CHECK(run_cli({"--log-level", "warn", "--config", fixture_config(), "--seed", "9", "backtest"}) == 0);
    ::unsetenv("CRN_OUT");
    CHECK(fs::exists(dir / "env_out" / "runs" / "SYN_BUY_AND_HOLD_seed9.json"));
    CHECK_FALSE(fs::exists(dir / "env_out" / "runs" / "SYN_BUY_AND_HOLD_seed1.json"));
}
