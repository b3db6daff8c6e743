#include "crn/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crn/backtest/backtest.hpp"
#include "crn/backtest/report.hpp"
#include "crn/config.hpp"
#include "crn/errors.hpp"

namespace crn::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string level = "info";
};

struct Context {
    PipelineConfig cfg;
    fs::path out;
    std::string hash;
};

Context make_context(const Globals& g) {
    Context ctx;
    ctx.cfg = g.config.empty() ? PipelineConfig{} : load_pipeline_config(g.config);
    if (g.seed) ctx.cfg.seeds = {*g.seed};
    if (!g.out.empty()) {
        ctx.out = g.out;
    } else if (const char* env = std::getenv("CRN_OUT"); env && *env) {
        ctx.out = env;
    } else {
        ctx.out = ctx.cfg.output_dir;
    }
    if (ctx.cfg.coins.empty()) throw ConfigError("no coins configured (config key 'coins')");
    ctx.hash = backtest::config_hash(ctx.cfg.to_json());
    fs::create_directories(ctx.out);
    return ctx;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError(fmt::format("missing artifact '{}'; run the earlier stage first", p.string()));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("cannot parse '{}': {}", p.string(), e.what()));
    }
}

void write_json(const json& j, const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
    out << j.dump(2) << '\n';
    if (!out) throw Error(fmt::format("write failed for '{}'", p.string()));
}

fs::path dataset_path(const Context& ctx, const CoinSource& c) {
    return ctx.out / "data" / (c.name + ".csv");
}

Dataset load_dataset(const Context& ctx, const CoinSource& c) {
    const auto p = dataset_path(ctx, c);
    if (!fs::exists(p)) throw ConfigError(fmt::format("missing dataset '{}'; run `crn ingest` first", p.string()));
    return read_dataset_csv(p, c.name);
}

/// Selected group: pinned in config, else the select-features artifact, else selected now.
backtest::BacktestConfig coin_config(const Context& ctx, const CoinSource& c) {
    auto cfg = ctx.cfg.for_coin(c);
    if (!cfg.group) {
        const auto p = ctx.out / "selection" / (c.name + ".json");
        if (fs::exists(p)) cfg.group = parse_group(read_json(p).at("group").get<std::string>());
    }
    return cfg;
}

fs::path checkpoint_path(const Context& ctx, const std::string& coin, backtest::Strategy s, std::uint64_t seed) {
    return ctx.out / "agents" / fmt::format("{}_{}_seed{}.json", coin, backtest::strategy_name(s), seed);
}

std::vector<backtest::Strategy> agent_strategies(const Context& ctx) {
    std::vector<backtest::Strategy> out;
    for (auto s : ctx.cfg.strategies) {
        if (s != backtest::Strategy::BuyAndHold) out.push_back(s);
    }
    return out;
}

void run_ingest(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto bars = load_ohlcv_csv(c.ohlcv);
        std::vector<ExogenousRecord> exo;
        if (c.macro) exo = load_macro_csv(*c.macro);
        if (c.tweets) exo = merge_exogenous(exo, load_tweets_csv(*c.tweets));
        const auto ds = align_calendar(c.name, bars, exo);
        fs::create_directories(ctx.out / "data");
        write_dataset_csv(ds, dataset_path(ctx, c));
        spdlog::info("{}: {} rows, train split {}", c.name, ds.size(), ds.split_index());
    }
}

void run_indicators(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto ds = load_dataset(ctx, c);
        const auto cfg = ctx.cfg.for_coin(c);
        fs::create_directories(ctx.out / "features");
        for (auto g : all_groups()) {
            const auto cols = group_columns(g, cfg.pgm.indicators);
            bool available = true;
            for (const auto& name : cols) {
                if ((name == "tweet_count" || name == "gold" || name == "msci" || name == "sp500" || name == "usdx" ||
                     name == "wti") &&
                    !ds.has_column(name)) {
                    available = false;
                }
            }
            if (!available) {
                spdlog::warn("{}: skipping group {} (exogenous data missing)", c.name, group_name(g));
                continue;
            }
            std::string file = fmt::format("{}_{}.csv", c.name, group_name(g));
            for (auto& ch : file) {
                if (ch == '+') ch = '_';
            }
            write_feature_frame_csv(compute_feature_frame(ds, g, cfg.pgm.indicators), ctx.out / "features" / file);
        }
    }
}

void run_select(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto ds = load_dataset(ctx, c);
        const auto cfg = ctx.cfg.for_coin(c);
        json j;
        if (cfg.group) {
            j = {{"group", group_name(*cfg.group)}, {"pinned", true}};
        } else {
            const auto sel = pgm::select_feature_group(ds, cfg.pgm);
            json acc = json::object();
            for (const auto& [g, a] : sel.accuracies) acc[std::string(group_name(g))] = a;
            j = {{"group", group_name(sel.group)}, {"pinned", false}, {"accuracy", acc}};
        }
        write_json(j, ctx.out / "selection" / (c.name + ".json"));
        spdlog::info("{}: feature group {}", c.name, j.at("group").get<std::string>());
    }
}

void run_train_dbn(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto ds = load_dataset(ctx, c);
        auto cfg = coin_config(ctx, c);
        if (!cfg.group) cfg.group = pgm::select_feature_group(ds, cfg.pgm).group;
        const auto fitted = pgm::fit_dbn(ds, *cfg.group, cfg.pgm);
        write_json(pgm::to_json(fitted), ctx.out / "dbn" / (c.name + ".json"));
        spdlog::info("{}: DBN with {} variables, {} edges", c.name, fitted.model.variables.size(),
                     fitted.model.edge_count());
    }
}

void run_train_agent(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto cfg = coin_config(ctx, c);
        const auto market = backtest::prepare_market(load_dataset(ctx, c), cfg);
        for (auto s : agent_strategies(ctx)) {
            for (auto seed : ctx.cfg.seeds) {
                spdlog::info("{}: training {} seed {}", c.name, backtest::strategy_name(s), seed);
                const auto trained = backtest::train_strategy(market, s, seed, cfg);
                const auto path = checkpoint_path(ctx, c.name, s, seed);
                write_json(trained.checkpoint, path);
                auto log_path = path;
                log_path.replace_extension(".log.csv");
                agents::write_training_log_csv(trained.log, trained.policy.algorithm, log_path);
            }
        }
    }
}

void run_backtest_stage(const Context& ctx) {
    for (const auto& c : ctx.cfg.coins) {
        const auto cfg = coin_config(ctx, c);
        const auto market = backtest::prepare_market(load_dataset(ctx, c), cfg);
        for (auto s : ctx.cfg.strategies) {
            for (auto seed : ctx.cfg.seeds) {
                backtest::RunResult r;
                const auto ckpt = checkpoint_path(ctx, c.name, s, seed);
                if (s != backtest::Strategy::BuyAndHold && fs::exists(ckpt)) {
                    const auto policy = agents::policy_from_checkpoint(read_json(ckpt));
                    r = backtest::evaluate_strategy(market, s, seed, policy, cfg);
                    backtest::write_run_trade_log(r, ctx.out / "trades");
                } else {
                    r = backtest::run_backtest(market, s, seed, cfg, ctx.out / "trades");
                }
                // Paths relative to the output dir keep artifacts relocatable.
                if (!r.trade_log.empty()) r.trade_log = fs::relative(r.trade_log, ctx.out).generic_string();
                write_json(backtest::to_json(r), ctx.out / "runs" /
                                                     fmt::format("{}_{}_seed{}.json", c.name,
                                                                 backtest::strategy_name(s), seed));
                spdlog::info("{} {} seed {}: ROI {:.4f}", c.name, backtest::strategy_name(s), seed, r.roi);
            }
        }
    }
}

void run_report(const Context& ctx) {
    std::vector<backtest::Aggregate> aggregates;
    for (const auto& c : ctx.cfg.coins) {
        for (auto s : ctx.cfg.strategies) {
            std::vector<backtest::RunResult> runs;
            for (auto seed : ctx.cfg.seeds) {
                runs.push_back(backtest::run_result_from_json(read_json(
                    ctx.out / "runs" / fmt::format("{}_{}_seed{}.json", c.name, backtest::strategy_name(s), seed))));
            }
            aggregates.push_back(backtest::aggregate_runs(runs, ctx.cfg.seeds.size()));
        }
    }
    const auto dir = ctx.out / "report";
    backtest::emit_report(aggregates, dir, ctx.hash);
    // Wall-clock data lives only in this sidecar so the report itself stays reproducible.
    const auto now = std::chrono::system_clock::now();
    write_json({{"config_hash", ctx.hash},
                {"generated_unix", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
                {"config", ctx.cfg.to_json()}},
               dir / "metadata.json");
    std::ifstream table(dir / "roi_table.txt");
    std::cout << table.rdbuf();
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Causal feature selection, DBN direction signals and RL trading agents", "crn"};
    Globals g;
    app.add_option("--config", g.config, "Pipeline config (JSON)");
    app.add_option("--seed", g.seed, "Run a single seed instead of the configured list");
    app.add_option("--out", g.out, "Output directory (default: $CRN_OUT, then the config's output_dir)");
    app.add_option("--log-level", g.level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    app.require_subcommand(1);

    using Stage = void (*)(const Context&);
    const std::vector<std::tuple<const char*, const char*, Stage>> stages{
        {"ingest", "Load and calendar-align raw CSVs into per-coin datasets", run_ingest},
        {"indicators", "Compute feature frames for every feature group", run_indicators},
        {"select-features", "Pick each coin's feature group by BN direction accuracy", run_select},
        {"train-dbn", "Fit the direction DBN on each coin's training split", run_train_dbn},
        {"train-agent", "Train CRN and Base agents for every seed", run_train_agent},
        {"backtest", "Evaluate strategies on the test split and write trade logs", run_backtest_stage},
        {"report", "Aggregate seeded runs into ROI and decision tables", run_report},
    };
    std::map<CLI::App*, Stage> handlers;
    for (const auto& [name, help, fn] : stages) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        handlers[sub] = fn;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    auto logger = spdlog::get("crn");
    if (!logger) logger = spdlog::stderr_color_mt("crn");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(g.level));

    try {
        const auto ctx = make_context(g);
        for (auto& [sub, fn] : handlers) {
            if (sub->parsed()) fn(ctx);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
}

}  // namespace crn::cli
