#include "crn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn {

namespace {

using nlohmann::json;

/// Reads typed members of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(fmt::format("config '{}' must be an object", where()));
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(fmt::format("config key '{}': {}", child(key), e.what()));
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError(fmt::format("config key '{}' is not recognized", child(k)));
        }
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::optional<FeatureGroup> group_from(const std::string& name, const std::string& key) {
    if (name == "auto") return std::nullopt;
    try {
        return parse_group(name);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

void read_env(Section s, EnvConfig& e) {
    s.get("lower", e.lower);
    s.get("upper", e.upper);
    s.get("strong_fraction", e.strong_fraction);
    s.get("strong_cutoff", e.strong_cutoff);
    s.get("fee_rate", e.fee_rate);
    s.get("risk_free_annual", e.risk_free_annual);
    s.get("roi_weight", e.roi_weight);
    s.get("sr_weight", e.sr_weight);
    s.get("sharpe_window", e.sharpe_window);
    s.get("initial_cash", e.initial_cash);
    s.get("obs_clip", e.obs_clip);
    s.finish();
}

void read_ppo(Section s, agents::PpoConfig& p) {
    s.get("clip", p.clip);
    s.get("gamma", p.gamma);
    s.get("gae_lambda", p.gae_lambda);
    s.get("epochs", p.epochs);
    s.get("rollout", p.rollout);
    s.get("minibatch", p.minibatch);
    s.get("lr", p.lr);
    s.get("log_std_init", p.log_std_init);
    s.get("max_grad_norm", p.max_grad_norm);
    s.get("value_coef", p.value_coef);
    s.get("hidden", p.hidden);
    s.get("random_starts", p.random_starts);
    s.get("reward_scale", p.reward_scale);
    s.finish();
}

void read_ddpg(Section s, agents::DdpgConfig& d) {
    s.get("capacity", d.capacity);
    s.get("batch", d.batch);
    s.get("tau", d.tau);
    s.get("actor_lr", d.actor_lr);
    s.get("critic_lr", d.critic_lr);
    s.get("noise_sigma", d.noise_sigma);
    s.get("gamma", d.gamma);
    s.get("learning_starts", d.learning_starts);
    s.get("hidden", d.hidden);
    s.get("random_starts", d.random_starts);
    s.get("reward_scale", d.reward_scale);
    s.finish();
}

void read_pgm(Section s, pgm::PgmConfig& p) {
    s.get("bins", p.bins);
    s.get("zero_change_is_down", p.zero_change_is_down);
    s.get("fit_fraction", p.fit_fraction);
    s.get("max_parents", p.dbn.structure.max_parents);
    s.get("max_direction_parents", p.dbn.max_direction_parents);
    s.get("min_rows", p.dbn.min_rows);
    s.finish();
}

template <typename Fn>
void wrap(const char* what, Fn fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("config '{}': {}", what, e.what()));
    }
}

}  // namespace

backtest::BacktestConfig PipelineConfig::for_coin(const CoinSource& coin) const {
    auto cfg = backtest;
    cfg.group = coin.group ? coin.group : default_group;
    return cfg;
}

nlohmann::json PipelineConfig::to_json() const {
    const auto& b = backtest;
    json coins_j = json::array();
    for (const auto& c : coins) {
        json cj{{"name", c.name}, {"ohlcv", c.ohlcv.generic_string()}};
        if (c.macro) cj["macro"] = c.macro->generic_string();
        if (c.tweets) cj["tweets"] = c.tweets->generic_string();
        cj["feature_group"] = c.group ? std::string(group_name(*c.group)) : std::string("default");
        coins_j.push_back(cj);
    }
    json strategies_j = json::array();
    for (auto s : strategies) strategies_j.push_back(backtest::strategy_name(s));
    return {{"coins", coins_j},
            {"feature_group", default_group ? std::string(group_name(*default_group)) : std::string("auto")},
            {"env",
             {{"lower", b.env.lower},
              {"upper", b.env.upper},
              {"strong_fraction", b.env.strong_fraction},
              {"strong_cutoff", b.env.strong_cutoff},
              {"fee_rate", b.env.fee_rate},
              {"risk_free_annual", b.env.risk_free_annual},
              {"roi_weight", b.env.roi_weight},
              {"sr_weight", b.env.sr_weight},
              {"sharpe_window", b.env.sharpe_window},
              {"initial_cash", b.env.initial_cash},
              {"obs_clip", b.env.obs_clip}}},
            {"ppo",
             {{"clip", b.agents.ppo.clip},
              {"gamma", b.agents.ppo.gamma},
              {"gae_lambda", b.agents.ppo.gae_lambda},
              {"epochs", b.agents.ppo.epochs},
              {"rollout", b.agents.ppo.rollout},
              {"minibatch", b.agents.ppo.minibatch},
              {"lr", b.agents.ppo.lr},
              {"log_std_init", b.agents.ppo.log_std_init},
              {"max_grad_norm", b.agents.ppo.max_grad_norm},
              {"value_coef", b.agents.ppo.value_coef},
              {"hidden", b.agents.ppo.hidden},
              {"random_starts", b.agents.ppo.random_starts},
              {"reward_scale", b.agents.ppo.reward_scale}}},
            {"ddpg",
             {{"capacity", b.agents.ddpg.capacity},
              {"batch", b.agents.ddpg.batch},
              {"tau", b.agents.ddpg.tau},
              {"actor_lr", b.agents.ddpg.actor_lr},
              {"critic_lr", b.agents.ddpg.critic_lr},
              {"noise_sigma", b.agents.ddpg.noise_sigma},
              {"gamma", b.agents.ddpg.gamma},
              {"learning_starts", b.agents.ddpg.learning_starts},
              {"hidden", b.agents.ddpg.hidden},
              {"random_starts", b.agents.ddpg.random_starts},
              {"reward_scale", b.agents.ddpg.reward_scale}}},
            {"pgm",
             {{"bins", b.pgm.bins},
              {"zero_change_is_down", b.pgm.zero_change_is_down},
              {"fit_fraction", b.pgm.fit_fraction},
              {"max_parents", b.pgm.dbn.structure.max_parents},
              {"max_direction_parents", b.pgm.dbn.max_direction_parents},
              {"min_rows", b.pgm.dbn.min_rows}}},
            {"train_steps", {{"ppo", b.ppo_steps}, {"ddpg", b.ddpg_steps}}},
            {"log_interval", b.agents.log_interval},
            {"buy_and_hold_fees", b.buy_and_hold_fees},
            {"strategies", strategies_j},
            {"seeds", seeds},
            {"output_dir", output_dir.generic_string()}};
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Map the byte offset to line:column for the message.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(fmt::format("config parse error at line {}, column {}: {}", line, col, e.what()));
    }

    PipelineConfig cfg;
    Section top(root, "");
    if (top.has("coins")) {
        const auto& arr = top.raw("coins");
        if (!arr.is_array()) throw ConfigError("config key 'coins' must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section c(arr[i], fmt::format("coins[{}]", i));
            CoinSource src;
            std::string ohlcv, macro, tweets, group = "default";
            c.get("name", src.name);
            c.get("ohlcv", ohlcv);
            c.get("macro", macro);
            c.get("tweets", tweets);
            c.get("feature_group", group);
            c.finish();
            if (src.name.empty()) throw ConfigError(fmt::format("config key '{}' is required", c.child("name")));
            if (ohlcv.empty()) throw ConfigError(fmt::format("config key '{}' is required", c.child("ohlcv")));
            src.ohlcv = resolve(base_dir, ohlcv);
            if (!macro.empty()) src.macro = resolve(base_dir, macro);
            if (!tweets.empty()) src.tweets = resolve(base_dir, tweets);
            if (group != "default") {
                src.group = group_from(group, c.child("feature_group"));
            }
            cfg.coins.push_back(std::move(src));
        }
    }
    std::string group = "auto";
    top.get("feature_group", group);
    cfg.default_group = group_from(group, "feature_group");

    auto& b = cfg.backtest;
    if (top.has("env")) read_env(Section(top.raw("env"), "env"), b.env);
    if (top.has("ppo")) read_ppo(Section(top.raw("ppo"), "ppo"), b.agents.ppo);
    if (top.has("ddpg")) read_ddpg(Section(top.raw("ddpg"), "ddpg"), b.agents.ddpg);
    if (top.has("pgm")) read_pgm(Section(top.raw("pgm"), "pgm"), b.pgm);
    if (top.has("train_steps")) {
        Section s(top.raw("train_steps"), "train_steps");
        s.get("ppo", b.ppo_steps);
        s.get("ddpg", b.ddpg_steps);
        s.finish();
    }
    top.get("log_interval", b.agents.log_interval);
    top.get("buy_and_hold_fees", b.buy_and_hold_fees);
    if (top.has("strategies")) {
        std::vector<std::string> names;
        top.get("strategies", names);
        cfg.strategies.clear();
        for (const auto& n : names) {
            wrap("strategies", [&] { cfg.strategies.push_back(backtest::parse_strategy(n)); });
        }
    }
    top.get("seeds", cfg.seeds);
    std::string out;
    top.get("output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
    top.finish();

    if (cfg.seeds.empty()) throw ConfigError("config key 'seeds' must not be empty");
    if (cfg.strategies.empty()) throw ConfigError("config key 'strategies' must not be empty");
    if (b.agents.log_interval == 0) throw ConfigError("config key 'log_interval' must be positive");
    wrap("env", [&] { b.env.validate(); });
    wrap("ppo", [&] { b.agents.ppo.validate(); });
    wrap("ddpg", [&] { b.agents.ddpg.validate(); });
    if (b.pgm.bins < 2) throw ConfigError("config key 'pgm.bins' must be at least 2");
    if (!(b.pgm.fit_fraction > 0.0 && b.pgm.fit_fraction < 1.0)) {
        throw ConfigError("config key 'pgm.fit_fraction' must lie in (0, 1)");
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_pipeline_config(ss.str(), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace crn
