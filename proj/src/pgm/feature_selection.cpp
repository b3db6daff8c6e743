#include "crn/pgm/feature_selection.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "crn/errors.hpp"
#include "crn/pgm/inference.hpp"

namespace crn::pgm {

std::vector<std::size_t> training_rows(const FeatureFrame& frame, std::size_t split_index) {
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t + 1 < std::min(split_index, frame.rows()); ++t) {
        if (!frame.mask[t]) rows.push_back(t);
    }
    return rows;
}

GroupScore evaluate_discrete(const DiscreteFrame& fit, const DiscreteFrame& validation,
                             const StructureOptions& opts) {
    if (validation.rows() == 0) throw TooSmallError("empty validation segment");
    const auto structure = learn_structure(fit, kDirection, opts);
    const auto net = fit_cpts(structure, fit);
    const auto target = net.index_of(kDirection);

    std::vector<std::size_t> col(net.size());
    for (std::size_t v = 0; v < net.size(); ++v) col[v] = validation.index_of(net.variable(v).name);

    std::size_t correct = 0, ups = 0;
    for (std::size_t r = 0; r < validation.rows(); ++r) {
        Evidence ev;
        for (std::size_t v = 0; v < net.size(); ++v) {
            if (v != target) ev[v] = validation.data[col[v]][r];
        }
        const auto post = infer(net, ev, target);
        const int predicted = post[kUp] > post[kDown] ? kUp : kDown;
        const int actual = validation.data[col[target]][r];
        if (predicted == actual) ++correct;
        if (actual == kUp) ++ups;
    }
    GroupScore s;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(validation.rows());
    s.degenerate_validation = ups == 0 || ups == validation.rows();
    if (s.degenerate_validation) spdlog::warn("validation segment contains a single direction class");
    return s;
}

GroupScore evaluate_feature_group(const Dataset& ds, FeatureGroup group, const PgmConfig& cfg) {
    const auto frame = compute_feature_frame(ds, group, cfg.indicators);
    const auto rows = training_rows(frame, ds.split_index());
    const auto n_fit = static_cast<std::size_t>(std::floor(cfg.fit_fraction * static_cast<double>(rows.size())));
    if (n_fit == 0 || n_fit >= rows.size()) {
        throw InsufficientDataError(fmt::format("training split of '{}' too small to score groups", ds.asset()));
    }
    std::vector<std::size_t> fit_rows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_fit));
    std::vector<std::size_t> val_rows(rows.begin() + static_cast<std::ptrdiff_t>(n_fit), rows.end());
    const auto disc = fit_discretizer(frame, cfg.bins, fit_rows);
    const auto fit = encode_rows(frame, disc, fit_rows, cfg.zero_change_is_down);
    const auto val = encode_rows(frame, disc, val_rows, cfg.zero_change_is_down);
    return evaluate_discrete(fit, val, cfg.dbn.structure);
}

GroupSelection select_feature_group(const Dataset& ds, const PgmConfig& cfg) {
    GroupSelection sel;
    double best = -1.0;
    std::size_t best_width = 0;
    for (auto g : all_groups()) {
        const double acc = evaluate_feature_group(ds, g, cfg).accuracy;
        const auto width = group_columns(g, cfg.indicators).size();
        sel.accuracies.emplace_back(g, acc);
        if (acc > best || (acc == best && width < best_width)) {
            best = acc;
            best_width = width;
            sel.group = g;
        }
    }
    return sel;
}

FittedDbn fit_dbn(const Dataset& ds, FeatureGroup group, const PgmConfig& cfg) {
    const auto frame = compute_feature_frame(ds, group, cfg.indicators);
    const auto rows = training_rows(frame, ds.split_index());
    if (rows.size() < cfg.dbn.min_rows) {
        throw InsufficientDataError(fmt::format("'{}' has {} usable training rows, DBN needs {}", ds.asset(),
                                                rows.size(), cfg.dbn.min_rows));
    }
    FittedDbn fitted;
    fitted.group = group;
    fitted.discretizer = fit_discretizer(frame, cfg.bins, rows);
    fitted.model = fit_dbn(encode_rows(frame, fitted.discretizer, rows, cfg.zero_change_is_down), cfg.dbn);
    return fitted;
}

std::vector<std::optional<DirectionPrediction>> predict_directions(const FittedDbn& fitted,
                                                                   const FeatureFrame& frame,
                                                                   bool zero_change_is_down) {
    const auto dir = next_day_directions(frame.column("close"), zero_change_is_down);
    const auto w = fitted.model.window;
    const auto d = fitted.model.direction;
    std::vector<std::optional<DirectionPrediction>> out(frame.rows());
    std::vector<DbnSlice> window;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        if (t + 1 < w) continue;
        bool complete = true;
        for (std::size_t i = t + 1 - w; i <= t; ++i) complete = complete && !frame.mask[i];
        if (!complete) continue;
        window.clear();
        for (std::size_t i = t + 1 - w; i <= t; ++i) {
            auto codes = fitted.discretizer.encode(frame.row(i));
            codes.insert(codes.begin() + static_cast<std::ptrdiff_t>(d), i < t ? dir[i] : kUnobserved);
            window.push_back(std::move(codes));
        }
        out[t] = dbn_predict(fitted.model, window);
    }
    return out;
}

nlohmann::json to_json(const FittedDbn& fitted) {
    return {{"group", group_name(fitted.group)}, {"model", to_json(fitted.model)}};
}

FittedDbn fitted_dbn_from_json(const nlohmann::json& j) {
    FittedDbn f;
    f.group = parse_group(j.at("group").get<std::string>());
    f.model = dbn_from_json(j.at("model"));
    for (std::size_t v = 0; v < f.model.size(); ++v) {
        if (v != f.model.direction) f.discretizer.features.push_back(f.model.variables[v]);
    }
    return f;
}

}  // namespace crn::pgm
