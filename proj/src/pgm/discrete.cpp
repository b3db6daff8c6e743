#include "crn/pgm/discrete.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "crn/errors.hpp"

namespace crn::pgm {

int DiscreteVariable::bin(double value) const {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::size_t DiscreteFrame::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == name) return i;
    }
    throw LookupError(fmt::format("unknown variable '{}'", name));
}

DiscreteFrame DiscreteFrame::slice(std::size_t begin, std::size_t end) const {
    DiscreteFrame out;
    out.variables = variables;
    end = std::min(end, rows());
    begin = std::min(begin, end);
    for (const auto& col : data) out.data.emplace_back(col.begin() + begin, col.begin() + end);
    return out;
}

std::vector<double> quantile_edges(std::vector<double> values, int bins) {
    if (bins < 2) throw ContractError("need at least 2 bins");
    if (values.empty()) throw ContractError("no values to fit bin edges on");
    std::sort(values.begin(), values.end());
    if (values.front() == values.back()) return {values.front()};
    std::vector<double> edges;
    const double last = static_cast<double>(values.size() - 1);
    for (int k = 1; k < bins; ++k) {
        const double h = last * static_cast<double>(k) / static_cast<double>(bins);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double q = values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
        if (edges.empty() || q > edges.back()) edges.push_back(q);
    }
    return edges;
}

std::vector<int> Discretizer::encode(std::span<const double> row) const {
    if (row.size() != features.size()) {
        throw ShapeError(fmt::format("row has {} values, discretizer expects {}", row.size(),
                                     features.size()));
    }
    std::vector<int> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = features[i].bin(row[i]);
    return out;
}

Discretizer fit_discretizer(const FeatureFrame& frame, int bins, std::span<const std::size_t> fit_rows) {
    if (bins < 2) throw ContractError("need at least 2 bins");
    if (fit_rows.empty()) throw ContractError("discretizer needs at least one fit row");
    Discretizer d;
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        std::vector<double> values;
        values.reserve(fit_rows.size());
        for (auto r : fit_rows) {
            if (frame.mask[r]) throw ContractError(fmt::format("fit row {} is a warm-up row", r));
            values.push_back(frame.columns[c][r]);
        }
        DiscreteVariable v;
        v.name = frame.names[c];
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        if (*lo == *hi) {
            spdlog::warn("feature '{}' has no spread on fit rows; using a single split", v.name);
        }
        v.edges = quantile_edges(std::move(values), bins);
        v.cardinality = static_cast<int>(v.edges.size()) + 1;
        d.features.push_back(std::move(v));
    }
    return d;
}

std::vector<int> next_day_directions(std::span<const double> close, bool zero_change_is_down) {
    std::vector<int> dir(close.size(), kUnobserved);
    for (std::size_t t = 0; t + 1 < close.size(); ++t) {
        const double ch = close[t + 1] - close[t];
        if (ch > 0.0) {
            dir[t] = kUp;
        } else if (ch < 0.0) {
            dir[t] = kDown;
        } else {
            dir[t] = zero_change_is_down ? kDown : kUp;
        }
    }
    return dir;
}

DiscreteFrame encode_rows(const FeatureFrame& frame, const Discretizer& disc,
                          std::span<const std::size_t> rows, bool zero_change_is_down) {
    const auto dir = next_day_directions(frame.column("close"), zero_change_is_down);
    DiscreteFrame out;
    out.variables = disc.features;
    out.variables.push_back(DiscreteVariable{std::string(kDirection), 2, {}});
    out.data.assign(out.variables.size(), {});
    for (auto& col : out.data) col.reserve(rows.size());
    for (auto r : rows) {
        auto codes = disc.encode(frame.row(r));
        for (std::size_t c = 0; c < codes.size(); ++c) out.data[c].push_back(codes[c]);
        out.data.back().push_back(dir[r]);
    }
    return out;
}

Discretization discretize_frame(const FeatureFrame& frame, int bins,
                                std::span<const std::size_t> fit_rows, bool zero_change_is_down) {
    Discretization d;
    d.discretizer = fit_discretizer(frame, bins, fit_rows);
    for (std::size_t t = 0; t + 1 < frame.rows(); ++t) {
        if (!frame.mask[t]) d.source_rows.push_back(t);
    }
    d.frame = encode_rows(frame, d.discretizer, d.source_rows, zero_change_is_down);
    return d;
}

}  // namespace crn::pgm
