#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crn/indicators.hpp"

namespace crn::pgm {

inline constexpr int kDown = 0;
inline constexpr int kUp = 1;
inline constexpr int kUnobserved = -1;
inline constexpr std::string_view kDirection = "direction";

/// A discrete variable. Continuous origins carry the bin edges fitted on
/// training rows: value v falls in bin k where k = #edges <= v.
struct DiscreteVariable {
    std::string name;
    int cardinality = 2;
    std::vector<double> edges;

    int bin(double value) const;
    friend bool operator==(const DiscreteVariable&, const DiscreteVariable&) = default;
};

/// Column-major table of discrete observations.
struct DiscreteFrame {
    std::vector<DiscreteVariable> variables;
    std::vector<std::vector<int>> data;  // data[variable][row]

    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
    std::size_t cols() const { return variables.size(); }
    /// Throws LookupError.
    std::size_t index_of(std::string_view name) const;
    /// Rows [begin, end) of every column.
    DiscreteFrame slice(std::size_t begin, std::size_t end) const;
};

/// Quantile edges (linear interpolation between order statistics) at k/bins,
/// deduplicated. A column with zero spread returns a single edge at its value.
std::vector<double> quantile_edges(std::vector<double> values, int bins);

/// Feature discretizer fitted on a fixed set of rows.
struct Discretizer {
    std::vector<DiscreteVariable> features;

    std::vector<int> encode(std::span<const double> row) const;
};

/// Fits one variable per frame column. Throws ContractError on bins < 2 or empty fit rows.
Discretizer fit_discretizer(const FeatureFrame& frame, int bins, std::span<const std::size_t> fit_rows);

/// Next-day direction per row: Up if close[t+1] > close[t], else Down
/// (or Up on ties when `zero_change_is_down` is false). The last row is kUnobserved.
std::vector<int> next_day_directions(std::span<const double> close, bool zero_change_is_down = true);

struct Discretization {
    DiscreteFrame frame;                 // features then the direction column
    Discretizer discretizer;
    std::vector<std::size_t> source_rows;  // frame row behind each discrete row
};

/// Encodes every unmasked row whose next-day direction is known. Bin edges
/// come from `fit_rows` only.
Discretization discretize_frame(const FeatureFrame& frame, int bins,
                                std::span<const std::size_t> fit_rows,
                                bool zero_change_is_down = true);

/// Encodes the listed rows with an already fitted discretizer, appending the
/// direction column computed from the frame's close prices.
DiscreteFrame encode_rows(const FeatureFrame& frame, const Discretizer& disc,
                          std::span<const std::size_t> rows, bool zero_change_is_down = true);

}  // namespace crn::pgm
