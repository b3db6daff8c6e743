#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crn/market_data.hpp"

namespace crn::synthetic {

/// Raw source records of a generated market, in loader form.
struct Market {
    std::vector<Bar> bars;
    std::vector<ExogenousRecord> exo;

    Dataset dataset(std::string asset) const;
};

/// Close grows by `daily_rate` plus N(0, noise^2) every day; open is the
/// previous close. With zero noise the seed only perturbs volume.
Market uptrend(std::size_t days, double daily_rate, std::uint64_t seed, double noise = 0.0);

/// Bull/bear regimes of random length with balanced drift. The tweet count of
/// day t agrees with the direction of day t+1 with probability
/// `predictability`; macro columns are independent random walks.
Market planted_signal(std::size_t days, double predictability, std::uint64_t seed);

/// Geometric random walk with every exogenous column populated.
Market random_walk(std::size_t days, std::uint64_t seed);

/// Writes ohlcv.csv, macro.csv and tweets.csv in loader format.
void write_market_csvs(const Market& m, const std::filesystem::path& dir);

}  // namespace crn::synthetic
