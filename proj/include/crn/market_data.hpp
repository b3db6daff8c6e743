#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crn {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar day (YYYY-MM-DD). Returns nullopt on malformed input.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// One daily OHLCV record.
struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    bool valid() const;
};

/// Macro-financial levels and tweet count for one calendar day. Absent
/// values are market holidays or gaps in the source file.
struct ExogenousRecord {
    Date date;
    std::optional<double> gold;
    std::optional<double> msci;
    std::optional<double> sp500;
    std::optional<double> usdx;
    std::optional<double> wti;
    std::optional<std::int64_t> tweet_count;
};

enum class ExoColumn { Gold, Msci, Sp500, Usdx, Wti, TweetCount };

std::string_view column_name(ExoColumn c);
const std::vector<ExoColumn>& macro_columns();

/// Calendar-indexed table of named columns for one asset.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string asset, std::vector<Date> dates,
            std::map<std::string, std::vector<double>> columns);

    const std::string& asset() const { return asset_; }
    const std::vector<Date>& dates() const { return dates_; }
    const std::map<std::string, std::vector<double>>& columns() const { return columns_; }
    std::size_t size() const { return dates_.size(); }
    bool empty() const { return dates_.empty(); }
    std::size_t split_index() const { return split_index_; }

    bool has_column(std::string_view name) const;
    /// Throws LookupError for unknown names.
    const std::vector<double>& column(std::string_view name) const;

    /// Rows [begin, end).
    Dataset slice(std::size_t begin, std::size_t end) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::string asset_;
    std::vector<Date> dates_;
    std::map<std::string, std::vector<double>> columns_;
    std::size_t split_index_ = 0;
};

/// floor(0.67 * n), computed in integers.
std::size_t train_length(std::size_t n);

std::vector<Bar> load_ohlcv_csv(const std::filesystem::path& path);
std::vector<ExogenousRecord> load_macro_csv(const std::filesystem::path& path);
std::vector<ExogenousRecord> load_tweets_csv(const std::filesystem::path& path);

/// Merges records sharing a date; later sources fill fields the earlier left empty.
std::vector<ExogenousRecord> merge_exogenous(const std::vector<ExogenousRecord>& a,
                                             const std::vector<ExogenousRecord>& b);

/// One row per crypto trading day. Exogenous gaps are forward-filled from the
/// last available value; leading gaps are back-filled from the first one.
/// Exogenous columns without a single value are dropped, unless listed in
/// `required`, which raises MissingDataError.
Dataset align_calendar(std::string asset, const std::vector<Bar>& bars,
                       const std::vector<ExogenousRecord>& exo,
                       const std::set<ExoColumn>& required = {});

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds);

struct SummaryStats {
    double mean = 0.0;
    double std = 0.0;  // population
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

SummaryStats summary_stats(const Dataset& ds, std::string_view column);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path, std::string asset);

}  // namespace crn
