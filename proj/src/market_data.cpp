#include "crn/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "crn/errors.hpp"
#include "csv_util.hpp"

namespace crn {

using detail::blank;
using detail::parse_double;
using detail::split_fields;

std::optional<Date> parse_date(std::string_view text) {
    text = detail::trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
        if (ec != std::errc{} || ptr != text.data() + pos + len) return std::nullopt;
        return v;
    };
    auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

bool Bar::valid() const {
    return std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
           std::isfinite(close) && std::isfinite(volume) && low <= std::min(open, close) &&
           high >= std::max(open, close) && volume >= 0.0 && low <= high;
}

std::string_view column_name(ExoColumn c) {
    switch (c) {
        case ExoColumn::Gold: return "gold";
        case ExoColumn::Msci: return "msci";
        case ExoColumn::Sp500: return "sp500";
        case ExoColumn::Usdx: return "usdx";
        case ExoColumn::Wti: return "wti";
        case ExoColumn::TweetCount: return "tweet_count";
    }
    return "";
}

const std::vector<ExoColumn>& macro_columns() {
    static const std::vector<ExoColumn> cols{ExoColumn::Gold, ExoColumn::Msci, ExoColumn::Sp500,
                                             ExoColumn::Usdx, ExoColumn::Wti};
    return cols;
}

Dataset::Dataset(std::string asset, std::vector<Date> dates,
                 std::map<std::string, std::vector<double>> columns)
    : asset_(std::move(asset)), dates_(std::move(dates)), columns_(std::move(columns)) {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (dates_[i] <= dates_[i - 1]) {
            throw OrderingError(fmt::format("dates not strictly increasing at row {}", i));
        }
    }
    for (const auto& [name, values] : columns_) {
        if (values.size() != dates_.size()) {
            throw ShapeError(fmt::format("column '{}' has {} rows, expected {}", name,
                                         values.size(), dates_.size()));
        }
    }
    split_index_ = train_length(dates_.size());
}

bool Dataset::has_column(std::string_view name) const {
    return columns_.find(std::string(name)) != columns_.end();
}

const std::vector<double>& Dataset::column(std::string_view name) const {
    auto it = columns_.find(std::string(name));
    if (it == columns_.end()) throw LookupError(fmt::format("unknown column '{}'", name));
    return it->second;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    std::vector<Date> d(dates_.begin() + begin, dates_.begin() + end);
    std::map<std::string, std::vector<double>> cols;
    for (const auto& [name, values] : columns_) {
        cols.emplace(name, std::vector<double>(values.begin() + begin, values.begin() + end));
    }
    return Dataset(asset_, std::move(d), std::move(cols));
}

std::size_t train_length(std::size_t n) { return n * 67 / 100; }

namespace {

struct CsvFile {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::string>> rows;  // (line number, text)
};

CsvFile read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
    CsvFile file;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        if (!have_header) {
            for (auto f : split_fields(line)) {
                std::string name(f);
                std::transform(name.begin(), name.end(), name.begin(),
                               [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
                file.header.push_back(std::move(name));
            }
            have_header = true;
            continue;
        }
        file.rows.emplace_back(lineno, line);
    }
    if (!have_header) throw ParseError(1, "missing header row");
    return file;
}

void expect_header(const CsvFile& f, const std::vector<std::string>& expected) {
    if (f.header != expected) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        throw ParseError(1, fmt::format("expected header '{}'", want));
    }
}

Date row_date(std::size_t lineno, std::string_view field) {
    auto d = parse_date(field);
    if (!d) throw ParseError(lineno, fmt::format("bad date '{}'", field));
    return *d;
}

void check_order(std::size_t lineno, std::optional<Date> prev, Date cur) {
    if (prev && cur == *prev) {
        throw OrderingError(fmt::format("line {}: duplicate date {}", lineno, format_date(cur)));
    }
    if (prev && cur < *prev) {
        throw OrderingError(fmt::format("line {}: date {} precedes {}", lineno, format_date(cur),
                                        format_date(*prev)));
    }
}

}  // namespace

std::vector<Bar> load_ohlcv_csv(const std::filesystem::path& path) {
    auto file = read_csv(path);
    expect_header(file, {"date", "open", "high", "low", "close", "volume"});
    std::vector<Bar> bars;
    bars.reserve(file.rows.size());
    std::optional<Date> prev;
    for (const auto& [lineno, text] : file.rows) {
        auto f = split_fields(text);
        if (f.size() != 6) throw ParseError(lineno, fmt::format("expected 6 fields, got {}", f.size()));
        Bar b;
        b.date = row_date(lineno, f[0]);
        double* targets[] = {&b.open, &b.high, &b.low, &b.close, &b.volume};
        for (std::size_t i = 0; i < 5; ++i) {
            auto v = parse_double(f[i + 1]);
            if (!v) throw ParseError(lineno, fmt::format("bad number '{}'", f[i + 1]));
            *targets[i] = *v;
        }
        if (!b.valid()) throw ParseError(lineno, "inconsistent OHLCV values");
        check_order(lineno, prev, b.date);
        prev = b.date;
        bars.push_back(b);
    }
    return bars;
}

std::vector<ExogenousRecord> load_macro_csv(const std::filesystem::path& path) {
    auto file = read_csv(path);
    expect_header(file, {"date", "gold", "msci", "sp500", "usdx", "wti"});
    std::vector<ExogenousRecord> out;
    std::optional<Date> prev;
    for (const auto& [lineno, text] : file.rows) {
        auto f = split_fields(text);
        if (f.size() != 6) throw ParseError(lineno, fmt::format("expected 6 fields, got {}", f.size()));
        ExogenousRecord r;
        r.date = row_date(lineno, f[0]);
        std::optional<double>* targets[] = {&r.gold, &r.msci, &r.sp500, &r.usdx, &r.wti};
        for (std::size_t i = 0; i < 5; ++i) {
            if (f[i + 1].empty()) continue;  // holiday gap
            auto v = parse_double(f[i + 1]);
            if (!v || !(*v > 0.0) || !std::isfinite(*v)) {
                throw ParseError(lineno, fmt::format("bad price level '{}'", f[i + 1]));
            }
            *targets[i] = *v;
        }
        check_order(lineno, prev, r.date);
        prev = r.date;
        out.push_back(r);
    }
    return out;
}

std::vector<ExogenousRecord> load_tweets_csv(const std::filesystem::path& path) {
    auto file = read_csv(path);
    expect_header(file, {"date", "tweet_count"});
    std::vector<ExogenousRecord> out;
    std::optional<Date> prev;
    for (const auto& [lineno, text] : file.rows) {
        auto f = split_fields(text);
        if (f.size() != 2) throw ParseError(lineno, fmt::format("expected 2 fields, got {}", f.size()));
        ExogenousRecord r;
        r.date = row_date(lineno, f[0]);
        if (!f[1].empty()) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), v);
            if (ec != std::errc{} || ptr != f[1].data() + f[1].size() || v < 0) {
                throw ParseError(lineno, fmt::format("bad tweet count '{}'", f[1]));
            }
            r.tweet_count = v;
        }
        check_order(lineno, prev, r.date);
        prev = r.date;
        out.push_back(r);
    }
    return out;
}

std::vector<ExogenousRecord> merge_exogenous(const std::vector<ExogenousRecord>& a,
                                             const std::vector<ExogenousRecord>& b) {
    std::map<Date, ExogenousRecord> by_date;
    for (const auto* src : {&a, &b}) {
        for (const auto& r : *src) {
            auto [it, inserted] = by_date.try_emplace(r.date, r);
            if (inserted) continue;
            auto& dst = it->second;
            if (!dst.gold) dst.gold = r.gold;
            if (!dst.msci) dst.msci = r.msci;
            if (!dst.sp500) dst.sp500 = r.sp500;
            if (!dst.usdx) dst.usdx = r.usdx;
            if (!dst.wti) dst.wti = r.wti;
            if (!dst.tweet_count) dst.tweet_count = r.tweet_count;
        }
    }
    std::vector<ExogenousRecord> out;
    out.reserve(by_date.size());
    for (auto& [d, r] : by_date) out.push_back(r);
    return out;
}

namespace {

std::optional<double> field(const ExogenousRecord& r, ExoColumn c) {
    switch (c) {
        case ExoColumn::Gold: return r.gold;
        case ExoColumn::Msci: return r.msci;
        case ExoColumn::Sp500: return r.sp500;
        case ExoColumn::Usdx: return r.usdx;
        case ExoColumn::Wti: return r.wti;
        case ExoColumn::TweetCount:
            if (r.tweet_count) return static_cast<double>(*r.tweet_count);
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

Dataset align_calendar(std::string asset, const std::vector<Bar>& bars,
                       const std::vector<ExogenousRecord>& exo,
                       const std::set<ExoColumn>& required) {
    if (bars.empty()) throw TooSmallError("align_calendar: no bars");

    std::vector<ExogenousRecord> sorted = exo;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& x, const auto& y) { return x.date < y.date; });

    std::vector<Date> dates;
    std::map<std::string, std::vector<double>> cols;
    for (const char* n : {"open", "high", "low", "close", "volume"}) cols[n].reserve(bars.size());
    for (const auto& b : bars) {
        dates.push_back(b.date);
        cols["open"].push_back(b.open);
        cols["high"].push_back(b.high);
        cols["low"].push_back(b.low);
        cols["close"].push_back(b.close);
        cols["volume"].push_back(b.volume);
    }

    std::vector<ExoColumn> all = macro_columns();
    all.push_back(ExoColumn::TweetCount);
    for (ExoColumn c : all) {
        std::optional<double> first;
        for (const auto& r : sorted) {
            if (auto v = field(r, c)) {
                first = v;
                break;
            }
        }
        if (!first) {
            if (required.count(c)) {
                throw MissingDataError(
                    fmt::format("exogenous column '{}' has no values", column_name(c)));
            }
            continue;
        }
        std::vector<double> values;
        values.reserve(dates.size());
        double last = *first;
        std::size_t k = 0;
        for (Date d : dates) {
            while (k < sorted.size() && sorted[k].date <= d) {
                if (auto v = field(sorted[k], c)) last = *v;
                ++k;
            }
            values.push_back(last);
        }
        cols.emplace(std::string(column_name(c)), std::move(values));
    }
    return Dataset(std::move(asset), std::move(dates), std::move(cols));
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds) {
    if (ds.size() < 3) {
        throw TooSmallError(fmt::format("need at least 3 rows to split, got {}", ds.size()));
    }
    auto cut = ds.split_index();
    return {ds.slice(0, cut), ds.slice(cut, ds.size())};
}

SummaryStats summary_stats(const Dataset& ds, std::string_view column) {
    const auto& v = ds.column(column);
    if (v.empty()) throw TooSmallError("summary_stats: empty column");
    SummaryStats s;
    const double n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / n);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const auto m = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
    return s;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << "date";
    for (const auto& [name, _] : ds.columns()) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << format_date(ds.dates()[i]);
        for (const auto& [_, values] : ds.columns()) out << ',' << fmt::format("{}", values[i]);
        out << '\n';
    }
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::string asset) {
    auto file = read_csv(path);
    if (file.header.empty() || file.header.front() != "date") {
        throw ParseError(1, "first column must be 'date'");
    }
    std::vector<Date> dates;
    std::vector<std::vector<double>> values(file.header.size() - 1);
    for (const auto& [lineno, text] : file.rows) {
        auto f = split_fields(text);
        if (f.size() != file.header.size()) {
            throw ParseError(lineno, fmt::format("expected {} fields, got {}", file.header.size(), f.size()));
        }
        dates.push_back(row_date(lineno, f[0]));
        for (std::size_t c = 1; c < f.size(); ++c) {
            auto v = parse_double(f[c]);
            if (!v) throw ParseError(lineno, fmt::format("bad number '{}'", f[c]));
            values[c - 1].push_back(*v);
        }
    }
    std::map<std::string, std::vector<double>> cols;
    for (std::size_t c = 1; c < file.header.size(); ++c) {
        cols.emplace(file.header[c], std::move(values[c - 1]));
    }
    return Dataset(std::move(asset), std::move(dates), std::move(cols));
}

}  // namespace crn
