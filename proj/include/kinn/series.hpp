#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <vector>

namespace kinn {

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& iso);  // strict YYYY-MM-DD
    std::string to_string() const;
};

// Ordered trading-day closing levels. Dates strictly increasing, values
// strictly positive.
struct SeriesFrame {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Reads a `date,value` CSV (any row order), sorts ascending, validates.
// require_rows > 0 additionally rejects shorter series as insufficient;
// experiment entry points pass 2 * session_len.
SeriesFrame load_series(const std::filesystem::path& path, std::size_t require_rows = 0);

}  // namespace kinn
