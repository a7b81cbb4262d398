#include "kinn/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace kinn {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

int days_in_month(int year, int month) {
    static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return table[month - 1];
}

}  // namespace

Date Date::parse(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' ||
        !all_digits(iso.substr(0, 4)) || !all_digits(iso.substr(5, 2)) ||
        !all_digits(iso.substr(8, 2))) {
        throw std::invalid_argument("date '" + iso + "' is not YYYY-MM-DD");
    }
    Date d{std::stoi(iso.substr(0, 4)), std::stoi(iso.substr(5, 2)), std::stoi(iso.substr(8, 2))};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw std::invalid_argument("date '" + iso + "' is out of range");
    }
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

SeriesFrame load_series(const std::filesystem::path& path, std::size_t require_rows) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,value") {
        throw std::runtime_error(path.string() + ": expected header 'date,value', got '" + line +
                                 "'");
    }

    std::vector<std::pair<Date, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto where = path.filename().string() + ":" + std::to_string(lineno);
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(where + ": missing comma");
        }
        Date date;
        try {
            date = Date::parse(line.substr(0, comma));
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        const std::string_view num(line.data() + comma + 1, line.size() - comma - 1);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (ec != std::errc{} || ptr != num.data() + num.size()) {
            throw std::runtime_error(where + ": unparseable value '" + std::string(num) + "'");
        }
        if (!(value > 0.0)) {
            throw std::runtime_error(where + ": non-positive value " + std::string(num));
        }
        rows.emplace_back(date, value);
    }

    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
            throw std::runtime_error(path.string() + ": duplicate date " +
                                     rows[i].first.to_string());
        }
    }
    if (require_rows > 0 && rows.size() < require_rows) {
        throw std::runtime_error(path.string() + ": insufficient data, " +
                                 std::to_string(rows.size()) + " rows < required " +
                                 std::to_string(require_rows));
    }

    SeriesFrame frame;
    frame.dates.reserve(rows.size());
    frame.values.reserve(rows.size());
    for (auto& [d, v] : rows) {
        frame.dates.push_back(d);
        frame.values.push_back(v);
    }
    return frame;
}

}  // namespace kinn
