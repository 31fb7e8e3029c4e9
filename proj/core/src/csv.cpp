#include "fopid/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fopid::csv {

std::string format_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

Writer& Writer::header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto name : names) {
        if (!first)
            out_ << ',';
        out_ << name;
        first = false;
    }
    out_ << '\n';
    return *this;
}

Writer& Writer::row(std::initializer_list<double> values) { return row(values, {}); }

Writer& Writer::row(std::initializer_list<double> values, std::initializer_list<std::string_view> text) {
    bool first = true;
    for (double v : values) {
        if (!first)
            out_ << ',';
        out_ << format_number(v);
        first = false;
    }
    for (auto t : text) {
        if (!first)
            out_ << ',';
        out_ << t;
        first = false;
    }
    out_ << '\n';
    return *this;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw std::out_of_range("CSV column not found: " + std::string(name));
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        fields.push_back(field);
    if (!line.empty() && line.back() == ',')
        fields.emplace_back();
    for (auto& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' '))
            f.pop_back();
        while (!f.empty() && f.front() == ' ')
            f.erase(f.begin());
    }
    return fields;
}

} // namespace

Table read(std::istream& in) {
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fields = split(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw std::runtime_error("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    if (!have_header)
        throw std::runtime_error("CSV input is empty");
    return table;
}

double parse_number(std::string_view text) {
    double value = 0.0;
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return value;
}

} // namespace fopid::csv
