#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV helpers: comma-delimited, header row, '\n' line ends, numbers in
// shortest round-trip form so files are byte-reproducible.
namespace fopid::csv {

[[nodiscard]] std::string format_number(double value);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& header(std::initializer_list<std::string_view> names);
    Writer& row(std::initializer_list<double> values);
    // Numeric fields followed by trailing text fields.
    Writer& row(std::initializer_list<double> values, std::initializer_list<std::string_view> text);

private:
    std::ostream& out_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column; throws std::out_of_range if missing.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

// Throws std::runtime_error on ragged rows or an empty stream.
[[nodiscard]] Table read(std::istream& in);

[[nodiscard]] double parse_number(std::string_view text);

} // namespace fopid::csv
