#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spades {

// Shortest round-trip decimal form of a double (std::to_chars). Gives
// byte-stable output for a given value, which the CLI determinism
// contract relies on.
std::string format_double(double v);

// Empty string for absent values (e.g. undefined WQL).
std::string format_optional(const std::optional<double>& v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

// Reads a whole CSV file: header row + data rows, comma separated,
// UTF-8, '.' decimal separator. Throws std::runtime_error on I/O errors.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const; // throws if missing
};

CsvTable read_csv(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

} // namespace spades
