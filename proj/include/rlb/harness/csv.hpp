#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rlb::harness
{
    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;

        /// Index of `name` in the header; throws std::out_of_range if absent.
        std::size_t column(std::string_view name) const;
        double number(std::size_t row, std::string_view name) const;
    };

    /// Quotes a field when it holds a comma, quote or newline.
    std::string csv_escape(std::string_view field);
    void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

    CsvTable parse_csv(std::string_view text);
    CsvTable read_csv(const std::filesystem::path& path);
} // namespace rlb::harness
