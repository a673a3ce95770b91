#include "rlb/harness/csv.hpp"

#include "rlb/errors.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rlb::harness
{
    std::size_t CsvTable::column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
        {
            if (header[i] == name)
            {
                return i;
            }
        }
        throw std::out_of_range("no CSV column '" + std::string(name) + "'");
    }

    double CsvTable::number(std::size_t row, std::string_view name) const
    {
        return std::stod(rows.at(row).at(column(name)));
    }

    std::string csv_escape(std::string_view field)
    {
        if (field.find_first_of(",\"\n\r") == std::string_view::npos)
        {
            return std::string(field);
        }
        std::string out = "\"";
        for (const char c : field)
        {
            if (c == '"')
            {
                out += '"';
            }
            out += c;
        }
        out += '"';
        return out;
    }

    void write_csv_row(std::ostream& out, const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            if (i)
            {
                out << ',';
            }
            out << csv_escape(fields[i]);
        }
        out << '\n';
    }

    CsvTable parse_csv(std::string_view text)
    {
        std::vector<std::vector<std::string>> records;
        std::vector<std::string> record;
        std::string field;
        bool quoted = false;
        bool any = false;
        for (std::size_t i = 0; i < text.size(); ++i)
        {
            const char c = text[i];
            if (quoted)
            {
                if (c == '"')
                {
                    if (i + 1 < text.size() && text[i + 1] == '"')
                    {
                        field += '"';
                        ++i;
                    }
                    else
                    {
                        quoted = false;
                    }
                }
                else
                {
                    field += c;
                }
                continue;
            }
            if (c == '"')
            {
                quoted = true;
                any = true;
            }
            else if (c == ',')
            {
                record.push_back(std::move(field));
                field.clear();
                any = true;
            }
            else if (c == '\n')
            {
                record.push_back(std::move(field));
                field.clear();
                records.push_back(std::move(record));
                record.clear();
                any = false;
            }
            else if (c != '\r')
            {
                field += c;
                any = true;
            }
        }
        if (quoted)
        {
            throw ConfigError("unterminated quoted CSV field");
        }
        if (any)
        {
            record.push_back(std::move(field));
            records.push_back(std::move(record));
        }

        CsvTable table;
        if (records.empty())
        {
            return table;
        }
        table.header = std::move(records.front());
        for (std::size_t r = 1; r < records.size(); ++r)
        {
            if (records[r].size() != table.header.size())
            {
                throw ConfigError("CSV row " + std::to_string(r + 1) + " has " +
                                  std::to_string(records[r].size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(records[r]));
        }
        return table;
    }

    CsvTable read_csv(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ConfigError("cannot read " + path.string());
        }
        std::stringstream text;
        text << in.rdbuf();
        return parse_csv(text.str());
    }
} // namespace rlb::harness
