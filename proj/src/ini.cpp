#include "rlb/ini.hpp"

#include "rlb/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace rlb
{
    std::string format_double(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
            {
                return {};
            }
            const auto last = s.find_last_not_of(" \t\r");
            return std::string(s.substr(first, last - first + 1));
        }

        std::string strip_comment(std::string_view s)
        {
            const auto pos = s.find_first_of("#;");
            return trim(pos == std::string_view::npos ? s : s.substr(0, pos));
        }
    } // namespace

    IniDocument IniDocument::parse(std::string_view text)
    {
        IniDocument doc;
        std::string current;
        int line_no = 0;
        std::istringstream in{std::string(text)};
        std::string raw;
        while (std::getline(in, raw))
        {
            ++line_no;
            const std::string line = strip_comment(raw);
            if (line.empty())
            {
                continue;
            }
            if (line.front() == '[')
            {
                if (line.back() != ']' || line.size() < 3)
                {
                    throw ConfigError("line " + std::to_string(line_no) + ": malformed section header '" +
                                      line + "'");
                }
                current = trim(std::string_view(line).substr(1, line.size() - 2));
                doc.section(current);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
            {
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                                  line + "'");
            }
            const std::string key = trim(std::string_view(line).substr(0, eq));
            const std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key.empty())
            {
                throw ConfigError("line " + std::to_string(line_no) + ": empty key");
            }
            Section& sec = doc.section(current);
            const auto dup = std::find_if(sec.entries.begin(), sec.entries.end(),
                                          [&](const auto& e) { return e.first == key; });
            if (dup != sec.entries.end())
            {
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                                  (current.empty() ? key : current + "." + key) + "' (first on line " +
                                  std::to_string(dup->second.line) + ")");
            }
            sec.entries.push_back({key, Entry{value, line_no}});
        }
        return doc;
    }

    IniDocument::Section& IniDocument::section(const std::string& name)
    {
        for (auto& s : sections_)
        {
            if (s.name == name)
            {
                return s;
            }
        }
        sections_.push_back(Section{name, {}});
        return sections_.back();
    }

    const IniDocument::Section* IniDocument::find_section(const std::string& name) const
    {
        for (const auto& s : sections_)
        {
            if (s.name == name)
            {
                return &s;
            }
        }
        return nullptr;
    }

    void IniDocument::set(const std::string& section_name, const std::string& key, std::string value)
    {
        Section& sec = section(section_name);
        for (auto& e : sec.entries)
        {
            if (e.first == key)
            {
                e.second.value = std::move(value);
                return;
            }
        }
        sec.entries.push_back({key, Entry{std::move(value), 0}});
    }

    std::optional<IniDocument::Entry> IniDocument::find(const std::string& dotted) const
    {
        const auto dot = dotted.rfind('.');
        const std::string sec_name = dot == std::string::npos ? std::string() : dotted.substr(0, dot);
        const std::string key = dot == std::string::npos ? dotted : dotted.substr(dot + 1);
        const Section* sec = find_section(sec_name);
        if (sec == nullptr)
        {
            return std::nullopt;
        }
        for (const auto& e : sec->entries)
        {
            if (e.first == key)
            {
                return e.second;
            }
        }
        return std::nullopt;
    }

    bool IniDocument::has_section(const std::string& name) const { return find_section(name) != nullptr; }

    std::vector<std::string> IniDocument::keys_in(const std::string& name) const
    {
        std::vector<std::string> out;
        if (const Section* sec = find_section(name))
        {
            for (const auto& e : sec->entries)
            {
                out.push_back(e.first);
            }
        }
        return out;
    }

    std::vector<std::string> IniDocument::sections() const
    {
        std::vector<std::string> out;
        for (const auto& s : sections_)
        {
            out.push_back(s.name);
        }
        return out;
    }

    std::string IniDocument::to_string() const
    {
        std::ostringstream out;
        bool first = true;
        for (const auto& s : sections_)
        {
            if (!first)
            {
                out << '\n';
            }
            first = false;
            if (!s.name.empty())
            {
                out << '[' << s.name << "]\n";
            }
            for (const auto& [key, entry] : s.entries)
            {
                out << key << " = " << entry.value << '\n';
            }
        }
        return out.str();
    }
} // namespace rlb
