#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlb
{
    /// 17 significant digits: parses back to the identical double.
    std::string format_double(double v);

    /// Flat `key = value` text with `[section]` headers. `#` and `;` start
    /// comments. Keys are addressed as "section.key".
    class IniDocument
    {
    public:
        struct Entry
        {
            std::string value;
            int line = 0;
        };

        /// Throws ConfigError("line N: ...") on malformed lines or duplicate keys.
        static IniDocument parse(std::string_view text);

        void set(const std::string& section, const std::string& key, std::string value);
        std::optional<Entry> find(const std::string& dotted) const;
        bool has_section(const std::string& section) const;
        std::vector<std::string> keys_in(const std::string& section) const;
        std::vector<std::string> sections() const;

        /// Sections in insertion order, keys in insertion order.
        std::string to_string() const;

    private:
        struct Section
        {
            std::string name;
            std::vector<std::pair<std::string, Entry>> entries;
        };
        Section& section(const std::string& name);
        const Section* find_section(const std::string& name) const;

        std::vector<Section> sections_;
    };
} // namespace rlb
