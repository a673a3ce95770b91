#include "rlb/harness/config.hpp"

#include "rlb/errors.hpp"
#include "rlb/ini.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rlb::harness
{
    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t");
            if (first == std::string_view::npos)
            {
                return {};
            }
            const auto last = s.find_last_not_of(" \t");
            return std::string(s.substr(first, last - first + 1));
        }

        std::vector<std::string> split(std::string_view text)
        {
            std::vector<std::string> out;
            std::string item;
            std::istringstream in{std::string(text)};
            while (std::getline(in, item, ','))
            {
                item = trim(item);
                if (!item.empty())
                {
                    out.push_back(item);
                }
            }
            return out;
        }

        // Every accepted key, by section.
        const std::map<std::string, std::set<std::string>>& schema()
        {
            static const std::map<std::string, std::set<std::string>> keys{
                {"topology", {"preset", "lbs", "processors", "caps"}},
                {"traffic", {"rate", "distribution", "mean"}},
                {"policy", {"name", "reward", "reward_literal", "tie_break"}},
                {"schedule", {"episodes", "step_interval", "first_episode_duration", "episode_increment"}},
                {"agent",
                 {"hidden", "batch_size", "buffer_size", "learning_rate", "gamma", "tau", "initial_alpha",
                  "guiding_actor_target", "observe_duration", "mode", "load_checkpoints"}},
                {"run", {"seeds", "load_scale", "out"}},
                {"sweep", {"rates", "policies", "seeds"}},
            };
            return keys;
        }

        class Reader
        {
        public:
            explicit Reader(const IniDocument& doc) : doc_(doc) {}

            std::optional<std::string> text(const std::string& key) const
            {
                if (auto e = doc_.find(key))
                {
                    return e->value;
                }
                return std::nullopt;
            }

            [[noreturn]] void fail(const std::string& key, const std::string& why) const
            {
                const auto e = doc_.find(key);
                const std::string where = e ? "line " + std::to_string(e->line) + ": " : std::string();
                throw ConfigError(where + key + ": " + why);
            }

            std::optional<double> number(const std::string& key) const
            {
                auto t = text(key);
                if (!t)
                {
                    return std::nullopt;
                }
                try
                {
                    std::size_t used = 0;
                    const double v = std::stod(*t, &used);
                    if (used != t->size() || !std::isfinite(v))
                    {
                        fail(key, "expected a number, got '" + *t + "'");
                    }
                    return v;
                }
                catch (const std::logic_error&)
                {
                    fail(key, "expected a number, got '" + *t + "'");
                }
            }

            std::optional<long long> integer(const std::string& key) const
            {
                auto t = text(key);
                if (!t)
                {
                    return std::nullopt;
                }
                try
                {
                    std::size_t used = 0;
                    const long long v = std::stoll(*t, &used);
                    if (used != t->size())
                    {
                        fail(key, "expected an integer, got '" + *t + "'");
                    }
                    return v;
                }
                catch (const std::logic_error&)
                {
                    fail(key, "expected an integer, got '" + *t + "'");
                }
            }

            std::optional<bool> boolean(const std::string& key) const
            {
                auto t = text(key);
                if (!t)
                {
                    return std::nullopt;
                }
                if (*t == "true" || *t == "yes" || *t == "1")
                {
                    return true;
                }
                if (*t == "false" || *t == "no" || *t == "0")
                {
                    return false;
                }
                fail(key, "expected true or false, got '" + *t + "'");
            }

            std::optional<std::vector<int>> int_list(const std::string& key) const
            {
                auto t = text(key);
                if (!t)
                {
                    return std::nullopt;
                }
                std::vector<int> out;
                for (const auto& item : split(*t))
                {
                    try
                    {
                        std::size_t used = 0;
                        out.push_back(std::stoi(item, &used));
                        if (used != item.size())
                        {
                            fail(key, "expected integers, got '" + item + "'");
                        }
                    }
                    catch (const std::logic_error&)
                    {
                        fail(key, "expected integers, got '" + item + "'");
                    }
                }
                if (out.empty())
                {
                    fail(key, "empty list");
                }
                return out;
            }

            template <typename T, typename Parse>
            std::optional<T> parsed(const std::string& key, Parse parse) const
            {
                auto t = text(key);
                if (!t)
                {
                    return std::nullopt;
                }
                try
                {
                    return parse(*t);
                }
                catch (const ConfigError& e)
                {
                    fail(key, e.what());
                }
            }

        private:
            const IniDocument& doc_;
        };

        std::string join_ints(const std::vector<int>& v)
        {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                out += (i ? ", " : "") + std::to_string(v[i]);
            }
            return out;
        }
    } // namespace

    double ExperimentConfig::episode_duration(int index) const
    {
        return first_episode_duration + episode_increment * static_cast<double>(index);
    }

    std::vector<std::string> preset_names() { return {"1lb-2s", "1lb-4s", "2lb-4s", "1lb-8s", "2lb-8s"}; }

    sim::Topology preset_topology(std::string_view name)
    {
        auto build = [](int lbs, int servers) {
            sim::Topology t;
            t.lbs = lbs;
            for (int j = 0; j < servers; ++j)
            {
                const int p = j < servers / 2 ? 4 : 2;
                t.servers.push_back({p, 2 * p});
            }
            return t;
        };
        if (name == "1lb-2s")
        {
            return build(1, 2);
        }
        if (name == "1lb-4s")
        {
            return build(1, 4);
        }
        if (name == "2lb-4s")
        {
            return build(2, 4);
        }
        if (name == "1lb-8s")
        {
            return build(1, 8);
        }
        if (name == "2lb-8s")
        {
            return build(2, 8);
        }
        throw ConfigError("unknown topology preset '" + std::string(name) +
                          "' (expected 1lb-2s | 1lb-4s | 2lb-4s | 1lb-8s | 2lb-8s)");
    }

    PolicyChoice parse_policy_choice(std::string_view name)
    {
        if (name == "rlb-sac-j")
        {
            return {policy::PolicyKind::rlb_sac, metrics::FairnessIndex::jain};
        }
        if (name == "rlb-sac-g")
        {
            return {policy::PolicyKind::rlb_sac, metrics::FairnessIndex::g};
        }
        if (name == "rlb-sac-b")
        {
            return {policy::PolicyKind::rlb_sac, metrics::FairnessIndex::bossaer};
        }
        return {policy::parse_policy(name), std::nullopt};
    }

    std::vector<double> parse_double_list(std::string_view text, std::string_view field)
    {
        std::vector<double> out;
        for (const auto& item : split(text))
        {
            try
            {
                std::size_t used = 0;
                out.push_back(std::stod(item, &used));
                if (used != item.size())
                {
                    throw std::invalid_argument(item);
                }
            }
            catch (const std::logic_error&)
            {
                throw ConfigError(std::string(field) + ": expected numbers, got '" + item + "'");
            }
        }
        if (out.empty())
        {
            throw ConfigError(std::string(field) + ": empty list");
        }
        return out;
    }

    std::vector<std::uint64_t> parse_seed_list(std::string_view text, std::string_view field)
    {
        std::vector<std::uint64_t> out;
        for (const auto& item : split(text))
        {
            try
            {
                std::size_t used = 0;
                out.push_back(std::stoull(item, &used));
                if (used != item.size() || item.front() == '-')
                {
                    throw std::invalid_argument(item);
                }
            }
            catch (const std::logic_error&)
            {
                throw ConfigError(std::string(field) + ": expected nonnegative integers, got '" + item + "'");
            }
        }
        if (out.empty())
        {
            throw ConfigError(std::string(field) + ": empty list");
        }
        return out;
    }

    std::vector<std::string> parse_name_list(std::string_view text) { return split(text); }

    ExperimentConfig validate_config(std::string_view text)
    {
        const IniDocument doc = IniDocument::parse(text);
        for (const auto& section : doc.sections())
        {
            const auto it = schema().find(section);
            if (it == schema().end())
            {
                const auto keys = doc.keys_in(section);
                const auto line = keys.empty() ? std::optional<IniDocument::Entry>{}
                                               : doc.find(section + "." + keys.front());
                throw ConfigError((line ? "line " + std::to_string(line->line) + ": " : std::string()) +
                                  "unknown section [" + section + "]");
            }
            for (const auto& key : doc.keys_in(section))
            {
                if (!it->second.contains(key))
                {
                    throw ConfigError("line " + std::to_string(doc.find(section + "." + key)->line) +
                                      ": unknown key '" + key + "' in [" + section + "]");
                }
            }
        }

        const Reader r(doc);
        ExperimentConfig cfg;

        // topology
        const auto preset = r.text("topology.preset");
        const auto processors = r.int_list("topology.processors");
        if (!preset && !processors)
        {
            throw ConfigError("topology missing: set [topology] preset or processors");
        }
        if (preset)
        {
            cfg.preset = *preset;
            cfg.topology = *r.parsed<sim::Topology>("topology.preset",
                                                   [](const std::string& s) { return preset_topology(s); });
        }
        if (processors)
        {
            cfg.preset.clear();
            cfg.topology.servers.clear();
            for (const int p : *processors)
            {
                cfg.topology.servers.push_back({p, 2 * p});
            }
        }
        if (auto lbs = r.integer("topology.lbs"))
        {
            cfg.topology.lbs = static_cast<int>(*lbs);
            if (preset && !processors)
            {
                cfg.preset.clear();
            }
        }
        if (auto caps = r.int_list("topology.caps"))
        {
            if (caps->size() != cfg.topology.servers.size())
            {
                r.fail("topology.caps", "needs one entry per server (" +
                                            std::to_string(cfg.topology.servers.size()) + ")");
            }
            for (std::size_t j = 0; j < caps->size(); ++j)
            {
                cfg.topology.servers[j].p_hat = (*caps)[j];
            }
            cfg.preset.clear();
        }
        try
        {
            cfg.topology.validate();
        }
        catch (const ConfigError& e)
        {
            const auto key = doc.find("topology.caps") ? "topology.caps" : "topology.processors";
            r.fail(key, e.what());
        }

        // traffic
        if (auto rate = r.number("traffic.rate"))
        {
            cfg.traffic.rate_fraction = *rate;
        }
        if (!(cfg.traffic.rate_fraction > 0.0))
        {
            r.fail("traffic.rate", "must be > 0");
        }
        if (cfg.traffic.overloaded())
        {
            cfg.warnings.push_back("traffic.rate = " + format_double(cfg.traffic.rate_fraction) +
                                   " exceeds 1: arrivals outpace total service capacity (overload)");
        }
        const std::string dist = r.text("traffic.distribution").value_or("identical");
        const auto mean = r.number("traffic.mean");
        if (dist == "identical")
        {
            cfg.traffic.distribution = traffic::Identical{mean.value_or(0.1)};
        }
        else if (dist == "exponential")
        {
            cfg.traffic.distribution = traffic::Exponential{mean.value_or(0.2)};
        }
        else
        {
            r.fail("traffic.distribution", "expected identical or exponential, got '" + dist + "'");
        }
        if (mean && !(*mean > 0.0))
        {
            r.fail("traffic.mean", "must be > 0");
        }

        // policy
        if (r.text("policy.name"))
        {
            const PolicyChoice choice =
                *r.parsed<PolicyChoice>("policy.name", [](const std::string& s) { return parse_policy_choice(s); });
            cfg.policy = choice.kind;
            if (choice.reward)
            {
                cfg.reward_index = *choice.reward;
            }
        }
        if (auto reward = r.parsed<metrics::FairnessIndex>(
                "policy.reward", [](const std::string& s) { return metrics::parse_fairness_index(s); }))
        {
            cfg.reward_index = *reward;
        }
        if (auto literal = r.boolean("policy.reward_literal"))
        {
            cfg.reward_sign = *literal ? metrics::RewardSign::literal : metrics::RewardSign::fairness_minus_one;
        }
        if (auto tie = r.text("policy.tie_break"))
        {
            if (*tie == "lowest")
            {
                cfg.tie_break = policy::TieBreak::lowest_index;
            }
            else if (*tie == "random")
            {
                cfg.tie_break = policy::TieBreak::random;
            }
            else
            {
                r.fail("policy.tie_break", "expected lowest or random, got '" + *tie + "'");
            }
        }

        // schedule
        if (auto episodes = r.integer("schedule.episodes"))
        {
            if (*episodes < 1)
            {
                r.fail("schedule.episodes", "must be >= 1");
            }
            cfg.episodes = static_cast<int>(*episodes);
        }
        if (auto v = r.number("schedule.step_interval"))
        {
            if (!(*v > 0.0))
            {
                r.fail("schedule.step_interval", "must be > 0");
            }
            cfg.step_interval = *v;
        }
        if (auto v = r.number("schedule.first_episode_duration"))
        {
            if (!(*v > 0.0))
            {
                r.fail("schedule.first_episode_duration", "must be > 0");
            }
            cfg.first_episode_duration = *v;
        }
        if (auto v = r.number("schedule.episode_increment"))
        {
            if (*v < 0.0)
            {
                r.fail("schedule.episode_increment", "must be >= 0");
            }
            cfg.episode_increment = *v;
        }

        // agent
        AgentSettings& a = cfg.agent;
        if (auto v = r.integer("agent.hidden"))
        {
            if (*v < 1)
            {
                r.fail("agent.hidden", "must be >= 1");
            }
            a.hidden = static_cast<int>(*v);
        }
        if (auto v = r.integer("agent.batch_size"))
        {
            if (*v < 1)
            {
                r.fail("agent.batch_size", "must be >= 1");
            }
            a.batch_size = static_cast<std::size_t>(*v);
        }
        if (auto v = r.integer("agent.buffer_size"))
        {
            if (*v < 1)
            {
                r.fail("agent.buffer_size", "must be >= 1");
            }
            a.buffer_size = static_cast<std::size_t>(*v);
        }
        if (auto v = r.number("agent.learning_rate"))
        {
            if (!(*v > 0.0))
            {
                r.fail("agent.learning_rate", "must be > 0");
            }
            a.hyper.learning_rate = *v;
        }
        if (auto v = r.number("agent.gamma"))
        {
            if (!(*v >= 0.0 && *v < 1.0))
            {
                r.fail("agent.gamma", "must lie in [0, 1)");
            }
            a.hyper.gamma = *v;
        }
        if (auto v = r.number("agent.tau"))
        {
            if (!(*v >= 0.0 && *v <= 1.0))
            {
                r.fail("agent.tau", "must lie in [0, 1]");
            }
            a.hyper.tau = *v;
        }
        if (auto v = r.number("agent.initial_alpha"))
        {
            if (!(*v > 0.0))
            {
                r.fail("agent.initial_alpha", "must be > 0");
            }
            a.hyper.initial_alpha = *v;
        }
        if (auto v = r.boolean("agent.guiding_actor_target"))
        {
            a.hyper.guiding_actor_target = *v;
        }
        if (auto v = r.boolean("agent.observe_duration"))
        {
            a.observe_duration = *v;
        }
        if (auto mode = r.text("agent.mode"))
        {
            if (*mode == "train")
            {
                a.evaluation = false;
            }
            else if (*mode == "eval")
            {
                a.evaluation = true;
            }
            else
            {
                r.fail("agent.mode", "expected train or eval, got '" + *mode + "'");
            }
        }
        if (auto dir = r.text("agent.load_checkpoints"))
        {
            a.load_checkpoints = *dir;
        }

        // run
        if (auto seeds = r.parsed<std::vector<std::uint64_t>>(
                "run.seeds", [](const std::string& s) { return parse_seed_list(s, "seeds"); }))
        {
            cfg.seeds = *seeds;
        }
        if (auto scale = r.text("run.load_scale"))
        {
            if (*scale == "processors")
            {
                cfg.load_scale = sim::LoadScale::processors;
            }
            else if (*scale == "unit")
            {
                cfg.load_scale = sim::LoadScale::unit;
            }
            else
            {
                r.fail("run.load_scale", "expected processors or unit, got '" + *scale + "'");
            }
        }
        if (auto out = r.text("run.out"))
        {
            cfg.output_dir = *out;
        }

        // sweep
        if (auto v = r.parsed<std::vector<double>>(
                "sweep.rates", [](const std::string& s) { return parse_double_list(s, "rates"); }))
        {
            cfg.sweep.rates = *v;
        }
        if (auto v = r.text("sweep.policies"))
        {
            cfg.sweep.policies = parse_name_list(*v);
            for (const auto& p : cfg.sweep.policies)
            {
                r.parsed<PolicyChoice>("sweep.policies", [&](const std::string&) { return parse_policy_choice(p); });
            }
        }
        if (auto v = r.parsed<std::vector<std::uint64_t>>(
                "sweep.seeds", [](const std::string& s) { return parse_seed_list(s, "seeds"); }))
        {
            cfg.sweep.seeds = *v;
        }

        if (cfg.policy != policy::PolicyKind::rlb_sac)
        {
            if (doc.has_section("agent"))
            {
                cfg.warnings.push_back("[agent] settings are ignored by policy " +
                                       std::string(policy::to_string(cfg.policy)));
            }
            if (doc.find("policy.reward") || doc.find("policy.reward_literal"))
            {
                cfg.warnings.push_back("reward settings are ignored by policy " +
                                       std::string(policy::to_string(cfg.policy)));
            }
        }
        return cfg;
    }

    ExperimentConfig load_config(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot read config file " + path.string());
        }
        std::stringstream text;
        text << in.rdbuf();
        try
        {
            return validate_config(text.str());
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    std::string to_config_text(const ExperimentConfig& c)
    {
        IniDocument doc;
        std::vector<int> procs;
        std::vector<int> caps;
        for (const auto& s : c.topology.servers)
        {
            procs.push_back(s.p);
            caps.push_back(s.p_hat);
        }
        doc.set("topology", "lbs", std::to_string(c.topology.lbs));
        doc.set("topology", "processors", join_ints(procs));
        doc.set("topology", "caps", join_ints(caps));

        doc.set("traffic", "rate", format_double(c.traffic.rate_fraction));
        if (const auto* id = std::get_if<traffic::Identical>(&c.traffic.distribution))
        {
            doc.set("traffic", "distribution", "identical");
            doc.set("traffic", "mean", format_double(id->workload));
        }
        else
        {
            doc.set("traffic", "distribution", "exponential");
            doc.set("traffic", "mean", format_double(std::get<traffic::Exponential>(c.traffic.distribution).mean));
        }

        doc.set("policy", "name", std::string(policy::to_string(c.policy)));
        doc.set("policy", "reward", std::string(metrics::to_string(c.reward_index)));
        doc.set("policy", "reward_literal", c.reward_sign == metrics::RewardSign::literal ? "true" : "false");
        doc.set("policy", "tie_break", c.tie_break == policy::TieBreak::random ? "random" : "lowest");

        doc.set("schedule", "episodes", std::to_string(c.episodes));
        doc.set("schedule", "step_interval", format_double(c.step_interval));
        doc.set("schedule", "first_episode_duration", format_double(c.first_episode_duration));
        doc.set("schedule", "episode_increment", format_double(c.episode_increment));

        if (c.policy == policy::PolicyKind::rlb_sac)
        {
            const AgentSettings& a = c.agent;
            doc.set("agent", "hidden", std::to_string(a.hidden));
            doc.set("agent", "batch_size", std::to_string(a.batch_size));
            doc.set("agent", "buffer_size", std::to_string(a.buffer_size));
            doc.set("agent", "learning_rate", format_double(a.hyper.learning_rate));
            doc.set("agent", "gamma", format_double(a.hyper.gamma));
            doc.set("agent", "tau", format_double(a.hyper.tau));
            doc.set("agent", "initial_alpha", format_double(a.hyper.initial_alpha));
            doc.set("agent", "guiding_actor_target", a.hyper.guiding_actor_target ? "true" : "false");
            doc.set("agent", "observe_duration", a.observe_duration ? "true" : "false");
            doc.set("agent", "mode", a.evaluation ? "eval" : "train");
            if (a.load_checkpoints)
            {
                doc.set("agent", "load_checkpoints", a.load_checkpoints->string());
            }
        }

        std::string seeds;
        for (std::size_t i = 0; i < c.seeds.size(); ++i)
        {
            seeds += (i ? ", " : "") + std::to_string(c.seeds[i]);
        }
        doc.set("run", "seeds", seeds);
        doc.set("run", "load_scale", c.load_scale == sim::LoadScale::unit ? "unit" : "processors");
        doc.set("run", "out", c.output_dir.string());

        if (!c.sweep.rates.empty() || !c.sweep.policies.empty() || !c.sweep.seeds.empty())
        {
            std::string rates;
            for (std::size_t i = 0; i < c.sweep.rates.size(); ++i)
            {
                rates += (i ? ", " : "") + format_double(c.sweep.rates[i]);
            }
            std::string policies;
            for (std::size_t i = 0; i < c.sweep.policies.size(); ++i)
            {
                policies += (i ? ", " : "") + c.sweep.policies[i];
            }
            std::string sweep_seeds;
            for (std::size_t i = 0; i < c.sweep.seeds.size(); ++i)
            {
                sweep_seeds += (i ? ", " : "") + std::to_string(c.sweep.seeds[i]);
            }
            if (!rates.empty())
            {
                doc.set("sweep", "rates", rates);
            }
            if (!policies.empty())
            {
                doc.set("sweep", "policies", policies);
            }
            if (!sweep_seeds.empty())
            {
                doc.set("sweep", "seeds", sweep_seeds);
            }
        }
        return doc.to_string();
    }
} // namespace rlb::harness
