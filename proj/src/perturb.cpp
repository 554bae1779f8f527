#include "ragfair/perturb.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ragfair/errors.hpp"
#include "ragfair/jsonl.hpp"
#include "ragfair/minitoml.hpp"

namespace ragfair {
namespace {

constexpr std::string_view kPlaceholder = "{term}";

std::size_t placeholder_count(const std::string& tmpl) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = tmpl.find(kPlaceholder, pos)) != std::string::npos) {
        ++count;
        pos += kPlaceholder.size();
    }
    return count;
}

const std::map<std::string, Category>& category_names() {
    static const std::map<std::string, Category> names = {
        {"race", Category::race},
        {"gender", Category::gender},
        {"sexual_orientation", Category::sexual_orientation},
        {"age", Category::age},
    };
    return names;
}

} // namespace

std::string to_string(Category c) {
    switch (c) {
        case Category::race: return "race";
        case Category::gender: return "gender";
        case Category::sexual_orientation: return "sexual_orientation";
        case Category::age: return "age";
    }
    return "race";
}

Category category_from_string(const std::string& name) {
    const auto& names = category_names();
    const auto it = names.find(name);
    if (it == names.end())
        throw ConfigError("unknown category '" + name +
                          "' (expected race, gender, sexual_orientation, or age)");
    return it->second;
}

void Lexicon::validate() const {
    if (placeholder_count(prefix_template) != 1)
        throw ConfigError("lexicon template must contain {term} exactly once");
    if (entries.empty())
        throw ConfigError("lexicon has no entries");
    std::set<std::string> seen_terms;
    std::set<Category> seen_categories;
    for (const auto& e : entries) {
        if (e.term.empty())
            throw ConfigError("lexicon entry with empty term");
        if (!seen_terms.insert(e.term).second)
            throw ConfigError("duplicate lexicon term '" + e.term + "'");
        seen_categories.insert(e.category);
    }
    for (const auto& [name, cat] : category_names()) {
        if (!seen_categories.count(cat))
            throw ConfigError("lexicon missing category '" + name + "'");
    }
}

Lexicon load_lexicon(const std::string& path) {
    const auto doc = minitoml::parse_file(path);
    Lexicon lex;
    if (!doc.root.has("template"))
        throw ConfigError(path + ": missing top-level 'template' key");
    const auto& tmpl = doc.root.at("template");
    lex.prefix_template = tmpl.as_string();
    if (placeholder_count(lex.prefix_template) != 1)
        throw ConfigError(path + " line " + std::to_string(tmpl.line) +
                          ": template must contain {term} exactly once");

    const auto* entries = doc.find_array("entry");
    if (!entries || entries->empty())
        throw ConfigError(path + ": no [[entry]] tables");

    std::set<std::string> seen_terms;
    for (const auto& table : *entries) {
        LexiconEntry e;
        try {
            e.category = category_from_string(table.get_string("category"));
        } catch (const ConfigError& err) {
            throw ConfigError(path + " line " + std::to_string(table.line) + ": " + err.what());
        }
        e.term = table.get_string("term");
        if (!seen_terms.insert(e.term).second)
            throw ConfigError(path + " line " + std::to_string(table.line) +
                              ": duplicate term '" + e.term + "'");
        lex.entries.push_back(std::move(e));
    }
    try {
        lex.validate();
    } catch (const ConfigError& err) {
        throw ConfigError(path + ": " + err.what());
    }
    return lex;
}

std::string apply_perturbation(const std::string& original, const std::string& term,
                               const std::string& prefix_template) {
    std::string prefix = prefix_template;
    const std::size_t pos = prefix.find(kPlaceholder);
    if (pos == std::string::npos)
        throw ArgumentError("template is missing the {term} placeholder");
    prefix.replace(pos, kPlaceholder.size(), term);
    return prefix + " " + original;
}

std::vector<QueryPair> generate_pairs(const std::vector<Seed>& seeds, const Lexicon& lexicon) {
    if (seeds.empty())
        throw ArgumentError("generate_pairs: no seeds");
    lexicon.validate();

    std::vector<Seed> ordered = seeds;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Seed& a, const Seed& b) { return a.seed_id < b.seed_id; });

    std::vector<QueryPair> pairs;
    pairs.reserve(ordered.size() * lexicon.entries.size());
    std::uint64_t next_id = 0;
    for (const auto& seed : ordered) {
        for (const auto& entry : lexicon.entries) {
            QueryPair p;
            p.pair_id = next_id++;
            p.seed_id = seed.seed_id;
            p.category = entry.category;
            p.term = entry.term;
            p.original = seed.text;
            p.perturbed = apply_perturbation(seed.text, entry.term, lexicon.prefix_template);
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

std::vector<Seed> load_seeds(const std::string& path) {
    std::vector<Seed> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
        if (!j.contains("text") || !j["text"].is_string())
            throw ConfigError(path + " line " + std::to_string(line) + ": missing text field");
        Seed s;
        s.seed_id = j.contains("id") ? j["id"].get<std::uint64_t>()
                                     : static_cast<std::uint64_t>(line - 1);
        s.text = j["text"].get<std::string>();
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<QueryPair> load_pairs(const std::string& path) {
    std::vector<QueryPair> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
        for (const char* field : {"pair_id", "seed_id", "category", "term", "original", "perturbed"})
            if (!j.contains(field))
                throw ConfigError(path + " line " + std::to_string(line) + ": missing field " +
                                  field);
        QueryPair p;
        p.pair_id = j["pair_id"].get<std::uint64_t>();
        p.seed_id = j["seed_id"].get<std::uint64_t>();
        try {
            p.category = category_from_string(j["category"].get<std::string>());
        } catch (const ConfigError& err) {
            throw ConfigError(path + " line " + std::to_string(line) + ": " + err.what());
        }
        p.term = j["term"].get<std::string>();
        p.original = j["original"].get<std::string>();
        p.perturbed = j["perturbed"].get<std::string>();
        out.push_back(std::move(p));
    });
    return out;
}

std::string pairs_to_jsonl(const std::vector<QueryPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        nlohmann::json j{{"pair_id", p.pair_id},   {"seed_id", p.seed_id},
                         {"category", to_string(p.category)}, {"term", p.term},
                         {"original", p.original}, {"perturbed", p.perturbed}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace ragfair
