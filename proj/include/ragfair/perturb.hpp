#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ragfair {

enum class Category { race, gender, sexual_orientation, age };

std::string to_string(Category c);
Category category_from_string(const std::string& name); // ConfigError on unknown

struct LexiconEntry {
    Category category = Category::race;
    std::string term;
};

// Category-structured demographic term list plus the prefix template.
// A valid lexicon covers all four categories, has no duplicate terms, and its
// template contains the {term} placeholder exactly once.
struct Lexicon {
    std::vector<LexiconEntry> entries;
    std::string prefix_template;

    void validate() const; // ConfigError describing the violation
};

// Parses and validates a lexicon TOML file: a `template` string plus one
// [[entry]] table per term. Errors name the offending line.
Lexicon load_lexicon(const std::string& path);

// One seed text with one demographic variant of it.
struct QueryPair {
    std::uint64_t pair_id = 0;
    std::uint64_t seed_id = 0;
    Category category = Category::race;
    std::string term;
    std::string original;
    std::string perturbed;
};

struct Seed {
    std::uint64_t seed_id = 0;
    std::string text;
};

// rendered template + " " + original.
std::string apply_perturbation(const std::string& original, const std::string& term,
                               const std::string& prefix_template);

// |seeds| x |lexicon.entries| pairs ordered by (seed_id, entry order), with
// sequential pair ids from 0. Deterministic.
std::vector<QueryPair> generate_pairs(const std::vector<Seed>& seeds, const Lexicon& lexicon);

std::vector<Seed> load_seeds(const std::string& path);      // JSONL id/text
std::vector<QueryPair> load_pairs(const std::string& path); // JSONL QueryPair rows
std::string pairs_to_jsonl(const std::vector<QueryPair>& pairs);

} // namespace ragfair
