#pragma once

// Misclassification analysis: extract wrong predictions, tag them with
// surface linguistic features, aggregate per category and compare runs.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xhate/corpus.hpp"

namespace xhate {

struct Lexicon {
    std::string name;
    std::string language;
    std::set<std::string> entries;  // normalized: lowercase, single-spaced

    static Lexicon from_entries(std::string name, std::string language,
                                const std::vector<std::string>& raw_entries);
    // One phrase per line, UTF-8, '#'-prefixed comment lines skipped.
    static Lexicon from_file(const std::string& path, std::string name,
                             std::string language);
};

struct FeatureTagSet {
    bool interrogative = false;   // final non-space char is '?'
    bool exclamatory = false;     // final non-space char is '!'
    bool conditional = false;     // contains a word-bounded conditional marker
    bool short_lt10_words = false;
    bool long_ge25_words = false;
    bool contains_numeral = false;
    bool ends_ellipsis = false;   // trailing "..." or U+2026
    bool ethnic_lexicon_hit = false;
    bool political_lexicon_hit = false;
    std::size_t word_count = 0;

    bool operator==(const FeatureTagSet&) const = default;
};

// The category keys used in reports, in a fixed order.
const std::vector<std::string>& feature_category_names();

std::vector<bool> category_flags(const FeatureTagSet& tags);

struct TaggerConfig {
    std::size_t short_word_limit = 10;  // short  <=> word_count < limit
    std::size_t long_word_limit = 25;   // long   <=> word_count >= limit
    std::map<std::string, std::set<std::string>> conditional_markers = {
        {"en", {"if"}},
        {"fr", {"si"}},
    };
};

struct LexiconSet {
    std::map<std::string, Lexicon> ethnic;     // keyed by language
    std::map<std::string, Lexicon> political;  // keyed by language

    // Loads <dir>/ethnic_<lang>.txt and <dir>/political_<lang>.txt for en/fr.
    static LexiconSet from_dir(const std::string& dir);
};

// True if the phrase occurs in the text with non-word characters (or the
// string edges) on both sides.
bool phrase_match(std::string_view text, std::string_view phrase);

FeatureTagSet tag_features(std::string_view text, const std::string& language,
                           const LexiconSet& lexicons, const TaggerConfig& config = {},
                           std::vector<std::string>* warnings = nullptr);

struct ErrorRecord {
    std::string id;
    std::string text;
    std::string language;
    int gold = 0;
    int predicted = 0;
    FeatureTagSet tags;
};

// Exactly the samples where gold != predicted, tagged.
std::vector<ErrorRecord> collect_errors(const std::vector<int>& predictions,
                                        const Corpus& corpus, const LexiconSet& lexicons,
                                        const TaggerConfig& config = {},
                                        std::vector<std::string>* warnings = nullptr);

struct ErrorReport {
    std::string run_id;
    std::string test_corpus_digest;
    std::size_t total_errors = 0;
    std::map<std::string, std::size_t> category_counts;
    std::size_t false_hateful = 0;   // gold 0, predicted 1
    std::size_t missed_hateful = 0;  // gold 1, predicted 0
    std::vector<ErrorRecord> records;
};

ErrorReport aggregate(const std::vector<ErrorRecord>& errors, std::string run_id,
                      std::string test_corpus_digest);

std::string error_report_to_json(const ErrorReport& report);
ErrorReport error_report_from_json(const std::string& text);

struct RunComparison {
    std::string run_a;
    std::string run_b;
    std::size_t errors_a = 0;
    std::size_t errors_b = 0;
    double reduction = 0.0;  // (errors_a - errors_b) / errors_a
    std::map<std::string, long> category_deltas;  // count_b - count_a
    std::vector<std::string> newly_misclassified;  // ids in b but not a
    std::vector<std::string> newly_correct;        // ids in a but not b
};

// Refuses to compare reports taken on different test corpora.
RunComparison compare(const ErrorReport& a, const ErrorReport& b);

std::string comparison_to_json(const RunComparison& c);
std::string comparison_to_table(const RunComparison& c);

}  // namespace xhate
