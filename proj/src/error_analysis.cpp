#include "xhate/error_analysis.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"
#include "xhate/text.hpp"
#include "xhate/util.hpp"

namespace xhate {

using ordered_json = nlohmann::ordered_json;

Lexicon Lexicon::from_entries(std::string name, std::string language,
                              const std::vector<std::string>& raw_entries) {
    Lexicon lex;
    lex.name = std::move(name);
    lex.language = std::move(language);
    for (const auto& e : raw_entries) {
        std::string n = normalize(e);
        if (!n.empty()) lex.entries.insert(std::move(n));
    }
    return lex;
}

Lexicon Lexicon::from_file(const std::string& path, std::string name, std::string language) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open lexicon file " + path);
    std::vector<std::string> raw;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') continue;
        raw.push_back(line);
    }
    return from_entries(std::move(name), std::move(language), raw);
}

LexiconSet LexiconSet::from_dir(const std::string& dir) {
    LexiconSet set;
    for (const std::string lang : {"en", "fr"}) {
        set.ethnic[lang] =
            Lexicon::from_file(dir + "/ethnic_" + lang + ".txt", "ethnic", lang);
        set.political[lang] =
            Lexicon::from_file(dir + "/political_" + lang + ".txt", "political", lang);
    }
    return set;
}

const std::vector<std::string>& feature_category_names() {
    static const std::vector<std::string> names = {
        "interrogative",    "exclamatory",      "conditional",
        "short_lt10_words", "long_ge25_words",  "contains_numeral",
        "ends_ellipsis",    "ethnic_lexicon_hit", "political_lexicon_hit",
    };
    return names;
}

std::vector<bool> category_flags(const FeatureTagSet& t) {
    return {t.interrogative,    t.exclamatory,      t.conditional,
            t.short_lt10_words, t.long_ge25_words,  t.contains_numeral,
            t.ends_ellipsis,    t.ethnic_lexicon_hit, t.political_lexicon_hit};
}

namespace {

bool is_word_byte(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
           u == '_' || u >= 0x80;
}

std::string_view rstrip_spaces(std::string_view s) {
    while (!s.empty() && is_space_cp(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

bool phrase_match(std::string_view text, std::string_view phrase) {
    if (phrase.empty()) return false;
    std::size_t at = 0;
    while ((at = text.find(phrase, at)) != std::string_view::npos) {
        const bool left_ok = at == 0 || !is_word_byte(text[at - 1]);
        const std::size_t end = at + phrase.size();
        const bool right_ok = end == text.size() || !is_word_byte(text[end]);
        if (left_ok && right_ok) return true;
        ++at;
    }
    return false;
}

FeatureTagSet tag_features(std::string_view text, const std::string& language,
                           const LexiconSet& lexicons, const TaggerConfig& config,
                           std::vector<std::string>* warnings) {
    FeatureTagSet tags;
    const std::string_view stripped = rstrip_spaces(text);
    if (!stripped.empty()) {
        const char last = stripped.back();
        tags.interrogative = last == '?';
        tags.exclamatory = last == '!';
        tags.ends_ellipsis =
            stripped.ends_with("...") || stripped.ends_with("…");
    }
    tags.word_count = whitespace_token_count(text);
    tags.short_lt10_words = tags.word_count < config.short_word_limit;
    tags.long_ge25_words = tags.word_count >= config.long_word_limit;
    for (char c : text) {
        if (c >= '0' && c <= '9') {
            tags.contains_numeral = true;
            break;
        }
    }
    if (auto it = config.conditional_markers.find(language);
        it != config.conditional_markers.end()) {
        for (const auto& marker : it->second) {
            if (phrase_match(text, marker)) {
                tags.conditional = true;
                break;
            }
        }
    }
    const auto eth = lexicons.ethnic.find(language);
    const auto pol = lexicons.political.find(language);
    if (eth == lexicons.ethnic.end() && pol == lexicons.political.end()) {
        if (warnings) {
            warnings->push_back("no lexicons for language '" + language +
                                "'; lexicon categories left false");
        }
    }
    if (eth != lexicons.ethnic.end()) {
        for (const auto& phrase : eth->second.entries) {
            if (phrase_match(text, phrase)) {
                tags.ethnic_lexicon_hit = true;
                break;
            }
        }
    }
    if (pol != lexicons.political.end()) {
        for (const auto& phrase : pol->second.entries) {
            if (phrase_match(text, phrase)) {
                tags.political_lexicon_hit = true;
                break;
            }
        }
    }
    return tags;
}

std::vector<ErrorRecord> collect_errors(const std::vector<int>& predictions,
                                        const Corpus& corpus, const LexiconSet& lexicons,
                                        const TaggerConfig& config,
                                        std::vector<std::string>* warnings) {
    if (predictions.size() != corpus.size()) {
        throw DataError("collect_errors: predictions are not aligned with the corpus");
    }
    std::vector<ErrorRecord> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& s = corpus.samples[i];
        if (predictions[i] == s.label) continue;
        ErrorRecord rec;
        rec.id = s.id;
        rec.text = s.text;
        rec.language = s.language;
        rec.gold = s.label;
        rec.predicted = predictions[i];
        rec.tags = tag_features(s.text, s.language, lexicons, config, warnings);
        out.push_back(std::move(rec));
    }
    return out;
}

ErrorReport aggregate(const std::vector<ErrorRecord>& errors, std::string run_id,
                      std::string test_corpus_digest) {
    ErrorReport report;
    report.run_id = std::move(run_id);
    report.test_corpus_digest = std::move(test_corpus_digest);
    report.total_errors = errors.size();
    const auto& names = feature_category_names();
    for (const auto& n : names) report.category_counts[n] = 0;
    for (const auto& rec : errors) {
        const auto flags = category_flags(rec.tags);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (flags[i]) ++report.category_counts[names[i]];
        }
        if (rec.gold == 0) {
            ++report.false_hateful;
        } else {
            ++report.missed_hateful;
        }
    }
    report.records = errors;
    return report;
}

std::string error_report_to_json(const ErrorReport& report) {
    ordered_json j;
    j["run_id"] = report.run_id;
    j["test_corpus_digest"] = report.test_corpus_digest;
    j["total_errors"] = report.total_errors;
    j["false_hateful"] = report.false_hateful;
    j["missed_hateful"] = report.missed_hateful;
    ordered_json counts = ordered_json::object();
    for (const auto& name : feature_category_names()) {
        counts[name] = report.category_counts.count(name) ? report.category_counts.at(name) : 0;
    }
    j["category_counts"] = counts;
    ordered_json recs = ordered_json::array();
    for (const auto& rec : report.records) {
        ordered_json rj;
        rj["id"] = rec.id;
        rj["text"] = rec.text;
        rj["language"] = rec.language;
        rj["gold"] = rec.gold;
        rj["predicted"] = rec.predicted;
        const auto flags = category_flags(rec.tags);
        const auto& names = feature_category_names();
        ordered_json tj = ordered_json::object();
        for (std::size_t i = 0; i < names.size(); ++i) tj[names[i]] = static_cast<bool>(flags[i]);
        tj["word_count"] = rec.tags.word_count;
        rj["tags"] = tj;
        recs.push_back(rj);
    }
    j["records"] = recs;
    return j.dump(2) + "\n";
}

ErrorReport error_report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ErrorReport report;
    report.run_id = j.at("run_id").get<std::string>();
    report.test_corpus_digest = j.at("test_corpus_digest").get<std::string>();
    report.total_errors = j.at("total_errors").get<std::size_t>();
    report.false_hateful = j.at("false_hateful").get<std::size_t>();
    report.missed_hateful = j.at("missed_hateful").get<std::size_t>();
    for (const auto& [key, value] : j.at("category_counts").items()) {
        report.category_counts[key] = value.get<std::size_t>();
    }
    for (const auto& rj : j.at("records")) {
        ErrorRecord rec;
        rec.id = rj.at("id").get<std::string>();
        rec.text = rj.at("text").get<std::string>();
        rec.language = rj.at("language").get<std::string>();
        rec.gold = rj.at("gold").get<int>();
        rec.predicted = rj.at("predicted").get<int>();
        const auto& tj = rj.at("tags");
        rec.tags.interrogative = tj.at("interrogative").get<bool>();
        rec.tags.exclamatory = tj.at("exclamatory").get<bool>();
        rec.tags.conditional = tj.at("conditional").get<bool>();
        rec.tags.short_lt10_words = tj.at("short_lt10_words").get<bool>();
        rec.tags.long_ge25_words = tj.at("long_ge25_words").get<bool>();
        rec.tags.contains_numeral = tj.at("contains_numeral").get<bool>();
        rec.tags.ends_ellipsis = tj.at("ends_ellipsis").get<bool>();
        rec.tags.ethnic_lexicon_hit = tj.at("ethnic_lexicon_hit").get<bool>();
        rec.tags.political_lexicon_hit = tj.at("political_lexicon_hit").get<bool>();
        rec.tags.word_count = tj.at("word_count").get<std::size_t>();
        report.records.push_back(std::move(rec));
    }
    return report;
}

RunComparison compare(const ErrorReport& a, const ErrorReport& b) {
    if (a.test_corpus_digest != b.test_corpus_digest) {
        throw DataError("compare refused: reports were taken on different test corpora (" +
                        a.test_corpus_digest + " vs " + b.test_corpus_digest + ")");
    }
    RunComparison c;
    c.run_a = a.run_id;
    c.run_b = b.run_id;
    c.errors_a = a.total_errors;
    c.errors_b = b.total_errors;
    if (a.total_errors > 0) {
        c.reduction = (static_cast<double>(a.total_errors) - static_cast<double>(b.total_errors)) /
                      static_cast<double>(a.total_errors);
    }
    for (const auto& name : feature_category_names()) {
        const long ca = a.category_counts.count(name)
                            ? static_cast<long>(a.category_counts.at(name))
                            : 0;
        const long cb = b.category_counts.count(name)
                            ? static_cast<long>(b.category_counts.at(name))
                            : 0;
        c.category_deltas[name] = cb - ca;
    }
    std::set<std::string> ids_a, ids_b;
    for (const auto& r : a.records) ids_a.insert(r.id);
    for (const auto& r : b.records) ids_b.insert(r.id);
    for (const auto& id : ids_b) {
        if (!ids_a.count(id)) c.newly_misclassified.push_back(id);
    }
    for (const auto& id : ids_a) {
        if (!ids_b.count(id)) c.newly_correct.push_back(id);
    }
    return c;
}

std::string comparison_to_json(const RunComparison& c) {
    ordered_json j;
    j["run_a"] = c.run_a;
    j["run_b"] = c.run_b;
    j["errors_a"] = c.errors_a;
    j["errors_b"] = c.errors_b;
    j["reduction"] = c.reduction;
    ordered_json deltas = ordered_json::object();
    for (const auto& name : feature_category_names()) {
        deltas[name] = c.category_deltas.count(name) ? c.category_deltas.at(name) : 0;
    }
    j["category_deltas"] = deltas;
    j["newly_misclassified"] = c.newly_misclassified;
    j["newly_correct"] = c.newly_correct;
    return j.dump(2) + "\n";
}

std::string comparison_to_table(const RunComparison& c) {
    std::ostringstream ss;
    ss << "error comparison: " << c.run_a << " -> " << c.run_b << '\n';
    ss << "  errors: " << c.errors_a << " -> " << c.errors_b << "  (reduction "
       << format_double(c.reduction * 100.0) << "%)\n";
    ss << "  newly misclassified: " << c.newly_misclassified.size()
       << ", newly correct: " << c.newly_correct.size() << '\n';
    std::size_t width = 0;
    for (const auto& name : feature_category_names()) width = std::max(width, name.size());
    for (const auto& name : feature_category_names()) {
        const long delta = c.category_deltas.count(name) ? c.category_deltas.at(name) : 0;
        ss << "  " << name << std::string(width - name.size(), ' ') << "  "
           << (delta >= 0 ? "+" : "") << delta << '\n';
    }
    return ss.str();
}

}  // namespace xhate
