#include "xhate/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"
#include "xhate/text.hpp"
#include "xhate/util.hpp"

namespace xhate {

using ordered_json = nlohmann::ordered_json;

std::string_view source_name(Source s) {
    switch (s) {
        case Source::MLMA: return "mlma";
        case Source::CONAN: return "conan";
        case Source::SYNTHETIC: return "synthetic";
    }
    return "mlma";
}

Source source_from_name(std::string_view name) {
    if (name == "mlma") return Source::MLMA;
    if (name == "conan") return Source::CONAN;
    if (name == "synthetic") return Source::SYNTHETIC;
    throw DataError("unknown sample source: " + std::string(name));
}

std::uint64_t Corpus::digest() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& s : samples) {
        h = fnv1a64(s.id.data(), s.id.size(), h);
        h = fnv1a64("\x1f", 1, h);
        h = fnv1a64(s.text.data(), s.text.size(), h);
        h = fnv1a64("\x1f", 1, h);
        h = fnv1a64(s.language.data(), s.language.size(), h);
        const char lab = static_cast<char>('0' + s.label);
        h = fnv1a64(&lab, 1, h);
        auto name = source_name(s.source);
        h = fnv1a64(name.data(), name.size(), h);
        h = fnv1a64("\x1e", 1, h);
    }
    return h;
}

// --- parsing ---------------------------------------------------------------

namespace {

std::size_t find_column(const Table& table, const std::string& name) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == name) return i;
    }
    throw SchemaError("missing column '" + name + "' in tabular input");
}

std::string cell(const std::vector<std::string>& row, std::size_t idx) {
    return idx < row.size() ? row[idx] : std::string();
}

bool blank(std::string_view s) {
    for (char c : s) {
        if (!is_space_cp(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 0x20);
    }
    return out;
}

}  // namespace

std::vector<RawMlmaRecord> parse_mlma(const Table& rows, const MlmaColumnMap& columns,
                                      const std::string& tag_separator,
                                      const std::set<std::string>& language_filter,
                                      const std::string& default_language,
                                      std::vector<RowIssue>* issues) {
    if (tag_separator.empty()) throw ConfigError("tag separator must be non-empty");
    const std::size_t text_col = find_column(rows, columns.text);
    const std::size_t labels_col = find_column(rows, columns.labels);
    const bool has_id = !columns.id.empty();
    const bool has_lang = !columns.language.empty();
    const std::size_t id_col = has_id ? find_column(rows, columns.id) : 0;
    const std::size_t lang_col = has_lang ? find_column(rows, columns.language) : 0;

    std::vector<RawMlmaRecord> out;
    out.reserve(rows.rows.size());
    for (std::size_t r = 0; r < rows.rows.size(); ++r) {
        const auto& row = rows.rows[r];
        const std::size_t rownum = r + 1;
        RawMlmaRecord rec;
        rec.language = has_lang ? cell(row, lang_col) : default_language;
        if (!language_filter.empty() && !language_filter.count(rec.language)) continue;

        rec.text = cell(row, text_col);
        if (blank(rec.text)) {
            if (issues) issues->push_back({rownum, "empty text cell"});
            continue;
        }
        const std::string tags_cell = cell(row, labels_col);
        std::size_t pos = 0;
        while (pos <= tags_cell.size()) {
            std::size_t next = tags_cell.find(tag_separator, pos);
            std::string piece = tags_cell.substr(
                pos, next == std::string::npos ? std::string::npos : next - pos);
            if (!blank(piece)) rec.label_tags.insert(piece);
            if (next == std::string::npos) break;
            pos = next + tag_separator.size();
        }
        if (rec.label_tags.empty()) {
            if (issues) issues->push_back({rownum, "empty label tags"});
            continue;
        }
        rec.id = has_id ? cell(row, id_col) : std::string();
        if (rec.id.empty()) {
            rec.id = "mlma-" + rec.language + "-r" + std::to_string(rownum);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

int binarize_mlma_label(const std::set<std::string>& tags) {
    if (tags.empty()) throw DataError("cannot binarize an empty tag set");
    if (tags.size() == 1 && ascii_lower(*tags.begin()) == "normal") return 0;
    return 1;
}

std::vector<TextSample> mlma_to_samples(const std::vector<RawMlmaRecord>& records) {
    std::vector<TextSample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        TextSample s;
        s.id = rec.id;
        s.text = rec.text;
        s.language = rec.language;
        s.label = binarize_mlma_label(rec.label_tags);
        s.source = Source::MLMA;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RawConanRecord> conan_records_from_json(const std::string& json_text,
                                                    const ConanFieldMap& fields,
                                                    std::vector<RowIssue>* issues) {
    using json = nlohmann::json;
    std::vector<json> objects;

    std::size_t first = json_text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && json_text[first] == '[') {
        json arr = json::parse(json_text);
        for (auto& obj : arr) objects.push_back(std::move(obj));
    } else {
        std::istringstream ss(json_text);
        std::string line;
        while (std::getline(ss, line)) {
            if (blank(line)) continue;
            objects.push_back(json::parse(line));
        }
    }

    std::vector<RawConanRecord> out;
    out.reserve(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& obj = objects[i];
        if (!obj.contains(fields.hate_text)) {
            throw SchemaError("conan record " + std::to_string(i) +
                              " lacks hate-text field '" + fields.hate_text + "'");
        }
        RawConanRecord rec;
        rec.hate_text = obj.at(fields.hate_text).get<std::string>();
        if (obj.contains(fields.language)) {
            rec.language = obj.at(fields.language).get<std::string>();
        }
        if (blank(rec.hate_text)) {
            if (issues) issues->push_back({i + 1, "empty hate text"});
            rec.hate_text.clear();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<TextSample> parse_conan(const std::vector<RawConanRecord>& records,
                                    const std::set<std::string>& language_filter,
                                    std::string_view id_prefix) {
    std::vector<TextSample> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.hate_text.empty()) continue;
        if (!language_filter.empty() && !language_filter.count(rec.language)) continue;
        TextSample s;
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%04zu", i);
        s.id = std::string(id_prefix) + "-" + idx;
        s.text = rec.hate_text;
        s.language = rec.language;
        s.label = 1;
        s.source = Source::CONAN;
        out.push_back(std::move(s));
    }
    return out;
}

// --- normalization and filtering --------------------------------------------

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = lower_codepoint(utf8_decode(text, i));
        if (is_space_cp(cp)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        utf8_append(out, cp);
    }
    return out;
}

bool should_discard(std::string_view text) {
    std::uint32_t prev = 0;
    std::size_t i = 0;
    bool at_start = true;
    while (i < text.size()) {
        std::uint32_t cp = utf8_decode(text, i);
        if ((cp == '#' || cp == '@') && (at_start || is_space_cp(prev))) {
            std::size_t j = i;
            if (j < text.size()) {
                std::uint32_t next = utf8_decode(text, j);
                if (is_word_cp(next)) return true;
            }
        }
        prev = cp;
        at_start = false;
    }
    return false;
}

std::vector<TextSample> prepare_samples(std::vector<TextSample> samples,
                                        PrepareStats* stats) {
    std::vector<TextSample> out;
    out.reserve(samples.size());
    for (auto& s : samples) {
        s.text = normalize(s.text);
        if (s.text.empty()) {
            if (stats) ++stats->dropped_empty;
            continue;
        }
        if (should_discard(s.text)) {
            if (stats) ++stats->dropped_hashtag_or_mention;
            continue;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TextSample> deduplicate(std::vector<TextSample> samples,
                                    DedupStats* stats) {
    std::vector<TextSample> out;
    out.reserve(samples.size());
    std::unordered_map<std::string_view, std::size_t> first_by_text;
    for (auto& s : samples) {
        auto it = first_by_text.find(s.text);
        if (it == first_by_text.end()) {
            out.push_back(std::move(s));
            first_by_text.emplace(out.back().text, out.size() - 1);
        } else {
            if (stats) {
                ++stats->dropped;
                if (out[it->second].label != s.label) ++stats->label_conflicts;
            }
        }
    }
    return out;
}

// --- corpus assembly ---------------------------------------------------------

namespace {

void rebuild_language_mix(Corpus& c) {
    c.language_mix.clear();
    for (const auto& s : c.samples) ++c.language_mix[s.language];
}

void ensure_unique_ids(std::vector<TextSample>& samples) {
    std::unordered_set<std::string> seen;
    seen.reserve(samples.size());
    for (auto& s : samples) {
        if (seen.insert(s.id).second) continue;
        std::string base = std::string(source_name(s.source)) + ":" + s.id;
        std::string candidate = base;
        for (int k = 2; !seen.insert(candidate).second; ++k) {
            candidate = base + "#" + std::to_string(k);
        }
        s.id = candidate;
    }
}

}  // namespace

Corpus make_corpus(std::vector<TextSample> samples, std::vector<std::string> provenance) {
    Corpus c;
    c.samples = std::move(samples);
    ensure_unique_ids(c.samples);
    c.provenance = std::move(provenance);
    rebuild_language_mix(c);
    return c;
}

Corpus merge(const std::vector<Corpus>& corpora, DedupStats* stats) {
    std::vector<TextSample> all;
    std::vector<std::string> provenance;
    for (const auto& c : corpora) {
        all.insert(all.end(), c.samples.begin(), c.samples.end());
        provenance.insert(provenance.end(), c.provenance.begin(), c.provenance.end());
    }
    ensure_unique_ids(all);
    all = deduplicate(std::move(all), stats);
    Corpus merged;
    merged.samples = std::move(all);
    merged.provenance = std::move(provenance);
    rebuild_language_mix(merged);
    return merged;
}

std::pair<Corpus, Corpus> split_train_val(const Corpus& corpus, const SplitSpec& spec) {
    if (spec.train_parts <= 0 || spec.val_parts <= 0) {
        throw ConfigError("split parts must both be positive");
    }
    if (corpus.empty()) throw DataError("cannot split an empty corpus");
    const std::size_t parts =
        static_cast<std::size_t>(spec.train_parts) + static_cast<std::size_t>(spec.val_parts);
    if (corpus.size() < parts) {
        throw DataError("corpus of " + std::to_string(corpus.size()) +
                        " samples is smaller than " + std::to_string(parts) + " split parts");
    }

    // Strata are label values in stratified mode, a single bucket otherwise.
    std::vector<std::vector<std::size_t>> strata;
    if (spec.stratified) {
        strata.assign(2, {});
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            strata[static_cast<std::size_t>(corpus.samples[i].label)].push_back(i);
        }
        if (strata[0].empty() || strata[1].empty()) {
            throw DataError("stratified split requires both classes present");
        }
    } else {
        strata.assign(1, {});
        for (std::size_t i = 0; i < corpus.size(); ++i) strata[0].push_back(i);
    }

    const double train_fraction =
        static_cast<double>(spec.train_parts) / static_cast<double>(parts);
    std::vector<bool> in_train(corpus.size(), false);
    for (std::size_t stratum = 0; stratum < strata.size(); ++stratum) {
        auto& idx = strata[stratum];
        Rng rng(mix64(spec.seed ^ kGolden64) + stratum);
        rng.shuffle(idx);
        const double exact = static_cast<double>(idx.size()) * train_fraction;
        const auto n_train = static_cast<std::size_t>(std::floor(exact + 0.5));
        for (std::size_t k = 0; k < n_train && k < idx.size(); ++k) in_train[idx[k]] = true;
    }

    Corpus train, val;
    train.provenance = corpus.provenance;
    val.provenance = corpus.provenance;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (in_train[i] ? train : val).samples.push_back(corpus.samples[i]);
    }
    rebuild_language_mix(train);
    rebuild_language_mix(val);
    return {std::move(train), std::move(val)};
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = utf8_decode(text, i);
        if (is_space_cp(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

DatasetStats compute_stats(const Corpus& corpus, const TokenCounter& counter) {
    DatasetStats stats;
    stats.n_total = corpus.size();
    for (const auto& s : corpus.samples) {
        ++stats.n_per_class[static_cast<std::size_t>(s.label)];
        ++stats.n_per_language[s.language];
        ++stats.token_length_histogram[counter(s.text)];
    }
    return stats;
}

ClassWeights compute_class_weights(const DatasetStats& stats) {
    for (std::size_t c = 0; c < 2; ++c) {
        if (stats.n_per_class[c] == 0) {
            throw ConfigError("class " + std::to_string(c) +
                              " has no samples; disable class weighting for this corpus");
        }
    }
    const auto n = static_cast<double>(stats.n_total);
    ClassWeights w;
    w.w[0] = n / (2.0 * static_cast<double>(stats.n_per_class[0]));
    w.w[1] = n / (2.0 * static_cast<double>(stats.n_per_class[1]));
    return w;
}

// --- persistence -------------------------------------------------------------

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& s : corpus.samples) {
        ordered_json j;
        j["id"] = s.id;
        j["text"] = s.text;
        j["language"] = s.language;
        j["label"] = s.label;
        j["source"] = std::string(source_name(s.source));
        out += j.dump();
        out += '\n';
    }
    return out;
}

Corpus corpus_from_jsonl(const std::string& jsonl_text) {
    std::vector<TextSample> samples;
    std::istringstream ss(jsonl_text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (blank(line)) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        for (const char* key : {"id", "text", "language", "label", "source"}) {
            if (!j.contains(key)) {
                throw SchemaError("corpus jsonl line " + std::to_string(lineno) +
                                  " lacks key '" + key + "'");
            }
        }
        TextSample s;
        s.id = j.at("id").get<std::string>();
        s.text = j.at("text").get<std::string>();
        s.language = j.at("language").get<std::string>();
        s.label = j.at("label").get<int>();
        if (s.label != 0 && s.label != 1) {
            throw DataError("corpus jsonl line " + std::to_string(lineno) +
                            ": label must be 0 or 1");
        }
        s.source = source_from_name(j.at("source").get<std::string>());
        samples.push_back(std::move(s));
    }
    return make_corpus(std::move(samples),
                       {hex64(fnv1a64(jsonl_text.data(), jsonl_text.size()))});
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file " + path);
    out << corpus_to_jsonl(corpus);
}

Corpus read_corpus_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return corpus_from_jsonl(ss.str());
}

std::string stats_to_json(const DatasetStats& stats) {
    ordered_json j;
    j["n_total"] = stats.n_total;
    j["n_per_class"]["0"] = stats.n_per_class[0];
    j["n_per_class"]["1"] = stats.n_per_class[1];
    ordered_json langs = ordered_json::object();
    for (const auto& [lang, n] : stats.n_per_language) langs[lang] = n;
    j["n_per_language"] = langs;
    ordered_json hist = ordered_json::object();
    for (const auto& [len, n] : stats.token_length_histogram) {
        hist[std::to_string(len)] = n;
    }
    j["token_length_histogram"] = hist;
    return j.dump(2) + "\n";
}

}  // namespace xhate
