#pragma once

// Corpus preparation: ingest MLMA-style CSV and CONAN-style JSON sources,
// normalize, filter, binarize, deduplicate, merge and split.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xhate {

enum class Source { MLMA, CONAN, SYNTHETIC };

std::string_view source_name(Source s);
Source source_from_name(std::string_view name);

struct TextSample {
    std::string id;
    std::string text;
    std::string language;  // ISO-639-1 ("en" | "fr")
    int label = 0;         // 0 = not hateful, 1 = hateful
    Source source = Source::MLMA;
};

struct RawMlmaRecord {
    std::string id;
    std::string text;
    std::set<std::string> label_tags;
    std::string language;
};

struct RawConanRecord {
    std::string hate_text;
    std::string language;
};

struct Corpus {
    std::vector<TextSample> samples;
    std::map<std::string, std::size_t> language_mix;
    std::vector<std::string> provenance;  // digests of source files

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    // Content digest over every sample field, in order.
    std::uint64_t digest() const;
};

struct DatasetStats {
    std::size_t n_total = 0;
    std::array<std::size_t, 2> n_per_class{0, 0};
    std::map<std::string, std::size_t> n_per_language;
    std::map<std::size_t, std::size_t> token_length_histogram;
};

struct SplitSpec {
    int train_parts = 3;
    int val_parts = 1;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct ClassWeights {
    std::array<double, 2> w{1.0, 1.0};
};

// Row-level parse problem: the row is skipped, the issue reported.
struct RowIssue {
    std::size_t row = 0;  // 1-based data row number
    std::string message;
};

// Tabular input already split into header + cells (see csv.hpp).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct MlmaColumnMap {
    std::string text = "tweet";
    std::string labels = "sentiment";
    std::string id;        // optional; empty -> ids synthesized
    std::string language;  // optional; empty -> default_language applies
};

struct ConanFieldMap {
    std::string hate_text = "hate_speech";
    std::string language = "language";
};

// --- pipeline stages ------------------------------------------------------

std::vector<RawMlmaRecord> parse_mlma(const Table& rows, const MlmaColumnMap& columns,
                                      const std::string& tag_separator,
                                      const std::set<std::string>& language_filter,
                                      const std::string& default_language,
                                      std::vector<RowIssue>* issues = nullptr);

// 0 iff tags == {"normal"} (case-insensitive), 1 otherwise.
int binarize_mlma_label(const std::set<std::string>& tags);

std::vector<TextSample> mlma_to_samples(const std::vector<RawMlmaRecord>& records);

// Emits one hateful sample per record whose language passes the filter;
// counter-narrative fields are ignored. Ids are "conan-<file row index>".
std::vector<TextSample> parse_conan(const std::vector<RawConanRecord>& records,
                                    const std::set<std::string>& language_filter,
                                    std::string_view id_prefix = "conan");

std::vector<RawConanRecord> conan_records_from_json(const std::string& json_text,
                                                    const ConanFieldMap& fields,
                                                    std::vector<RowIssue>* issues = nullptr);

// Unicode-aware lowercase, trim, collapse internal whitespace runs.
// May return an empty string; the caller drops such samples.
std::string normalize(std::string_view text);

// True iff the text contains a token-initial '#' or '@' immediately
// followed by a word character. "price @ 5" survives, "#refugees" does not.
bool should_discard(std::string_view text);

struct PrepareStats {
    std::size_t dropped_empty = 0;
    std::size_t dropped_hashtag_or_mention = 0;
};

// normalize + drop-empty + hashtag/mention filter, order preserved.
std::vector<TextSample> prepare_samples(std::vector<TextSample> samples,
                                        PrepareStats* stats = nullptr);

struct DedupStats {
    std::size_t dropped = 0;
    std::size_t label_conflicts = 0;  // dropped duplicates whose label differed
};

// Keep the first occurrence of each distinct text string.
std::vector<TextSample> deduplicate(std::vector<TextSample> samples,
                                    DedupStats* stats = nullptr);

Corpus make_corpus(std::vector<TextSample> samples, std::vector<std::string> provenance = {});

// Concatenate in argument order, re-namespace colliding ids by source,
// then deduplicate. Provenance digests are concatenated.
Corpus merge(const std::vector<Corpus>& corpora, DedupStats* stats = nullptr);

// Deterministic seeded split; stratified by label when spec.stratified.
// Outputs preserve the corpus order of their members.
std::pair<Corpus, Corpus> split_train_val(const Corpus& corpus, const SplitSpec& spec);

using TokenCounter = std::function<std::size_t(std::string_view)>;

std::size_t whitespace_token_count(std::string_view text);

DatasetStats compute_stats(const Corpus& corpus, const TokenCounter& counter);

// Balanced inverse frequency: w_c = N / (2 * n_c).
ClassWeights compute_class_weights(const DatasetStats& stats);

// --- prepared-corpus persistence (JSON Lines) ------------------------------

std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& jsonl_text);
void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus read_corpus_jsonl(const std::string& path);

std::string stats_to_json(const DatasetStats& stats);

}  // namespace xhate
