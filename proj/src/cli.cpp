#include "xhate/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xhate/corpus.hpp"
#include "xhate/csv.hpp"
#include "xhate/encoding.hpp"
#include "xhate/error_analysis.hpp"
#include "xhate/errors.hpp"
#include "xhate/evaluation.hpp"
#include "xhate/run_manifest.hpp"
#include "xhate/synthetic.hpp"
#include "xhate/training.hpp"

namespace xhate {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

std::map<std::string, std::string> parse_kv_list(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw UsageError("expected key=value in '" + item + "'");
        }
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

std::string dominant_language(const Corpus& corpus) {
    std::string best = "und";
    std::size_t best_n = 0;
    for (const auto& [lang, n] : corpus.language_mix) {
        if (n > best_n) {
            best = lang;
            best_n = n;
        }
    }
    return best;
}

std::string default_cache_dir() {
    if (const char* env = std::getenv("XHATE_CACHE_DIR")) return env;
    return ".xhate-cache";
}

std::string cache_path(const std::string& cache_dir, std::uint64_t fingerprint,
                       std::uint64_t corpus_digest) {
    return cache_dir + "/feat-" + hex64(fingerprint) + "-" + hex64(corpus_digest) + ".xfc";
}

void refuse_clobber(const std::string& path, bool overwrite) {
    if (!overwrite && fs::exists(path)) {
        throw DataError(path + " already exists; pass --overwrite to replace it");
    }
}

// --- shared training pipeline -------------------------------------------------

struct CorpusBundle {
    Corpus full_train;   // pre-split training corpus
    Corpus train_split;
    Corpus val_split;
    Corpus test;         // held-out evaluation corpus
    std::string train_path;
    std::string test_path;
    std::uint64_t split_seed = 0;
};

CorpusBundle load_and_split(const std::string& train_path, const std::string& test_path,
                            std::uint64_t split_seed) {
    CorpusBundle b;
    b.full_train = read_corpus_jsonl(train_path);
    b.train_path = train_path;
    b.split_seed = split_seed;
    SplitSpec spec;
    spec.seed = split_seed;
    auto [tr, va] = split_train_val(b.full_train, spec);
    b.train_split = std::move(tr);
    b.val_split = std::move(va);
    if (!test_path.empty()) {
        b.test = read_corpus_jsonl(test_path);
        b.test_path = test_path;
    } else {
        b.test = b.val_split;
        b.test_path = train_path + "#val";
    }
    return b;
}

struct EncodedBundle {
    FeatureMatrix train, val, test;
    int d_model = 0;
    std::uint64_t fingerprint = 0;
};

EncodedBundle encode_bundle(const CorpusBundle& corpora, const std::string& backbone_id,
                            int d_model, int max_seq_len, const std::string& adapter_dir,
                            const std::string& cache_dir) {
    EncoderConfig cfg;
    cfg.backbone_id = backbone_id;
    cfg.d_model = d_model;
    cfg.max_seq_len = max_seq_len;
    auto encoder = make_encoder(cfg, adapter_dir);
    Tokenizer tokenizer{TokenizerSpec{}};
    EncodedBundle e;
    e.d_model = encoder->config().d_model;
    e.fingerprint = encoder->fingerprint(tokenizer.spec());
    auto load = [&](const Corpus& c) {
        return load_or_build_feature_cache(
            c, tokenizer, *encoder, cache_path(cache_dir, e.fingerprint, c.digest()));
    };
    e.train = load(corpora.train_split);
    e.val = load(corpora.val_split);
    e.test = load(corpora.test);
    return e;
}

struct RunOutputs {
    TrainRun run;
    EvalReport report;
    std::string run_dir;
};

RunOutputs execute_run(const std::string& run_root, const GridCell& cell,
                       const CorpusBundle& corpora, const EncodedBundle& encoded,
                       bool use_class_weights, const std::string& adapter_dir,
                       bool overwrite) {
    const std::string train_lang = dominant_language(corpora.full_train);
    const std::string test_lang = dominant_language(corpora.test);

    ClassWeights weights;
    if (use_class_weights) {
        weights = compute_class_weights(
            compute_stats(corpora.train_split, whitespace_token_count));
    }

    TrainResult result =
        train(encoded.train, labels_of(corpora.train_split), encoded.val,
              labels_of(corpora.val_split), weights, cell.hp, cell.run_id);
    result.run.backbone_id = cell.backbone_id;
    result.run.train_lang = train_lang;
    result.run.test_lang = test_lang;

    EvalReport report = evaluate(result.params, result.spec, encoded.test,
                                 labels_of(corpora.test), train_lang, test_lang,
                                 cell.run_id);

    const std::string run_dir = run_root + "/" + cell.run_id;
    refuse_clobber(run_dir + "/manifest.json", overwrite);
    fs::create_directories(run_dir);
    write_file(run_dir + "/head_params.json",
               head_params_to_json(result.params, result.spec));
    write_file(run_dir + "/loss_history.json", loss_history_to_json(result.run));
    write_file(run_dir + "/eval_report.json", eval_report_to_json(report));

    RunManifest m;
    m.run_id = cell.run_id;
    m.hyperparams = cell.hp;
    m.backbone_id = cell.backbone_id;
    m.adapter_dir = adapter_dir;
    m.train_lang = train_lang;
    m.test_lang = test_lang;
    m.train_corpus_path = corpora.train_path;
    m.test_corpus_path = corpora.test_path;
    m.train_corpus_digest = hex64(corpora.full_train.digest());
    m.train_split_digest = hex64(corpora.train_split.digest());
    m.val_split_digest = hex64(corpora.val_split.digest());
    m.test_corpus_digest = hex64(corpora.test.digest());
    m.split_seed = corpora.split_seed;
    m.d_model = encoded.d_model;
    m.feature_fingerprint = hex64(encoded.fingerprint);
    m.head_params_digest = result.run.head_digest;
    m.class_weights = use_class_weights;
    m.created_at = utc_timestamp();
    m.wall_seconds = result.run.wall_seconds;
    m.status = "complete";
    write_manifest(m, run_dir + "/manifest.json");

    return {std::move(result.run), std::move(report), run_dir};
}

int resolve_max_seq_len(int requested, const Corpus& train_split) {
    if (requested > 0) return requested;
    const DatasetStats stats = compute_stats(train_split, whitespace_token_count);
    return choose_max_seq_len(stats.token_length_histogram, 25, 35, 0.95);
}

// --- subcommand implementations --------------------------------------------------

struct PrepareOptions {
    std::string mlma_en, mlma_fr;
    std::vector<std::string> conan;
    std::string out_dir;
    std::string column_map_text;
    std::string field_map_text;
    std::string tag_separator = "_";
    bool overwrite = false;
    bool synthetic = false;
    std::uint64_t seed = 7;
    std::size_t synthetic_train = 400;
    std::size_t synthetic_test = 100;
};

int cmd_prepare(const PrepareOptions& opt) {
    fs::create_directories(opt.out_dir);
    const std::string en_path = opt.out_dir + "/en.jsonl";
    const std::string fr_path = opt.out_dir + "/fr.jsonl";
    const std::string stats_path = opt.out_dir + "/stats.json";
    refuse_clobber(en_path, opt.overwrite);
    refuse_clobber(fr_path, opt.overwrite);

    if (opt.synthetic) {
        SyntheticSpec spec;
        spec.seed = opt.seed;
        spec.n_train = opt.synthetic_train;
        spec.n_test = opt.synthetic_test;
        auto [train, test] = make_synthetic_corpus(spec);
        write_corpus_jsonl(train, en_path);
        write_corpus_jsonl(test, fr_path);
        nlohmann::ordered_json stats;
        stats["en"] = nlohmann::ordered_json::parse(
            stats_to_json(compute_stats(train, whitespace_token_count)));
        stats["fr"] = nlohmann::ordered_json::parse(
            stats_to_json(compute_stats(test, whitespace_token_count)));
        write_file(stats_path, stats.dump(2) + "\n");
        std::cout << "synthetic: wrote " << train.size() << " en samples, " << test.size()
                  << " fr samples\n";
        return 0;
    }

    if (opt.mlma_en.empty() && opt.mlma_fr.empty() && opt.conan.empty()) {
        throw UsageError("prepare needs --mlma-en/--mlma-fr/--conan inputs or --synthetic");
    }

    MlmaColumnMap columns;
    if (!opt.column_map_text.empty()) {
        auto kv = parse_kv_list(opt.column_map_text);
        if (kv.count("text")) columns.text = kv["text"];
        if (kv.count("labels")) columns.labels = kv["labels"];
        if (kv.count("id")) columns.id = kv["id"];
        if (kv.count("language")) columns.language = kv["language"];
    }
    ConanFieldMap fields;
    if (!opt.field_map_text.empty()) {
        auto kv = parse_kv_list(opt.field_map_text);
        if (kv.count("hate")) fields.hate_text = kv["hate"];
        if (kv.count("language")) fields.language = kv["language"];
    }

    std::vector<RowIssue> issues;
    std::map<std::string, std::vector<Corpus>> per_language;  // en/fr -> corpora to merge

    auto ingest_mlma = [&](const std::string& path, const std::string& lang) {
        if (path.empty()) return;
        const std::string content = read_file(path);
        Table table = parse_csv(content);
        std::vector<RowIssue> file_issues;
        auto records = parse_mlma(table, columns, opt.tag_separator, {lang}, lang,
                                  &file_issues);
        for (const auto& i : file_issues) {
            std::cerr << path << " row " << i.row << ": " << i.message << " (skipped)\n";
        }
        issues.insert(issues.end(), file_issues.begin(), file_issues.end());
        PrepareStats pstats;
        auto samples = prepare_samples(mlma_to_samples(records), &pstats);
        std::cout << path << ": " << records.size() << " " << lang << " rows parsed, "
                  << pstats.dropped_hashtag_or_mention << " dropped (hashtag/mention), "
                  << pstats.dropped_empty << " empty after normalization\n";
        per_language[lang].push_back(
            make_corpus(std::move(samples), {hex64(fnv1a64(content))}));
    };
    ingest_mlma(opt.mlma_en, "en");
    ingest_mlma(opt.mlma_fr, "fr");

    for (std::size_t k = 0; k < opt.conan.size(); ++k) {
        const std::string content = read_file(opt.conan[k]);
        std::vector<RowIssue> file_issues;
        auto records = conan_records_from_json(content, fields, &file_issues);
        for (const auto& i : file_issues) {
            std::cerr << opt.conan[k] << " record " << i.row << ": " << i.message
                      << " (skipped)\n";
        }
        issues.insert(issues.end(), file_issues.begin(), file_issues.end());
        const std::string prefix = opt.conan.size() > 1 ? "conan-f" + std::to_string(k)
                                                        : std::string("conan");
        auto samples = parse_conan(records, {"en", "fr"}, prefix);
        PrepareStats pstats;
        samples = prepare_samples(std::move(samples), &pstats);
        std::map<std::string, std::vector<TextSample>> by_lang;
        for (auto& s : samples) by_lang[s.language].push_back(std::move(s));
        std::cout << opt.conan[k] << ": " << records.size() << " records, "
                  << pstats.dropped_hashtag_or_mention << " dropped (hashtag/mention)\n";
        const std::string digest = hex64(fnv1a64(content));
        for (auto& [lang, list] : by_lang) {
            per_language[lang].push_back(make_corpus(std::move(list), {digest}));
        }
    }

    nlohmann::ordered_json stats_doc;
    for (const std::string lang : {"en", "fr"}) {
        auto it = per_language.find(lang);
        const std::string out_path = lang == std::string("en") ? en_path : fr_path;
        if (it == per_language.end()) {
            write_file(out_path, "");
            continue;
        }
        std::size_t before = 0;
        for (const auto& c : it->second) before += c.size();
        DedupStats dstats;
        Corpus merged = merge(it->second, &dstats);
        write_corpus_jsonl(merged, out_path);
        const double shrink =
            before == 0 ? 0.0
                        : 100.0 * static_cast<double>(dstats.dropped) /
                              static_cast<double>(before);
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f", shrink);
        std::cout << lang << ": " << before << " -> " << merged.size()
                  << " after dedup (shrunk by " << pct << "%, " << dstats.label_conflicts
                  << " label conflicts)\n";
        stats_doc[lang] = nlohmann::ordered_json::parse(
            stats_to_json(compute_stats(merged, whitespace_token_count)));
        stats_doc[lang]["dedup_dropped"] = dstats.dropped;
        stats_doc[lang]["label_conflicts"] = dstats.label_conflicts;
    }
    stats_doc["row_issues"] = issues.size();
    write_file(stats_path, stats_doc.dump(2) + "\n");
    std::cout << "wrote " << en_path << ", " << fr_path << ", " << stats_path << '\n';
    return 0;
}

int cmd_stats(const std::string& corpus_path, const std::string& out_path) {
    Corpus corpus = read_corpus_jsonl(corpus_path);
    const std::string doc = stats_to_json(compute_stats(corpus, whitespace_token_count));
    if (out_path.empty()) {
        std::cout << doc;
    } else {
        write_file(out_path, doc);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

struct TrainOptions {
    std::string train_path, test_path;
    std::string backbone = "stub-32";
    std::string adapter_dir;
    int d_model = 32;
    int max_seq_len = 32;  // 0 = choose from the training histogram
    double lr = 1e-4;
    int epochs = 5;
    int batch_size = 32;
    std::string optimizer = "adam";
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    int d_hidden = 512;
    double dropout_p = 0.1;
    bool extra_dense = false;
    bool no_dropout = false;
    bool no_class_weights = false;
    std::string run_root = "runs";
    std::string run_id;
    std::string cache_dir = default_cache_dir();
    bool overwrite = false;
    std::string from_manifest;
};

HyperParams hyperparams_from_options(const TrainOptions& opt) {
    HyperParams hp;
    hp.learning_rate = opt.lr;
    hp.epochs = opt.epochs;
    hp.batch_size = opt.batch_size;
    hp.optimizer = optimizer_from_name(opt.optimizer);
    hp.weight_decay = opt.weight_decay;
    hp.seed = opt.seed;
    hp.max_seq_len = opt.max_seq_len;
    hp.d_hidden = opt.d_hidden;
    hp.dropout_p = opt.dropout_p;
    hp.extra_dense = opt.extra_dense;
    hp.use_dropout = !opt.no_dropout;
    return hp;
}

int cmd_train(TrainOptions opt) {
    GridCell cell;
    bool use_class_weights = !opt.no_class_weights;
    if (!opt.from_manifest.empty()) {
        RunManifest m = read_manifest(opt.from_manifest);
        cell.hp = m.hyperparams;
        cell.backbone_id = m.backbone_id;
        cell.run_id = opt.run_id.empty() ? m.run_id + "-rerun" : opt.run_id;
        opt.train_path = m.train_corpus_path;
        if (m.test_corpus_path.find("#val") == std::string::npos) {
            opt.test_path = m.test_corpus_path;
        } else {
            opt.test_path.clear();
        }
        opt.split_seed = m.split_seed;
        opt.adapter_dir = m.adapter_dir;
        opt.d_model = m.d_model;
        use_class_weights = m.class_weights;
        CorpusBundle corpora =
            load_and_split(opt.train_path, opt.test_path, opt.split_seed);
        if (hex64(corpora.full_train.digest()) != m.train_corpus_digest) {
            throw DataError("training corpus at " + opt.train_path +
                            " no longer matches the manifest digest");
        }
        if (!m.test_corpus_digest.empty() && !opt.test_path.empty() &&
            hex64(corpora.test.digest()) != m.test_corpus_digest) {
            throw DataError("test corpus at " + opt.test_path +
                            " no longer matches the manifest digest");
        }
        EncodedBundle encoded =
            encode_bundle(corpora, cell.backbone_id, opt.d_model, cell.hp.max_seq_len,
                          opt.adapter_dir, opt.cache_dir);
        RunOutputs out = execute_run(opt.run_root, cell, corpora, encoded,
                                     use_class_weights, opt.adapter_dir, opt.overwrite);
        std::cout << "run " << out.run.run_id << ": head digest " << out.run.head_digest
                  << ", macro F1 " << format_metric(out.report.macro_avg_f1) << " ("
                  << out.report.pair_name() << ")\n";
        return 0;
    }

    if (opt.train_path.empty()) throw UsageError("train needs --train");
    CorpusBundle corpora = load_and_split(opt.train_path, opt.test_path, opt.split_seed);
    cell.hp = hyperparams_from_options(opt);
    cell.hp.max_seq_len = resolve_max_seq_len(opt.max_seq_len, corpora.train_split);
    cell.backbone_id = opt.backbone;
    if (opt.run_id.empty()) {
        const std::uint64_t h =
            fnv1a64(hyperparams_to_json(cell.hp) + cell.backbone_id +
                    hex64(corpora.full_train.digest()) + hex64(corpora.test.digest()));
        cell.run_id = "run-" + hex64(h).substr(0, 12);
    } else {
        cell.run_id = opt.run_id;
    }
    EncodedBundle encoded = encode_bundle(corpora, cell.backbone_id, opt.d_model,
                                          cell.hp.max_seq_len, opt.adapter_dir,
                                          opt.cache_dir);
    RunOutputs out = execute_run(opt.run_root, cell, corpora, encoded, use_class_weights,
                                 opt.adapter_dir, opt.overwrite);
    std::cout << "run " << out.run.run_id << ": head digest " << out.run.head_digest
              << ", macro F1 " << format_metric(out.report.macro_avg_f1) << " ("
              << out.report.pair_name() << "), val loss "
              << format_double(out.run.val_loss.back()) << '\n';
    std::cout << "artifacts in " << out.run_dir << '\n';
    return 0;
}

struct GridOptions {
    std::string config_path;
    std::string train_path, test_path;
    std::string out_dir = "runs";
    int jobs = 1;
    std::string adapter_dir;
    int d_model = 32;
    std::uint64_t split_seed = 0;
    bool no_class_weights = false;
    std::string cache_dir = default_cache_dir();
    bool overwrite = false;
    std::string format = "text";
};

int cmd_grid(const GridOptions& opt) {
    auto cells = grid_cells_from_json(read_file(opt.config_path));
    CorpusBundle corpora = load_and_split(opt.train_path, opt.test_path, opt.split_seed);

    // build each distinct encoder's caches once, before any fan-out
    std::map<std::pair<std::string, int>, EncodedBundle> encoded;
    for (const auto& cell : cells) {
        const std::pair<std::string, int> key{cell.backbone_id, cell.hp.max_seq_len};
        if (!encoded.count(key)) {
            encoded[key] = encode_bundle(corpora, cell.backbone_id, opt.d_model,
                                         cell.hp.max_seq_len, opt.adapter_dir,
                                         opt.cache_dir);
        }
    }

    auto outcomes = run_grid(cells, opt.jobs, [&](const GridCell& cell) {
        const auto& bundle =
            encoded.at(std::pair<std::string, int>{cell.backbone_id, cell.hp.max_seq_len});
        RunOutputs out = execute_run(opt.out_dir, cell, corpora, bundle,
                                     !opt.no_class_weights, opt.adapter_dir, opt.overwrite);
        return std::make_pair(out.run, out.report);
    });

    nlohmann::ordered_json gm;
    gm["created_at"] = utc_timestamp();
    gm["train_corpus"] = opt.train_path;
    gm["test_corpus"] = opt.test_path.empty() ? corpora.test_path : opt.test_path;
    nlohmann::ordered_json cell_list = nlohmann::ordered_json::array();
    std::vector<RunReport> reports;
    int failures = 0;
    for (const auto& o : outcomes) {
        nlohmann::ordered_json cj;
        cj["run_id"] = o.cell.run_id;
        cj["backbone"] = o.cell.backbone_id;
        cj["status"] = o.ok ? "complete" : "failed";
        if (!o.ok) {
            cj["error"] = o.error;
            ++failures;
            std::cerr << "cell " << o.cell.run_id << " failed: " << o.error << '\n';
        } else {
            reports.push_back({o.cell.run_id, o.cell.backbone_id, o.cell.hp.epochs,
                               o.cell.hp.learning_rate, o.report});
        }
        cell_list.push_back(cj);
    }
    gm["cells"] = cell_list;
    fs::create_directories(opt.out_dir);
    write_file(opt.out_dir + "/grid_manifest.json", gm.dump(2) + "\n");
    if (!reports.empty()) {
        std::cout << render_report(reports, report_format_from_name(opt.format));
    }
    std::cout << outcomes.size() - static_cast<std::size_t>(failures) << "/"
              << outcomes.size() << " cells complete\n";
    return failures == 0 ? 0 : 3;
}

// Rebuilds the trained head and the encoder recorded in a run directory.
struct LoadedRun {
    RunManifest manifest;
    HeadParams params;
    HeadSpec spec;
};

LoadedRun load_run(const std::string& run_dir) {
    LoadedRun lr;
    lr.manifest = read_manifest(run_dir + "/manifest.json");
    auto [params, spec] = head_params_from_json(read_file(run_dir + "/head_params.json"));
    if (hex64(head_params_digest(params, spec)) != lr.manifest.head_params_digest) {
        throw DataError("head params in " + run_dir + " do not match the manifest digest");
    }
    lr.params = std::move(params);
    lr.spec = spec;
    return lr;
}

FeatureMatrix features_for(const LoadedRun& run, const Corpus& corpus,
                           const std::string& cache_dir) {
    EncoderConfig cfg;
    cfg.backbone_id = run.manifest.backbone_id;
    cfg.d_model = run.manifest.d_model;
    cfg.max_seq_len = run.manifest.hyperparams.max_seq_len;
    auto encoder = make_encoder(cfg, run.manifest.adapter_dir);
    Tokenizer tokenizer{TokenizerSpec{}};
    return load_or_build_feature_cache(
        corpus, tokenizer, *encoder,
        cache_path(cache_dir, encoder->fingerprint(tokenizer.spec()), corpus.digest()));
}

int cmd_eval(const std::string& run_dir, const std::string& test_path,
             const std::string& out_path, const std::string& format,
             const std::string& cache_dir) {
    LoadedRun run = load_run(run_dir);
    Corpus test = read_corpus_jsonl(test_path);
    FeatureMatrix features = features_for(run, test, cache_dir);
    const std::string test_lang = dominant_language(test);
    EvalReport report = evaluate(run.params, run.spec, features, labels_of(test),
                                 run.manifest.train_lang, test_lang, run.manifest.run_id);
    const std::string out =
        out_path.empty() ? run_dir + "/eval_" + test_lang + ".json" : out_path;
    write_file(out, eval_report_to_json(report));
    std::vector<RunReport> rr = {{run.manifest.run_id, run.manifest.backbone_id,
                                  run.manifest.hyperparams.epochs,
                                  run.manifest.hyperparams.learning_rate, report}};
    std::cout << render_grid_table(rr, false, report_format_from_name(format));
    std::cout << render_grid_table(rr, true, report_format_from_name(format));
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_errors(const std::string& run_dir, const std::string& test_path,
               const std::string& lexicon_dir, const std::string& out_path,
               const std::string& cache_dir) {
    LoadedRun run = load_run(run_dir);
    Corpus test = read_corpus_jsonl(test_path);
    FeatureMatrix features = features_for(run, test, cache_dir);
    std::vector<int> predictions(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        predictions[i] =
            predict(std::span<const float>(features.row(i),
                                           static_cast<std::size_t>(features.d_model)),
                    run.params, run.spec)
                .label;
    }
    LexiconSet lexicons = LexiconSet::from_dir(lexicon_dir);
    std::vector<std::string> warnings;
    auto errors = collect_errors(predictions, test, lexicons, {}, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    ErrorReport report =
        aggregate(errors, run.manifest.run_id, hex64(test.digest()));
    const std::string test_lang = dominant_language(test);
    const std::string out =
        out_path.empty() ? run_dir + "/errors_" + test_lang + ".json" : out_path;
    write_file(out, error_report_to_json(report));
    std::cout << "run " << report.run_id << ": " << report.total_errors << " errors ("
              << report.false_hateful << " false-hateful, " << report.missed_hateful
              << " missed-hateful)\n";
    for (const auto& name : feature_category_names()) {
        std::cout << "  " << name << ": " << report.category_counts.at(name) << '\n';
    }
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out_path) {
    ErrorReport a = error_report_from_json(read_file(a_path));
    ErrorReport b = error_report_from_json(read_file(b_path));
    RunComparison c = compare(a, b);
    std::cout << comparison_to_table(c);
    if (!out_path.empty()) {
        write_file(out_path, comparison_to_json(c));
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& format,
               const std::string& out_path) {
    std::vector<RunReport> reports;
    if (!fs::is_directory(runs_dir)) throw DataError(runs_dir + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json") &&
            fs::exists(entry.path() / "eval_report.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        RunManifest m = read_manifest((dir / "manifest.json").string());
        EvalReport rep =
            eval_report_from_json(read_file((dir / "eval_report.json").string()));
        reports.push_back({m.run_id, m.backbone_id, m.hyperparams.epochs,
                           m.hyperparams.learning_rate, rep});
    }
    if (reports.empty()) throw DataError("no completed runs under " + runs_dir);
    const std::string doc = render_report(reports, report_format_from_name(format));
    if (out_path.empty()) {
        std::cout << doc;
    } else {
        write_file(out_path, doc);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"cross-lingual hate speech experiment toolkit"};
    app.require_subcommand(1);

    PrepareOptions prep;
    auto* prepare = app.add_subcommand("prepare", "ingest, clean, merge and write corpora");
    prepare->add_option("--mlma-en", prep.mlma_en, "MLMA-style English CSV");
    prepare->add_option("--mlma-fr", prep.mlma_fr, "MLMA-style French CSV");
    prepare->add_option("--conan", prep.conan, "CONAN-style JSON (repeatable)");
    prepare->add_option("--out", prep.out_dir, "output directory")->required();
    prepare->add_option("--column-map", prep.column_map_text,
                        "MLMA columns, e.g. text=tweet,labels=sentiment,language=lang");
    prepare->add_option("--field-map", prep.field_map_text,
                        "CONAN fields, e.g. hate=hate_speech,language=language");
    prepare->add_option("--tag-separator", prep.tag_separator, "MLMA label tag separator");
    prepare->add_flag("--overwrite", prep.overwrite, "replace existing outputs");
    prepare->add_flag("--synthetic", prep.synthetic, "generate the seeded toy corpus");
    prepare->add_option("--seed", prep.seed, "synthetic seed");
    prepare->add_option("--synthetic-train", prep.synthetic_train, "synthetic train size");
    prepare->add_option("--synthetic-test", prep.synthetic_test, "synthetic test size");

    std::string stats_corpus, stats_out;
    auto* stats = app.add_subcommand("stats", "dataset statistics of a prepared corpus");
    stats->add_option("--corpus", stats_corpus, "prepared JSONL corpus")->required();
    stats->add_option("--out", stats_out, "output JSON path (default stdout)");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "train one classification head");
    train_cmd->add_option("--train", tr.train_path, "prepared training corpus (JSONL)");
    train_cmd->add_option("--test", tr.test_path,
                          "held-out corpus (defaults to the validation split)");
    train_cmd->add_option("--backbone", tr.backbone, "backbone id (stub-* or adapter id)");
    train_cmd->add_option("--adapter-dir", tr.adapter_dir, "backbone adapter artifacts");
    train_cmd->add_option("--d-model", tr.d_model, "feature width for stub backbones");
    train_cmd->add_option("--max-seq-len", tr.max_seq_len,
                          "token positions per sample (0 = pick from histogram)");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--epochs", tr.epochs, "training epochs");
    train_cmd->add_option("--batch-size", tr.batch_size, "batch size");
    train_cmd->add_option("--optimizer", tr.optimizer, "adam|adamw");
    train_cmd->add_option("--weight-decay", tr.weight_decay, "adamw decoupled decay");
    train_cmd->add_option("--seed", tr.seed, "training seed");
    train_cmd->add_option("--split-seed", tr.split_seed, "train/val split seed");
    train_cmd->add_option("--d-hidden", tr.d_hidden, "hidden width of the head");
    train_cmd->add_option("--dropout-p", tr.dropout_p, "dropout probability");
    train_cmd->add_flag("--extra-dense", tr.extra_dense, "add a second dense layer");
    train_cmd->add_flag("--no-dropout", tr.no_dropout, "disable the dropout layer");
    train_cmd->add_flag("--no-class-weights", tr.no_class_weights,
                        "train with unit class weights");
    train_cmd->add_option("--run-dir", tr.run_root, "root directory for run artifacts");
    train_cmd->add_option("--run-id", tr.run_id, "run id (default derived from config)");
    train_cmd->add_option("--cache-dir", tr.cache_dir, "feature cache directory");
    train_cmd->add_flag("--overwrite", tr.overwrite, "replace an existing run directory");
    train_cmd->add_option("--from-manifest", tr.from_manifest,
                          "re-execute a run from its manifest");

    GridOptions gr;
    auto* grid = app.add_subcommand("grid", "run a hyperparameter grid");
    grid->add_option("--config", gr.config_path, "grid JSON listing cells")->required();
    grid->add_option("--train", gr.train_path, "prepared training corpus")->required();
    grid->add_option("--test", gr.test_path, "held-out corpus");
    grid->add_option("--out", gr.out_dir, "root directory for run artifacts");
    grid->add_option("--jobs", gr.jobs, "parallel cells");
    grid->add_option("--adapter-dir", gr.adapter_dir, "backbone adapter artifacts");
    grid->add_option("--d-model", gr.d_model, "feature width for stub backbones");
    grid->add_option("--split-seed", gr.split_seed, "train/val split seed");
    grid->add_flag("--no-class-weights", gr.no_class_weights, "unit class weights");
    grid->add_option("--cache-dir", gr.cache_dir, "feature cache directory");
    grid->add_flag("--overwrite", gr.overwrite, "replace existing run directories");
    grid->add_option("--format", gr.format, "summary table format (text|markdown)");

    std::string eval_run, eval_test, eval_out, eval_format = "text";
    std::string eval_cache = default_cache_dir();
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained run on a corpus");
    eval_cmd->add_option("--run", eval_run, "run directory")->required();
    eval_cmd->add_option("--test", eval_test, "prepared corpus to evaluate")->required();
    eval_cmd->add_option("--out", eval_out, "report path (default <run>/eval_<lang>.json)");
    eval_cmd->add_option("--format", eval_format, "text|markdown");
    eval_cmd->add_option("--cache-dir", eval_cache, "feature cache directory");

    std::string err_run, err_test, err_lexicons = "data/lexicons", err_out;
    std::string err_cache = default_cache_dir();
    auto* errors_cmd = app.add_subcommand("errors", "misclassification analysis of a run");
    errors_cmd->add_option("--run", err_run, "run directory")->required();
    errors_cmd->add_option("--test", err_test, "prepared corpus to analyse")->required();
    errors_cmd->add_option("--lexicon-dir", err_lexicons, "lexicon directory");
    errors_cmd->add_option("--out", err_out, "report path (default <run>/errors_<lang>.json)");
    errors_cmd->add_option("--cache-dir", err_cache, "feature cache directory");

    std::string cmp_a, cmp_b, cmp_out;
    auto* compare_cmd = app.add_subcommand("compare", "compare two error reports");
    compare_cmd->add_option("--a", cmp_a, "baseline error report JSON")->required();
    compare_cmd->add_option("--b", cmp_b, "candidate error report JSON")->required();
    compare_cmd->add_option("--out", cmp_out, "comparison JSON path");

    std::string rep_runs, rep_format = "text", rep_out;
    auto* report_cmd = app.add_subcommand("report", "assemble result tables across runs");
    report_cmd->add_option("--runs", rep_runs, "directory holding run subdirectories")
        ->required();
    report_cmd->add_option("--format", rep_format, "text|markdown|json");
    report_cmd->add_option("--out", rep_out, "output path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(prep);
        if (stats->parsed()) return cmd_stats(stats_corpus, stats_out);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (grid->parsed()) return cmd_grid(gr);
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_run, eval_test, eval_out, eval_format, eval_cache);
        }
        if (errors_cmd->parsed()) return cmd_errors(err_run, err_test, err_lexicons,
                                                    err_out, err_cache);
        if (compare_cmd->parsed()) return cmd_compare(cmp_a, cmp_b, cmp_out);
        if (report_cmd->parsed()) return cmd_report(rep_runs, rep_format, rep_out);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace xhate
