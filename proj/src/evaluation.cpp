#include "xhate/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"

namespace xhate {

using ordered_json = nlohmann::ordered_json;

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& predicted) {
    if (gold.size() != predicted.size()) {
        throw DataError("confusion: gold and predicted lengths differ");
    }
    if (gold.empty()) throw DataError("confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++cm.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(predicted[i])];
    }
    return cm;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
    ClassMetrics m;
    for (std::size_t c = 0; c < 2; ++c) {
        const long tp = cm.counts[c][c];
        const long colsum = cm.counts[0][c] + cm.counts[1][c];
        const long rowsum = cm.counts[c][0] + cm.counts[c][1];
        auto& mc = m.per_class[c];
        mc.support = rowsum;
        if (colsum > 0) {
            mc.precision = static_cast<double>(tp) / static_cast<double>(colsum);
        } else {
            mc.degenerate = true;
        }
        if (rowsum > 0) {
            mc.recall = static_cast<double>(tp) / static_cast<double>(rowsum);
        } else {
            mc.degenerate = true;
        }
        if (mc.precision + mc.recall > 0.0) {
            mc.f1 = 2.0 * mc.precision * mc.recall / (mc.precision + mc.recall);
        } else {
            mc.f1 = 0.0;
        }
    }
    return m;
}

double macro_avg(const ClassMetrics& metrics) {
    return (metrics.per_class[0].f1 + metrics.per_class[1].f1) / 2.0;
}

double weighted_avg(const ClassMetrics& metrics) {
    const double s0 = static_cast<double>(metrics.per_class[0].support);
    const double s1 = static_cast<double>(metrics.per_class[1].support);
    if (s0 + s1 <= 0.0) throw DataError("weighted_avg: total support is zero");
    return (s0 * metrics.per_class[0].f1 + s1 * metrics.per_class[1].f1) / (s0 + s1);
}

EvalReport evaluate(const HeadParams& params, const HeadSpec& spec,
                    const FeatureMatrix& features, const std::vector<int>& gold,
                    const std::string& train_lang, const std::string& test_lang,
                    const std::string& run_id) {
    if (features.n() != gold.size()) {
        throw DataError("evaluate: features and labels are not aligned");
    }
    std::vector<int> predicted(gold.size());
    for (std::size_t i = 0; i < features.n(); ++i) {
        predicted[i] = predict(std::span<const float>(
                                   features.row(i), static_cast<std::size_t>(features.d_model)),
                               params, spec)
                           .label;
    }
    EvalReport r;
    r.confusion = confusion(gold, predicted);
    r.metrics = class_metrics(r.confusion);
    r.macro_avg_f1 = macro_avg(r.metrics);
    r.weighted_avg_f1 = weighted_avg(r.metrics);
    r.accuracy = static_cast<double>(r.confusion.counts[0][0] + r.confusion.counts[1][1]) /
                 static_cast<double>(r.confusion.total());
    r.train_lang = train_lang;
    r.test_lang = test_lang;
    r.run_id = run_id;
    r.degenerate = r.metrics.per_class[0].degenerate || r.metrics.per_class[1].degenerate;
    return r;
}

std::string eval_report_to_json(const EvalReport& report) {
    ordered_json j;
    j["run_id"] = report.run_id;
    j["language_pair"]["train"] = report.train_lang;
    j["language_pair"]["test"] = report.test_lang;
    j["confusion"] = {{report.confusion.counts[0][0], report.confusion.counts[0][1]},
                      {report.confusion.counts[1][0], report.confusion.counts[1][1]}};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& mc = report.metrics.per_class[c];
        ordered_json pc;
        pc["precision"] = mc.precision;
        pc["recall"] = mc.recall;
        pc["f1"] = mc.f1;
        pc["support"] = mc.support;
        pc["degenerate"] = mc.degenerate;
        j["per_class"][std::to_string(c)] = pc;
    }
    j["macro_avg_f1"] = report.macro_avg_f1;
    j["weighted_avg_f1"] = report.weighted_avg_f1;
    j["accuracy"] = report.accuracy;
    j["degenerate"] = report.degenerate;
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EvalReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.train_lang = j.at("language_pair").at("train").get<std::string>();
    r.test_lang = j.at("language_pair").at("test").get<std::string>();
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t p = 0; p < 2; ++p) {
            r.confusion.counts[g][p] = j.at("confusion").at(g).at(p).get<long>();
        }
    }
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& pc = j.at("per_class").at(std::to_string(c));
        auto& mc = r.metrics.per_class[c];
        mc.precision = pc.at("precision").get<double>();
        mc.recall = pc.at("recall").get<double>();
        mc.f1 = pc.at("f1").get<double>();
        mc.support = pc.at("support").get<long>();
        mc.degenerate = pc.at("degenerate").get<bool>();
    }
    r.macro_avg_f1 = j.at("macro_avg_f1").get<double>();
    r.weighted_avg_f1 = j.at("weighted_avg_f1").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.degenerate = j.at("degenerate").get<bool>();
    return r;
}

CrossLingualMatrix cross_lingual_matrix(const std::vector<RunReport>& runs) {
    static const std::set<std::string> kLangs = {"en", "fr"};
    CrossLingualMatrix out;
    for (const auto& run : runs) {
        const auto& rep = run.report;
        if (!kLangs.count(rep.train_lang) || !kLangs.count(rep.test_lang)) {
            out.warnings.push_back("run " + run.run_id + " has language pair " +
                                   rep.pair_name() + " outside en/fr; skipped");
            continue;
        }
        auto& slot = out.best[run.backbone_id];
        auto it = slot.find(rep.pair_name());
        if (it == slot.end() || rep.macro_avg_f1 > it->second.macro_avg_f1 ||
            (rep.macro_avg_f1 == it->second.macro_avg_f1 &&
             rep.run_id < it->second.run_id)) {
            slot[rep.pair_name()] = rep;
        }
    }
    return out;
}

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "text") return ReportFormat::TEXT;
    if (name == "json") return ReportFormat::JSON;
    if (name == "markdown" || name == "md") return ReportFormat::MARKDOWN;
    throw UsageError("unknown report format '" + name + "' (text|json|markdown)");
}

std::string format_metric(double v) {
    // two decimals, half-up
    const double rounded = std::floor(v * 100.0 + 0.5) / 100.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", rounded);
    return buf;
}

namespace {

std::string cell_label(int epochs, double lr) {
    std::ostringstream ss;
    ss << epochs << " epochs, " << lr;
    return ss.str();
}

struct TableData {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
};

std::string render_table(const TableData& t, ReportFormat format) {
    std::ostringstream ss;
    if (format == ReportFormat::MARKDOWN) {
        ss << "### " << t.title << "\n\n";
        ss << "| Model |";
        for (const auto& c : t.columns) ss << ' ' << c << " |";
        ss << "\n|---|";
        for (std::size_t i = 0; i < t.columns.size(); ++i) ss << "---|";
        ss << '\n';
        for (const auto& [name, cells] : t.rows) {
            ss << "| " << name << " |";
            for (const auto& c : cells) ss << ' ' << c << " |";
            ss << '\n';
        }
        ss << '\n';
        return ss.str();
    }
    // plain text: aligned columns
    std::size_t name_w = 5;
    for (const auto& [name, _] : t.rows) name_w = std::max(name_w, name.size());
    std::vector<std::size_t> widths(t.columns.size());
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        widths[i] = t.columns[i].size();
        for (const auto& [_, cells] : t.rows) {
            if (i < cells.size()) widths[i] = std::max(widths[i], cells[i].size());
        }
    }
    ss << t.title << '\n';
    ss << std::string(t.title.size(), '-') << '\n';
    ss << std::string(name_w, ' ');
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        ss << "  " << t.columns[i]
           << std::string(widths[i] - t.columns[i].size(), ' ');
    }
    ss << '\n';
    for (const auto& [name, cells] : t.rows) {
        ss << name << std::string(name_w - name.size(), ' ');
        for (std::size_t i = 0; i < cells.size(); ++i) {
            ss << "  " << cells[i] << std::string(widths[i] - cells[i].size(), ' ');
        }
        ss << '\n';
    }
    ss << '\n';
    return ss.str();
}

}  // namespace

std::string render_grid_table(const std::vector<RunReport>& runs, bool weighted,
                              ReportFormat format) {
    if (runs.empty()) throw DataError("render: no reports");
    if (format == ReportFormat::JSON) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : runs) {
            ordered_json j = nlohmann::ordered_json::parse(eval_report_to_json(r.report));
            j["backbone_id"] = r.backbone_id;
            j["epochs"] = r.epochs;
            j["learning_rate"] = r.learning_rate;
            arr.push_back(j);
        }
        return arr.dump(2) + "\n";
    }
    // column per (epochs, lr), ordered by epochs then lr
    std::vector<std::pair<int, double>> cells;
    for (const auto& r : runs) {
        std::pair<int, double> key{r.epochs, r.learning_rate};
        if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
    }
    std::sort(cells.begin(), cells.end());
    std::vector<std::string> backbones;
    for (const auto& r : runs) {
        if (std::find(backbones.begin(), backbones.end(), r.backbone_id) == backbones.end()) {
            backbones.push_back(r.backbone_id);
        }
    }
    TableData t;
    t.title = std::string("Epochs, learning rates (") + (weighted ? "weighted" : "macro") +
              " avg.)";
    if (!runs.empty()) t.title += " " + runs.front().report.pair_name();
    for (const auto& [ep, lr] : cells) t.columns.push_back(cell_label(ep, lr));
    for (const auto& b : backbones) {
        std::vector<std::string> row(cells.size(), "-");
        for (const auto& r : runs) {
            if (r.backbone_id != b) continue;
            const auto it = std::find(cells.begin(), cells.end(),
                                      std::pair<int, double>{r.epochs, r.learning_rate});
            const auto idx = static_cast<std::size_t>(it - cells.begin());
            row[idx] = format_metric(weighted ? r.report.weighted_avg_f1
                                              : r.report.macro_avg_f1);
        }
        t.rows.emplace_back(b, std::move(row));
    }
    return render_table(t, format);
}

std::string render_pairs_table(const CrossLingualMatrix& matrix, bool weighted,
                               ReportFormat format) {
    if (format == ReportFormat::JSON) {
        ordered_json j;
        for (const auto& [backbone, pairs] : matrix.best) {
            for (const auto& [pair, rep] : pairs) {
                j[backbone][pair] = nlohmann::ordered_json::parse(eval_report_to_json(rep));
            }
        }
        return j.dump(2) + "\n";
    }
    std::vector<std::string> pair_cols;
    for (const auto& [_, pairs] : matrix.best) {
        for (const auto& [pair, __] : pairs) {
            if (std::find(pair_cols.begin(), pair_cols.end(), pair) == pair_cols.end()) {
                pair_cols.push_back(pair);
            }
        }
    }
    std::sort(pair_cols.begin(), pair_cols.end());
    TableData t;
    t.title = std::string("Language pairs (") + (weighted ? "weighted" : "macro") + " avg.)";
    t.columns = pair_cols;
    for (const auto& [backbone, pairs] : matrix.best) {
        std::vector<std::string> row(pair_cols.size(), "-");
        for (const auto& [pair, rep] : pairs) {
            const auto it = std::find(pair_cols.begin(), pair_cols.end(), pair);
            row[static_cast<std::size_t>(it - pair_cols.begin())] =
                format_metric(weighted ? rep.weighted_avg_f1 : rep.macro_avg_f1);
        }
        t.rows.emplace_back("best " + backbone, std::move(row));
    }
    return render_table(t, format);
}

std::string render_report(const std::vector<RunReport>& runs, ReportFormat format) {
    if (runs.empty()) throw DataError("render_report: no reports");
    if (format == ReportFormat::JSON) {
        return render_grid_table(runs, false, format);
    }
    // group grid tables by language pair
    std::vector<std::string> pairs;
    for (const auto& r : runs) {
        const std::string p = r.report.pair_name();
        if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
    }
    std::ostringstream ss;
    for (const auto& p : pairs) {
        std::vector<RunReport> subset;
        for (const auto& r : runs) {
            if (r.report.pair_name() == p) subset.push_back(r);
        }
        ss << render_grid_table(subset, false, format);
        ss << render_grid_table(subset, true, format);
    }
    const CrossLingualMatrix matrix = cross_lingual_matrix(runs);
    if (!matrix.best.empty()) {
        ss << render_pairs_table(matrix, false, format);
        ss << render_pairs_table(matrix, true, format);
    }
    return ss.str();
}

}  // namespace xhate
