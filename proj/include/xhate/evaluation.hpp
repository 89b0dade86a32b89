#pragma once

// Confusion matrices, per-class precision/recall/F1, macro and weighted
// averages, and the rendered results tables.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "xhate/encoding.hpp"
#include "xhate/model.hpp"

namespace xhate {

struct ConfusionMatrix {
    // counts[gold][predicted]
    std::array<std::array<long, 2>, 2> counts{{{0, 0}, {0, 0}}};

    long total() const {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
};

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& predicted);

struct ClassMetrics {
    struct One {
        double precision = 0.0;
        double recall = 0.0;
        double f1 = 0.0;
        long support = 0;
        bool degenerate = false;  // a zero denominator was mapped to 0
    };
    std::array<One, 2> per_class;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);

double macro_avg(const ClassMetrics& metrics);
double weighted_avg(const ClassMetrics& metrics);

struct EvalReport {
    ConfusionMatrix confusion;
    ClassMetrics metrics;
    double macro_avg_f1 = 0.0;
    double weighted_avg_f1 = 0.0;
    double accuracy = 0.0;
    std::string train_lang;
    std::string test_lang;
    std::string run_id;
    bool degenerate = false;

    std::string pair_name() const { return train_lang + "-" + test_lang; }
};

EvalReport evaluate(const HeadParams& params, const HeadSpec& spec,
                    const FeatureMatrix& features, const std::vector<int>& gold,
                    const std::string& train_lang, const std::string& test_lang,
                    const std::string& run_id);

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);

// A trained run together with its evaluation, as the grid runner emits them.
struct RunReport {
    std::string run_id;
    std::string backbone_id;
    int epochs = 0;
    double learning_rate = 0.0;
    EvalReport report;
};

// Best report per (backbone, train_lang-test_lang); ties go to the lower
// run id. Pairs outside {en,fr} x {en,fr} are dropped with a warning.
struct CrossLingualMatrix {
    std::map<std::string, std::map<std::string, EvalReport>> best;  // backbone -> pair -> report
    std::vector<std::string> warnings;
};

CrossLingualMatrix cross_lingual_matrix(const std::vector<RunReport>& runs);

enum class ReportFormat { TEXT, JSON, MARKDOWN };

ReportFormat report_format_from_name(const std::string& name);

// Two-decimal half-up rendering used by all tables.
std::string format_metric(double v);

// Grid-shaped table: one row per backbone, one column per (epochs, lr) cell.
std::string render_grid_table(const std::vector<RunReport>& runs, bool weighted,
                              ReportFormat format);

// Language-pair table from the best variants per backbone.
std::string render_pairs_table(const CrossLingualMatrix& matrix, bool weighted,
                               ReportFormat format);

// Full document over a set of runs: macro + weighted grid tables per test
// language, plus best-variant pair tables. JSON emits full precision.
std::string render_report(const std::vector<RunReport>& runs, ReportFormat format);

}  // namespace xhate
