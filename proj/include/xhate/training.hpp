#pragma once

// Head-only training: seeded samplers, Adam/AdamW, class-weighted loss with
// gradient clipping, and the hyperparameter grid runner.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xhate/encoding.hpp"
#include "xhate/evaluation.hpp"
#include "xhate/model.hpp"

namespace xhate {

enum class OptimizerKind { ADAM, ADAMW };

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(std::string_view name);

struct HyperParams {
    double learning_rate = 1e-4;
    int epochs = 5;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::ADAM;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    int max_seq_len = 32;
    // head overrides
    int d_hidden = 512;
    double dropout_p = 0.1;
    bool extra_dense = false;
    bool use_dropout = true;

    void validate() const;
    HeadSpec head_spec(int d_model) const;
};

std::string hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const std::string& text);

struct OptimizerState {
    std::vector<double> m;  // first moments, flat over all head parameters
    std::vector<double> v;  // second moments
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimizerState for_params(const HeadParams& params);
};

void adam_step(HeadParams& params, const HeadGrads& grads, OptimizerState& state,
               double learning_rate);

// Decoupled weight decay applied before the adaptive update.
void adamw_step(HeadParams& params, const HeadGrads& grads, OptimizerState& state,
                double learning_rate, double weight_decay);

// Train order: fresh seeded shuffle per epoch (seed xor epoch).
// Validation order: fixed sequential.
struct Samplers {
    std::size_t train_n = 0;
    std::size_t val_n = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> train_epoch(int epoch) const;
    std::vector<std::size_t> val() const;
};

Samplers make_samplers(std::size_t train_n, std::size_t val_n, std::uint64_t seed);

struct TrainRun {
    std::string run_id;
    HyperParams hyperparams;
    std::string backbone_id;
    std::string train_lang;
    std::string test_lang;
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;
    std::string head_digest;  // hex of the final head-params file digest
    double max_post_clip_norm = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    TrainRun run;
    HeadParams params;
    HeadSpec spec;
};

// Features are frozen constants of training; only the head updates.
TrainResult train(const FeatureMatrix& train_features, const std::vector<int>& train_labels,
                  const FeatureMatrix& val_features, const std::vector<int>& val_labels,
                  const ClassWeights& weights, const HyperParams& hp,
                  const std::string& run_id = "run");

std::string loss_history_to_json(const TrainRun& run);

// --- grid ----------------------------------------------------------------------

struct GridCell {
    std::string run_id;
    std::string backbone_id = "stub-32";
    HyperParams hp;
};

std::vector<GridCell> grid_cells_from_json(const std::string& text);

struct CellOutcome {
    GridCell cell;
    bool ok = false;
    std::string error;
    TrainRun run;
    EvalReport report;
};

// Executes every cell independently; a failing cell is recorded and the rest
// still run. jobs > 1 fans out to a bounded worker pool.
std::vector<CellOutcome> run_grid(
    const std::vector<GridCell>& cells, int jobs,
    const std::function<std::pair<TrainRun, EvalReport>(const GridCell&)>& execute);

}  // namespace xhate
