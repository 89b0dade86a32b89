#include "xhate/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"

namespace xhate {

using ordered_json = nlohmann::ordered_json;

std::string_view optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::ADAM ? "adam" : "adamw";
}

OptimizerKind optimizer_from_name(std::string_view name) {
    if (name == "adam") return OptimizerKind::ADAM;
    if (name == "adamw") return OptimizerKind::ADAMW;
    throw ConfigError("unknown optimizer '" + std::string(name) + "' (adam|adamw)");
}

void HyperParams::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
}

HeadSpec HyperParams::head_spec(int d_model) const {
    HeadSpec spec;
    spec.d_model = d_model;
    spec.d_hidden = d_hidden;
    spec.dropout_p = dropout_p;
    spec.extra_dense = extra_dense;
    spec.use_dropout = use_dropout;
    spec.validate();
    return spec;
}

std::string hyperparams_to_json(const HyperParams& hp) {
    ordered_json j;
    j["learning_rate"] = hp.learning_rate;
    j["epochs"] = hp.epochs;
    j["batch_size"] = hp.batch_size;
    j["optimizer"] = std::string(optimizer_name(hp.optimizer));
    j["weight_decay"] = hp.weight_decay;
    j["seed"] = hp.seed;
    j["max_seq_len"] = hp.max_seq_len;
    j["d_hidden"] = hp.d_hidden;
    j["dropout_p"] = hp.dropout_p;
    j["extra_dense"] = hp.extra_dense;
    j["use_dropout"] = hp.use_dropout;
    return j.dump();
}

HyperParams hyperparams_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    HyperParams hp;
    if (j.contains("learning_rate")) hp.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) hp.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) hp.batch_size = j["batch_size"].get<int>();
    if (j.contains("optimizer")) {
        hp.optimizer = optimizer_from_name(j["optimizer"].get<std::string>());
    }
    if (j.contains("weight_decay")) hp.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("seed")) hp.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_seq_len")) hp.max_seq_len = j["max_seq_len"].get<int>();
    if (j.contains("d_hidden")) hp.d_hidden = j["d_hidden"].get<int>();
    if (j.contains("dropout_p")) hp.dropout_p = j["dropout_p"].get<double>();
    if (j.contains("extra_dense")) hp.extra_dense = j["extra_dense"].get<bool>();
    if (j.contains("use_dropout")) hp.use_dropout = j["use_dropout"].get<bool>();
    hp.validate();
    return hp;
}

// --- optimizers ------------------------------------------------------------------

OptimizerState OptimizerState::for_params(const HeadParams& params) {
    OptimizerState s;
    s.m.assign(params.count(), 0.0);
    s.v.assign(params.count(), 0.0);
    return s;
}

namespace {

void adaptive_update(HeadParams& params, const HeadGrads& grads, OptimizerState& state,
                     double lr) {
    if (state.m.size() != params.count()) {
        throw ConfigError("optimizer state does not match parameter shapes");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for_each_param(params, grads, [&](double& p, double g, std::size_t i) {
        if (!std::isfinite(g)) throw NumericError("optimizer: non-finite gradient");
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    });
}

}  // namespace

void adam_step(HeadParams& params, const HeadGrads& grads, OptimizerState& state,
               double learning_rate) {
    if (!(learning_rate > 0.0)) throw ConfigError("adam_step: learning rate must be > 0");
    adaptive_update(params, grads, state, learning_rate);
}

void adamw_step(HeadParams& params, const HeadGrads& grads, OptimizerState& state,
                double learning_rate, double weight_decay) {
    if (!(learning_rate > 0.0)) throw ConfigError("adamw_step: learning rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("adamw_step: weight decay must be >= 0");
    if (weight_decay > 0.0) {
        for_each_param(params, grads, [&](double& p, double, std::size_t) {
            p -= learning_rate * weight_decay * p;
        });
    }
    adaptive_update(params, grads, state, learning_rate);
}

// --- samplers ---------------------------------------------------------------------

Samplers make_samplers(std::size_t train_n, std::size_t val_n, std::uint64_t seed) {
    if (train_n == 0 || val_n == 0) {
        throw DataError("make_samplers: corpora must be non-empty");
    }
    return {train_n, val_n, seed};
}

std::vector<std::size_t> Samplers::train_epoch(int epoch) const {
    std::vector<std::size_t> order(train_n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed ^ static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    return order;
}

std::vector<std::size_t> Samplers::val() const {
    std::vector<std::size_t> order(val_n);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

// --- training loop ------------------------------------------------------------------

namespace {

double clip_gradients(HeadGrads& grads, double max_norm) {
    const auto arrays = {&grads.w1, &grads.b1, &grads.w1b, &grads.b1b, &grads.w2, &grads.b2};
    double sq = 0.0;
    for (auto* vec : arrays) {
        for (double g : *vec) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto* vec : arrays) {
            for (double& g : *vec) g *= scale;
        }
        return max_norm;
    }
    return norm;
}

double eval_loss(const FeatureMatrix& features, const std::vector<int>& labels,
                 const HeadParams& params, const HeadSpec& spec,
                 const ClassWeights& weights) {
    std::vector<std::array<double, 2>> probs;
    probs.reserve(features.n());
    const auto d = static_cast<std::size_t>(features.d_model);
    for (std::size_t i = 0; i < features.n(); ++i) {
        probs.push_back(
            head_forward(std::span<const float>(features.row(i), d), params, spec, Mode::EVAL)
                .probs);
    }
    return weighted_cross_entropy(probs, labels, weights);
}

}  // namespace

TrainResult train(const FeatureMatrix& train_features, const std::vector<int>& train_labels,
                  const FeatureMatrix& val_features, const std::vector<int>& val_labels,
                  const ClassWeights& weights, const HyperParams& hp,
                  const std::string& run_id) {
    hp.validate();
    if (train_features.n() == 0) throw DataError("train: empty training set");
    if (train_features.n() != train_labels.size() || val_features.n() != val_labels.size()) {
        throw DataError("train: features and labels are not aligned");
    }
    if (val_features.n() == 0) throw DataError("train: empty validation set");
    const auto start = std::chrono::steady_clock::now();

    const HeadSpec spec = hp.head_spec(train_features.d_model);
    HeadParams params = init_head(spec, hp.seed);
    OptimizerState state = OptimizerState::for_params(params);
    Samplers samplers = make_samplers(train_features.n(), val_features.n(), hp.seed);
    Rng dropout_rng(mix64(hp.seed ^ 0x64726F70ULL));  // "drop"

    TrainRun run;
    run.run_id = run_id;
    run.hyperparams = hp;
    const auto batch = static_cast<std::size_t>(hp.batch_size);

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        const auto order = samplers.train_epoch(epoch);
        double loss_weighted = 0.0;
        double weight_total = 0.0;
        for (std::size_t at = 0; at < order.size(); at += batch) {
            const std::size_t end = std::min(order.size(), at + batch);
            std::vector<const float*> rows;
            std::vector<int> gold;
            rows.reserve(end - at);
            gold.reserve(end - at);
            for (std::size_t k = at; k < end; ++k) {
                rows.push_back(train_features.row(order[k]));
                gold.push_back(train_labels[order[k]]);
            }
            BatchGradients bg;
            try {
                bg = head_gradients(rows, gold, params, spec, weights, Mode::TRAIN,
                                    nullptr, &dropout_rng);
                const double post_clip = clip_gradients(bg.grads, 1.0);
                run.max_post_clip_norm = std::max(run.max_post_clip_norm, post_clip);
                if (hp.optimizer == OptimizerKind::ADAMW) {
                    adamw_step(params, bg.grads, state, hp.learning_rate, hp.weight_decay);
                } else {
                    adam_step(params, bg.grads, state, hp.learning_rate);
                }
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(at / batch) + ": " + e.what());
            }
            loss_weighted += bg.loss * bg.weight_sum;
            weight_total += bg.weight_sum;
        }
        run.train_loss.push_back(loss_weighted / weight_total);
        run.val_loss.push_back(eval_loss(val_features, val_labels, params, spec, weights));
    }

    run.head_digest = hex64(head_params_digest(params, spec));
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(run), std::move(params), spec};
}

std::string loss_history_to_json(const TrainRun& run) {
    ordered_json j;
    j["run_id"] = run.run_id;
    ordered_json tr = ordered_json::array();
    for (double v : run.train_loss) tr.push_back(v);
    ordered_json va = ordered_json::array();
    for (double v : run.val_loss) va.push_back(v);
    j["train_loss"] = tr;
    j["val_loss"] = va;
    j["max_post_clip_norm"] = run.max_post_clip_norm;
    return j.dump(2) + "\n";
}

// --- grid -------------------------------------------------------------------------

std::vector<GridCell> grid_cells_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty()) {
        throw ConfigError("grid config must hold a non-empty 'cells' array");
    }
    std::vector<GridCell> cells;
    std::set<std::string> ids;
    std::size_t index = 0;
    for (const auto& cj : j["cells"]) {
        GridCell cell;
        cell.hp = hyperparams_from_json(cj.dump());
        if (cj.contains("backbone")) cell.backbone_id = cj["backbone"].get<std::string>();
        if (cj.contains("run_id")) {
            cell.run_id = cj["run_id"].get<std::string>();
        } else {
            cell.run_id = "cell-" + std::to_string(index) + "-" + cell.backbone_id + "-e" +
                          std::to_string(cell.hp.epochs) + "-lr" +
                          format_double(cell.hp.learning_rate);
        }
        if (!ids.insert(cell.run_id).second) {
            throw ConfigError("grid: duplicate run_id '" + cell.run_id + "'");
        }
        cells.push_back(std::move(cell));
        ++index;
    }
    return cells;
}

std::vector<CellOutcome> run_grid(
    const std::vector<GridCell>& cells, int jobs,
    const std::function<std::pair<TrainRun, EvalReport>(const GridCell&)>& execute) {
    if (cells.empty()) throw ConfigError("run_grid: no cells");
    {
        std::set<std::string> ids;
        for (const auto& c : cells) {
            if (!ids.insert(c.run_id).second) {
                throw ConfigError("run_grid: duplicate run_id '" + c.run_id + "'");
            }
        }
    }
    std::vector<CellOutcome> outcomes(cells.size());
    auto work_one = [&](std::size_t i) {
        outcomes[i].cell = cells[i];
        try {
            auto [run, report] = execute(cells[i]);
            outcomes[i].run = std::move(run);
            outcomes[i].report = std::move(report);
            outcomes[i].ok = true;
        } catch (const std::exception& e) {
            outcomes[i].ok = false;
            outcomes[i].error = e.what();
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) work_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size();
                     i = next.fetch_add(1)) {
                    work_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

}  // namespace xhate
