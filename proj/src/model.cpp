#include "xhate/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"

namespace xhate {

void HeadSpec::validate() const {
    if (d_model < 1) throw ConfigError("head: d_model must be >= 1");
    if (d_hidden < 1) throw ConfigError("head: d_hidden must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
        throw ConfigError("head: dropout_p must lie in [0, 1)");
    }
}

HeadGrads zero_grads_like(const HeadParams& params) {
    HeadGrads g;
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(params.b1.size(), 0.0);
    g.w1b.assign(params.w1b.size(), 0.0);
    g.b1b.assign(params.b1b.size(), 0.0);
    g.w2.assign(params.w2.size(), 0.0);
    g.b2.assign(params.b2.size(), 0.0);
    return g;
}

HeadParams init_head(const HeadSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto d_in = static_cast<std::size_t>(spec.d_model);
    const auto d_h = static_cast<std::size_t>(spec.d_hidden);
    Rng rng(mix64(seed ^ 0x68656164ULL));  // "head"
    auto glorot = [&](std::vector<double>& w, std::size_t fan_out, std::size_t fan_in) {
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        w.resize(fan_out * fan_in);
        for (auto& v : w) v = rng.uniform(-s, s);
    };
    HeadParams p;
    glorot(p.w1, d_h, d_in);
    p.b1.assign(d_h, 0.0);
    if (spec.extra_dense) {
        glorot(p.w1b, d_h, d_h);
        p.b1b.assign(d_h, 0.0);
    }
    glorot(p.w2, 2, d_h);
    p.b2.assign(2, 0.0);
    return p;
}

namespace {

std::array<double, 2> softmax2(std::array<double, 2> logits) {
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

std::vector<std::uint8_t> draw_mask(std::size_t n, double p, Rng& rng) {
    std::vector<std::uint8_t> mask(n);
    for (auto& m : mask) m = rng.uniform() >= p ? 1 : 0;
    return mask;
}

}  // namespace

Forward head_forward(std::span<const float> x, const HeadParams& params,
                     const HeadSpec& spec, Mode mode,
                     const std::vector<std::uint8_t>* dropout_mask, Rng* rng) {
    const auto d_in = static_cast<std::size_t>(spec.d_model);
    const auto d_h = static_cast<std::size_t>(spec.d_hidden);
    if (x.size() != d_in) {
        throw NumericError("head_forward: input width " + std::to_string(x.size()) +
                           " does not match d_model " + std::to_string(spec.d_model));
    }
    for (float v : x) {
        if (!std::isfinite(v)) throw NumericError("head_forward: non-finite input feature");
    }

    Forward f;
    f.z1.resize(d_h);
    f.h1.resize(d_h);
    for (std::size_t j = 0; j < d_h; ++j) {
        double z = params.b1[j];
        const double* wrow = params.w1.data() + j * d_in;
        for (std::size_t k = 0; k < d_in; ++k) z += wrow[k] * static_cast<double>(x[k]);
        f.z1[j] = z;
        f.h1[j] = z > 0.0 ? z : 0.0;
    }

    const std::vector<double>* hidden = &f.h1;
    if (spec.extra_dense) {
        f.z1b.resize(d_h);
        f.h1b.resize(d_h);
        for (std::size_t j = 0; j < d_h; ++j) {
            double z = params.b1b[j];
            const double* wrow = params.w1b.data() + j * d_h;
            for (std::size_t k = 0; k < d_h; ++k) z += wrow[k] * f.h1[k];
            f.z1b[j] = z;
            f.h1b[j] = z > 0.0 ? z : 0.0;
        }
        hidden = &f.h1b;
    }

    f.h_dropped = *hidden;
    if (mode == Mode::TRAIN && spec.use_dropout) {
        if (dropout_mask) {
            f.mask_used = *dropout_mask;
        } else if (rng) {
            f.mask_used = draw_mask(d_h, spec.dropout_p, *rng);
        } else {
            throw ConfigError("head_forward: TRAIN mode with dropout needs a mask or an rng");
        }
        if (f.mask_used.size() != d_h) {
            throw ConfigError("head_forward: dropout mask width mismatch");
        }
        const double scale = 1.0 / (1.0 - spec.dropout_p);  // inverted dropout
        for (std::size_t j = 0; j < d_h; ++j) {
            f.h_dropped[j] = f.mask_used[j] ? f.h_dropped[j] * scale : 0.0;
        }
    }

    for (std::size_t c = 0; c < 2; ++c) {
        double z = params.b2[c];
        const double* wrow = params.w2.data() + c * d_h;
        for (std::size_t j = 0; j < d_h; ++j) z += wrow[j] * f.h_dropped[j];
        f.logits[c] = z;
    }
    f.probs = softmax2(f.logits);
    return f;
}

Prediction predict(std::span<const float> x, const HeadParams& params, const HeadSpec& spec) {
    Forward f = head_forward(x, params, spec, Mode::EVAL);
    Prediction p;
    p.probs = f.probs;
    p.label = f.probs[1] > f.probs[0] ? 1 : 0;
    return p;
}

double weighted_cross_entropy(const std::vector<std::array<double, 2>>& probs,
                              const std::vector<int>& gold, const ClassWeights& weights) {
    if (probs.empty()) throw DataError("weighted_cross_entropy: empty batch has no loss");
    if (probs.size() != gold.size()) {
        throw DataError("weighted_cross_entropy: probs/labels length mismatch");
    }
    if (!(weights.w[0] > 0.0 && weights.w[1] > 0.0)) {
        throw ConfigError("weighted_cross_entropy: class weights must be positive");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (std::abs(probs[i][0] + probs[i][1] - 1.0) > 1e-6) {
            throw NumericError("weighted_cross_entropy: probs row does not sum to 1");
        }
        const int y = gold[i];
        const double w = weights.w[static_cast<std::size_t>(y)];
        const double p = std::max(probs[i][static_cast<std::size_t>(y)], 1e-12);
        num += w * (-std::log(p));
        den += w;
    }
    return num / den;
}

BatchGradients head_gradients(const std::vector<const float*>& rows,
                              const std::vector<int>& gold, const HeadParams& params,
                              const HeadSpec& spec, const ClassWeights& weights,
                              Mode mode,
                              const std::vector<std::vector<std::uint8_t>>* masks,
                              Rng* rng) {
    if (rows.empty()) throw DataError("head_gradients: empty batch");
    if (rows.size() != gold.size()) throw DataError("head_gradients: batch size mismatch");
    const auto d_in = static_cast<std::size_t>(spec.d_model);
    const auto d_h = static_cast<std::size_t>(spec.d_hidden);
    const bool dropping = mode == Mode::TRAIN && spec.use_dropout;
    if (dropping && masks && !masks->empty() && masks->size() != rows.size()) {
        throw ConfigError("head_gradients: one dropout mask per sample required");
    }

    BatchGradients out;
    out.grads = zero_grads_like(params);
    double weight_sum = 0.0;
    for (int y : gold) weight_sum += weights.w[static_cast<std::size_t>(y)];
    out.weight_sum = weight_sum;

    const double inv_keep = 1.0 / (1.0 - spec.dropout_p);
    double loss_num = 0.0;
    std::vector<double> d_hidden(d_h), d_h1(d_h);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::vector<std::uint8_t>* mask = nullptr;
        if (dropping && masks && !masks->empty()) mask = &(*masks)[i];
        Forward f = head_forward(std::span<const float>(rows[i], d_in), params, spec,
                                 mode, mask, rng);
        const auto y = static_cast<std::size_t>(gold[i]);
        const double w = weights.w[y];
        loss_num += w * (-std::log(std::max(f.probs[y], 1e-12)));

        // d loss / d logits for the weighted mean: (w_i / W) * (p - onehot(y))
        std::array<double, 2> d_logits{};
        for (std::size_t c = 0; c < 2; ++c) {
            d_logits[c] = (w / weight_sum) * (f.probs[c] - (c == y ? 1.0 : 0.0));
        }
        for (std::size_t c = 0; c < 2; ++c) {
            double* grow = out.grads.w2.data() + c * d_h;
            for (std::size_t j = 0; j < d_h; ++j) grow[j] += d_logits[c] * f.h_dropped[j];
            out.grads.b2[c] += d_logits[c];
        }
        for (std::size_t j = 0; j < d_h; ++j) {
            d_hidden[j] = params.w2[j] * d_logits[0] + params.w2[d_h + j] * d_logits[1];
        }
        if (dropping) {
            // h_dropped = hidden * mask / (1-p)
            for (std::size_t j = 0; j < d_h; ++j) {
                d_hidden[j] = f.mask_used[j] ? d_hidden[j] * inv_keep : 0.0;
            }
        }

        const std::vector<double>& final_pre = spec.extra_dense ? f.z1b : f.z1;
        if (spec.extra_dense) {
            // through the second dense layer
            for (std::size_t j = 0; j < d_h; ++j) {
                const double dz = final_pre[j] > 0.0 ? d_hidden[j] : 0.0;
                double* grow = out.grads.w1b.data() + j * d_h;
                for (std::size_t k = 0; k < d_h; ++k) grow[k] += dz * f.h1[k];
                out.grads.b1b[j] += dz;
            }
            for (std::size_t k = 0; k < d_h; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d_h; ++j) {
                    const double dz = final_pre[j] > 0.0 ? d_hidden[j] : 0.0;
                    acc += params.w1b[j * d_h + k] * dz;
                }
                d_h1[k] = acc;
            }
        } else {
            d_h1 = d_hidden;
        }
        for (std::size_t j = 0; j < d_h; ++j) {
            const double dz = f.z1[j] > 0.0 ? d_h1[j] : 0.0;
            if (dz == 0.0) continue;
            double* grow = out.grads.w1.data() + j * d_in;
            const float* x = rows[i];
            for (std::size_t k = 0; k < d_in; ++k) grow[k] += dz * static_cast<double>(x[k]);
            out.grads.b1[j] += dz;
        }
    }
    out.loss = loss_num / weight_sum;
    return out;
}

// --- persistence ----------------------------------------------------------------

namespace {

nlohmann::ordered_json array_json(const std::vector<double>& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double x : v) arr.push_back(format_double(x));
    return arr;
}

std::vector<double> array_from_json(const nlohmann::json& arr) {
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& e : arr) v.push_back(std::stod(e.get<std::string>()));
    return v;
}

}  // namespace

std::string head_params_to_json(const HeadParams& params, const HeadSpec& spec) {
    nlohmann::ordered_json j;
    j["d_model"] = spec.d_model;
    j["d_hidden"] = spec.d_hidden;
    j["dropout_p"] = format_double(spec.dropout_p);
    j["extra_dense"] = spec.extra_dense;
    j["use_dropout"] = spec.use_dropout;
    j["shapes"]["w1"] = {spec.d_hidden, spec.d_model};
    j["shapes"]["w1b"] = spec.extra_dense
                             ? nlohmann::ordered_json({spec.d_hidden, spec.d_hidden})
                             : nlohmann::ordered_json({0, 0});
    j["shapes"]["w2"] = {2, spec.d_hidden};
    j["w1"] = array_json(params.w1);
    j["b1"] = array_json(params.b1);
    j["w1b"] = array_json(params.w1b);
    j["b1b"] = array_json(params.b1b);
    j["w2"] = array_json(params.w2);
    j["b2"] = array_json(params.b2);
    return j.dump(2) + "\n";
}

std::pair<HeadParams, HeadSpec> head_params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    HeadSpec spec;
    spec.d_model = j.at("d_model").get<int>();
    spec.d_hidden = j.at("d_hidden").get<int>();
    spec.dropout_p = std::stod(j.at("dropout_p").get<std::string>());
    spec.extra_dense = j.at("extra_dense").get<bool>();
    spec.use_dropout = j.at("use_dropout").get<bool>();
    spec.validate();
    HeadParams p;
    p.w1 = array_from_json(j.at("w1"));
    p.b1 = array_from_json(j.at("b1"));
    p.w1b = array_from_json(j.at("w1b"));
    p.b1b = array_from_json(j.at("b1b"));
    p.w2 = array_from_json(j.at("w2"));
    p.b2 = array_from_json(j.at("b2"));
    const auto d_in = static_cast<std::size_t>(spec.d_model);
    const auto d_h = static_cast<std::size_t>(spec.d_hidden);
    if (p.w1.size() != d_h * d_in || p.b1.size() != d_h || p.w2.size() != 2 * d_h ||
        p.b2.size() != 2 ||
        p.w1b.size() != (spec.extra_dense ? d_h * d_h : 0) ||
        p.b1b.size() != (spec.extra_dense ? d_h : 0)) {
        throw DataError("head params file: array shapes do not match the declared spec");
    }
    return {std::move(p), spec};
}

std::uint64_t head_params_digest(const HeadParams& params, const HeadSpec& spec) {
    return fnv1a64(head_params_to_json(params, spec));
}

}  // namespace xhate
