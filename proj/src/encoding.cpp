#include "xhate/encoding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"
#include "xhate/text.hpp"
#include "xhate/util.hpp"

namespace xhate {

void TokenizerSpec::validate() const {
    if (pad_id == unk_id) throw ConfigError("tokenizer: pad_id must differ from unk_id");
    if (pad_id >= vocab_size || unk_id >= vocab_size || bos_id >= vocab_size) {
        throw ConfigError("tokenizer: reserved ids must be < vocab_size");
    }
    if (first_regular_id() >= vocab_size) {
        throw ConfigError("tokenizer: vocab_size leaves no room for regular tokens");
    }
}

std::uint32_t TokenizerSpec::first_regular_id() const {
    return std::max({pad_id, unk_id, bos_id}) + 1;
}

Tokenizer::Tokenizer(TokenizerSpec spec) : spec_(spec) { spec_.validate(); }

std::vector<std::uint32_t> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::uint32_t> out;
    const std::uint32_t base = spec_.first_regular_id();
    const std::uint64_t range = spec_.vocab_size - base;
    std::size_t i = 0;
    std::size_t token_start = 0;
    bool in_token = false;
    auto flush = [&](std::size_t end) {
        if (!in_token) return;
        std::string_view token = text.substr(token_start, end - token_start);
        out.push_back(base + static_cast<std::uint32_t>(fnv1a64(token) % range));
        in_token = false;
    };
    while (i < text.size()) {
        const std::size_t at = i;
        std::uint32_t cp = utf8_decode(text, i);
        if (is_space_cp(cp)) {
            flush(at);
        } else if (!in_token) {
            in_token = true;
            token_start = at;
        }
    }
    flush(text.size());
    return out;
}

std::size_t Tokenizer::token_count(std::string_view text) const {
    return whitespace_token_count(text);
}

void EncoderConfig::validate() const {
    if (d_model < 2) throw ConfigError("encoder: d_model must be >= 2");
    if (max_seq_len < 1) throw ConfigError("encoder: max_seq_len must be >= 1");
}

std::uint64_t FeatureMatrix::digest() const {
    std::uint64_t h = fnv1a64(rows.data(), rows.size() * sizeof(float));
    for (const auto& id : sample_ids) {
        h = fnv1a64(id.data(), id.size(), h);
        h = fnv1a64("\x1e", 1, h);
    }
    h = fnv1a64(&encoder_fingerprint, sizeof(encoder_fingerprint), h);
    return h;
}

int choose_max_seq_len(const std::map<std::size_t, std::size_t>& histogram,
                       int lower_bound, int upper_bound, double coverage) {
    if (histogram.empty()) throw DataError("choose_max_seq_len: empty histogram");
    if (lower_bound > upper_bound) {
        throw ConfigError("choose_max_seq_len: lower bound exceeds upper bound");
    }
    if (!(coverage > 0.0 && coverage <= 1.0)) {
        throw ConfigError("choose_max_seq_len: coverage must be in (0, 1]");
    }
    std::size_t total = 0;
    for (const auto& [len, count] : histogram) total += count;
    const double target = coverage * static_cast<double>(total);
    std::size_t cumulative = 0;
    std::size_t chosen = histogram.rbegin()->first;
    for (const auto& [len, count] : histogram) {
        cumulative += count;
        if (static_cast<double>(cumulative) >= target - 1e-9) {
            chosen = len;
            break;
        }
    }
    const auto len = static_cast<long long>(chosen);
    return static_cast<int>(std::clamp<long long>(len, lower_bound, upper_bound));
}

TokenBatch encode_batch(const std::vector<std::string>& texts,
                        const Tokenizer& tokenizer, int max_seq_len) {
    if (max_seq_len < 1) throw ConfigError("encode_batch: max_seq_len must be >= 1");
    TokenBatch batch;
    batch.n = texts.size();
    batch.max_seq_len = max_seq_len;
    const auto width = static_cast<std::size_t>(max_seq_len);
    batch.ids.assign(batch.n * width, tokenizer.spec().pad_id);
    batch.mask.assign(batch.n * width, 0);
    batch.lengths.resize(batch.n);
    for (std::size_t r = 0; r < texts.size(); ++r) {
        auto ids = tokenizer.tokenize(texts[r]);
        if (ids.empty()) ids.push_back(tokenizer.spec().unk_id);
        batch.lengths[r] = ids.size();
        const std::size_t keep = std::min(ids.size(), width);
        for (std::size_t j = 0; j < keep; ++j) {
            batch.ids[r * width + j] = ids[j];
            batch.mask[r * width + j] = 1;
        }
    }
    return batch;
}

// --- stub encoder ------------------------------------------------------------

double stub_embedding_value(std::uint64_t seed, std::uint32_t token_id, std::uint32_t dim) {
    std::uint64_t h = mix64(seed ^ kGolden64);
    h = mix64(h ^ token_id);
    h = mix64(h ^ dim);
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    return 2.0 * unit - 1.0;
}

StubEncoder::StubEncoder(EncoderConfig cfg)
    : StubEncoder(std::move(cfg), 0) {
    seed_ = fnv1a64(cfg_.backbone_id);
}

StubEncoder::StubEncoder(EncoderConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
    cfg_.validate();
}

std::uint64_t StubEncoder::fingerprint(const TokenizerSpec& tok) const {
    std::ostringstream ss;
    ss << "stub|" << cfg_.backbone_id << '|' << cfg_.d_model << '|' << cfg_.max_seq_len
       << '|' << seed_ << '|' << static_cast<int>(tok.kind) << '|' << tok.vocab_size
       << '|' << tok.pad_id << '|' << tok.unk_id << '|' << tok.bos_id;
    return fnv1a64(ss.str());
}

FeatureMatrix StubEncoder::encode(const TokenBatch& batch,
                                  const std::vector<std::string>& sample_ids) const {
    if (sample_ids.size() != batch.n) {
        throw DataError("encoder: sample id list does not match batch size");
    }
    FeatureMatrix fm;
    fm.d_model = cfg_.d_model;
    fm.sample_ids = sample_ids;
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto width = static_cast<std::size_t>(batch.max_seq_len);
    fm.rows.resize(batch.n * d);
    std::vector<double> acc(d);
    for (std::size_t r = 0; r < batch.n; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t count = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (!batch.mask[r * width + j]) continue;
            const std::uint32_t tok = batch.ids[r * width + j];
            for (std::size_t k = 0; k < d; ++k) {
                acc[k] += stub_embedding_value(seed_, tok, static_cast<std::uint32_t>(k));
            }
            ++count;
        }
        // encode_batch guarantees at least one unmasked position per row
        for (std::size_t k = 0; k < d; ++k) {
            fm.rows[r * d + k] = static_cast<float>(acc[k] / static_cast<double>(count));
        }
    }
    return fm;
}

// --- backbone adapter ----------------------------------------------------------

BackboneAdapter::BackboneAdapter(std::string artifact_dir, int max_seq_len) {
    namespace fs = std::filesystem;
    const fs::path dir(artifact_dir);
    const fs::path config_path = dir / "adapter.json";
    const fs::path pooled_path = dir / "pooled.xfc";
    if (!fs::exists(config_path)) {
        throw CapabilityError("backbone adapter artifact missing: " + config_path.string());
    }
    if (!fs::exists(pooled_path)) {
        throw CapabilityError("backbone adapter artifact missing: " + pooled_path.string());
    }
    std::ifstream in(config_path);
    nlohmann::json j = nlohmann::json::parse(in);
    cfg_.backbone_id = j.at("backbone_id").get<std::string>();
    cfg_.d_model = j.at("d_model").get<int>();
    cfg_.max_seq_len = max_seq_len;
    cfg_.validate();

    FeatureMatrix table = read_feature_cache(pooled_path.string(), 0);
    if (table.d_model != cfg_.d_model) {
        throw ConfigError("backbone adapter: pooled features have d_model " +
                          std::to_string(table.d_model) + ", config says " +
                          std::to_string(cfg_.d_model));
    }
    table_digest_ = table.digest();
    const auto d = static_cast<std::size_t>(table.d_model);
    for (std::size_t i = 0; i < table.n(); ++i) {
        pooled_[table.sample_ids[i]] =
            std::vector<float>(table.row(i), table.row(i) + d);
    }
}

std::uint64_t BackboneAdapter::fingerprint(const TokenizerSpec& tok) const {
    std::ostringstream ss;
    ss << "adapter|" << cfg_.backbone_id << '|' << cfg_.d_model << '|'
       << cfg_.max_seq_len << '|' << table_digest_ << '|' << static_cast<int>(tok.kind);
    return fnv1a64(ss.str());
}

FeatureMatrix BackboneAdapter::encode(const TokenBatch& batch,
                                      const std::vector<std::string>& sample_ids) const {
    if (sample_ids.size() != batch.n) {
        throw DataError("encoder: sample id list does not match batch size");
    }
    FeatureMatrix fm;
    fm.d_model = cfg_.d_model;
    fm.sample_ids = sample_ids;
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    fm.rows.resize(batch.n * d);
    for (std::size_t r = 0; r < batch.n; ++r) {
        auto it = pooled_.find(sample_ids[r]);
        if (it == pooled_.end()) {
            throw DataError("backbone adapter has no pooled representation for sample '" +
                            sample_ids[r] + "'");
        }
        std::copy(it->second.begin(), it->second.end(), fm.rows.begin() + r * d);
    }
    return fm;
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg,
                                      const std::string& adapter_dir) {
    if (cfg.backbone_id.rfind("stub", 0) == 0) {
        return std::make_unique<StubEncoder>(cfg);
    }
    if (adapter_dir.empty()) {
        throw CapabilityError("backbone '" + cfg.backbone_id +
                              "' needs an adapter artifact directory (--adapter-dir)");
    }
    auto adapter = std::make_unique<BackboneAdapter>(adapter_dir, cfg.max_seq_len);
    if (adapter->config().backbone_id != cfg.backbone_id) {
        throw ConfigError("adapter directory holds backbone '" +
                          adapter->config().backbone_id + "', expected '" +
                          cfg.backbone_id + "'");
    }
    return adapter;
}

// --- feature cache -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'X', 'F', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& s, std::size_t& at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]))
             << (8 * i);
    }
    at += 4;
    return v;
}

std::uint64_t get_u64(const std::string& s, std::size_t& at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]))
             << (8 * i);
    }
    at += 8;
    return v;
}

}  // namespace

void write_feature_cache(const FeatureMatrix& features, const std::string& path) {
    std::string out;
    out.reserve(28 + features.rows.size() * 4);
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, features.encoder_fingerprint);
    put_u32(out, static_cast<std::uint32_t>(features.d_model));
    put_u64(out, features.n());
    for (float f : features.rows) {
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    for (const auto& id : features.sample_ids) {
        put_u32(out, static_cast<std::uint32_t>(id.size()));
        out.append(id);
    }
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write feature cache " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

FeatureMatrix read_feature_cache(const std::string& path, std::uint64_t expected_fingerprint) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open feature cache " + path);
    std::ostringstream ss;
    ss << file.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < 28 || std::string_view(buf.data(), 4) != std::string_view(kMagic, 4)) {
        throw DataError("not a feature cache file: " + path);
    }
    std::size_t at = 4;
    const std::uint32_t version = get_u32(buf, at);
    if (version != kVersion) {
        throw StaleCacheError("feature cache " + path + " has version " +
                              std::to_string(version));
    }
    FeatureMatrix fm;
    fm.encoder_fingerprint = get_u64(buf, at);
    if (expected_fingerprint != 0 && fm.encoder_fingerprint != expected_fingerprint) {
        throw StaleCacheError("feature cache " + path +
                              " was built with a different encoder configuration");
    }
    fm.d_model = static_cast<int>(get_u32(buf, at));
    const std::uint64_t rows = get_u64(buf, at);
    const std::size_t value_count = rows * static_cast<std::size_t>(fm.d_model);
    if (buf.size() < at + value_count * 4) {
        throw DataError("feature cache " + path + " is truncated");
    }
    fm.rows.resize(value_count);
    for (std::size_t i = 0; i < value_count; ++i) {
        fm.rows[i] = std::bit_cast<float>(get_u32(buf, at));
    }
    fm.sample_ids.reserve(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        if (buf.size() < at + 4) throw DataError("feature cache id index truncated: " + path);
        const std::uint32_t len = get_u32(buf, at);
        if (buf.size() < at + len) throw DataError("feature cache id index truncated: " + path);
        fm.sample_ids.emplace_back(buf.data() + at, len);
        at += len;
    }
    return fm;
}

FeatureMatrix compute_features(const Corpus& corpus, const Tokenizer& tokenizer,
                               const Encoder& encoder) {
    FeatureMatrix fm;
    fm.d_model = encoder.config().d_model;
    fm.encoder_fingerprint = encoder.fingerprint(tokenizer.spec());
    fm.sample_ids.reserve(corpus.size());
    fm.rows.reserve(corpus.size() * static_cast<std::size_t>(fm.d_model));
    constexpr std::size_t kChunk = 256;
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
        const std::size_t end = std::min(corpus.size(), start + kChunk);
        texts.clear();
        ids.clear();
        for (std::size_t i = start; i < end; ++i) {
            texts.push_back(corpus.samples[i].text);
            ids.push_back(corpus.samples[i].id);
        }
        TokenBatch batch = encode_batch(texts, tokenizer, encoder.config().max_seq_len);
        FeatureMatrix chunk = encoder.encode(batch, ids);
        fm.rows.insert(fm.rows.end(), chunk.rows.begin(), chunk.rows.end());
        fm.sample_ids.insert(fm.sample_ids.end(), chunk.sample_ids.begin(),
                             chunk.sample_ids.end());
    }
    return fm;
}

FeatureMatrix build_feature_cache(const Corpus& corpus, const Tokenizer& tokenizer,
                                  const Encoder& encoder, const std::string& path) {
    FeatureMatrix fm = compute_features(corpus, tokenizer, encoder);
    write_feature_cache(fm, path);
    return fm;
}

FeatureMatrix load_or_build_feature_cache(const Corpus& corpus, const Tokenizer& tokenizer,
                                          const Encoder& encoder, const std::string& path) {
    const std::uint64_t want = encoder.fingerprint(tokenizer.spec());
    if (std::filesystem::exists(path)) {
        try {
            FeatureMatrix fm = read_feature_cache(path, want);
            std::vector<std::string> ids;
            ids.reserve(corpus.size());
            for (const auto& s : corpus.samples) ids.push_back(s.id);
            if (fm.sample_ids == ids) return fm;
        } catch (const StaleCacheError&) {
            // stale fingerprint forces a recompute
        }
    }
    return build_feature_cache(corpus, tokenizer, encoder, path);
}

std::vector<int> labels_of(const Corpus& corpus) {
    std::vector<int> labels;
    labels.reserve(corpus.size());
    for (const auto& s : corpus.samples) labels.push_back(s.label);
    return labels;
}

}  // namespace xhate
