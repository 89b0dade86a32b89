#pragma once

// Tokenization, padded batch encoding and pooled feature extraction from a
// pluggable frozen encoder, plus the on-disk feature cache that makes
// head-only training cheap.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xhate/corpus.hpp"

namespace xhate {

enum class TokenizerKind { WHITESPACE_STUB, BACKBONE_ADAPTER };

struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::WHITESPACE_STUB;
    std::uint32_t vocab_size = 30000;
    std::uint32_t pad_id = 0;
    std::uint32_t unk_id = 1;
    std::uint32_t bos_id = 2;

    void validate() const;  // pad != unk, all ids < vocab_size
    std::uint32_t first_regular_id() const;
};

// Whitespace tokenizer with stable hashed ids. Subword algorithms are out of
// scope; a backbone adapter brings its own tokenization upstream.
class Tokenizer {
public:
    explicit Tokenizer(TokenizerSpec spec);

    std::vector<std::uint32_t> tokenize(std::string_view text) const;
    std::size_t token_count(std::string_view text) const;
    const TokenizerSpec& spec() const { return spec_; }

private:
    TokenizerSpec spec_;
};

struct EncoderConfig {
    std::string backbone_id = "stub-32";
    int d_model = 32;
    int max_seq_len = 32;

    void validate() const;  // d_model >= 2, max_seq_len >= 1
};

struct TokenBatch {
    std::vector<std::uint32_t> ids;  // n x max_seq_len, row-major
    std::vector<std::uint8_t> mask;  // n x max_seq_len, 1 where a real token sits
    std::vector<std::size_t> lengths;  // pre-truncation token counts
    std::size_t n = 0;
    int max_seq_len = 0;
};

struct FeatureMatrix {
    std::vector<float> rows;  // n x d_model, row-major
    std::vector<std::string> sample_ids;
    int d_model = 0;
    std::uint64_t encoder_fingerprint = 0;

    std::size_t n() const { return sample_ids.size(); }
    const float* row(std::size_t i) const {
        return rows.data() + i * static_cast<std::size_t>(d_model);
    }
    std::uint64_t digest() const;  // over raw row bytes and ids
};

// Smallest length covering >= coverage of samples, clamped to [lo, hi].
int choose_max_seq_len(const std::map<std::size_t, std::size_t>& histogram,
                       int lower_bound, int upper_bound, double coverage);

// Tokenize, truncate at max_seq_len, pad with pad_id. A text tokenizing to
// nothing becomes a single unk token so rows are never empty.
TokenBatch encode_batch(const std::vector<std::string>& texts,
                        const Tokenizer& tokenizer, int max_seq_len);

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual const EncoderConfig& config() const = 0;
    // Digest of everything the features depend on besides the text.
    virtual std::uint64_t fingerprint(const TokenizerSpec& tok) const = 0;
    virtual FeatureMatrix encode(const TokenBatch& batch,
                                 const std::vector<std::string>& sample_ids) const = 0;
};

// Deterministic hash-embedding encoder: each (token id, dimension) pair maps
// to a fixed pseudo-random value in [-1, 1); a row's feature is the mean over
// its unmasked positions. Needs no model artifacts and is byte-stable.
class StubEncoder : public Encoder {
public:
    explicit StubEncoder(EncoderConfig cfg);  // seed derived from backbone_id
    StubEncoder(EncoderConfig cfg, std::uint64_t seed);

    const EncoderConfig& config() const override { return cfg_; }
    std::uint64_t fingerprint(const TokenizerSpec& tok) const override;
    FeatureMatrix encode(const TokenBatch& batch,
                         const std::vector<std::string>& sample_ids) const override;
    std::uint64_t seed() const { return seed_; }

private:
    EncoderConfig cfg_;
    std::uint64_t seed_;
};

// The documented stub embedding procedure.
double stub_embedding_value(std::uint64_t seed, std::uint32_t token_id, std::uint32_t dim);

// Adapter over an external frozen backbone. The backbone runs elsewhere;
// this side consumes its pooled first-position representations from an
// artifact directory: <dir>/adapter.json (backbone_id, d_model) and
// <dir>/pooled.xfc (feature-cache format keyed by sample id).
class BackboneAdapter : public Encoder {
public:
    explicit BackboneAdapter(std::string artifact_dir, int max_seq_len);

    const EncoderConfig& config() const override { return cfg_; }
    std::uint64_t fingerprint(const TokenizerSpec& tok) const override;
    FeatureMatrix encode(const TokenBatch& batch,
                         const std::vector<std::string>& sample_ids) const override;

private:
    EncoderConfig cfg_;
    std::uint64_t table_digest_ = 0;
    std::map<std::string, std::vector<float>> pooled_;
};

// "stub-*" backbone ids build a StubEncoder; anything else requires an
// adapter artifact directory.
std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg,
                                      const std::string& adapter_dir = "");

// --- feature cache -----------------------------------------------------------
// File layout (all integers little-endian):
//   bytes 0..3    magic "XFC1"
//   bytes 4..7    u32 version (1)
//   bytes 8..15   u64 encoder fingerprint
//   bytes 16..19  u32 d_model
//   bytes 20..27  u64 row count
//   then row_count * d_model float32 values, row-major
//   then per row: u32 id length + id bytes

FeatureMatrix compute_features(const Corpus& corpus, const Tokenizer& tokenizer,
                               const Encoder& encoder);

void write_feature_cache(const FeatureMatrix& features, const std::string& path);
FeatureMatrix read_feature_cache(const std::string& path, std::uint64_t expected_fingerprint);

FeatureMatrix build_feature_cache(const Corpus& corpus, const Tokenizer& tokenizer,
                                  const Encoder& encoder, const std::string& path);

// Reuses the cache when its fingerprint matches, recomputes otherwise.
FeatureMatrix load_or_build_feature_cache(const Corpus& corpus, const Tokenizer& tokenizer,
                                          const Encoder& encoder, const std::string& path);

std::vector<int> labels_of(const Corpus& corpus);

}  // namespace xhate
