#pragma once

// Run manifest: everything needed to reconstruct a training run and verify
// its artifacts.

#include <string>

#include "xhate/training.hpp"

namespace xhate {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct RunManifest {
    std::string run_id;
    HyperParams hyperparams;
    std::string backbone_id;
    std::string adapter_dir;  // empty for stub backbones
    std::string train_lang;
    std::string test_lang;
    std::string train_corpus_path;
    std::string test_corpus_path;  // corpus the run's eval report used
    std::string train_corpus_digest;  // pre-split corpus
    std::string train_split_digest;
    std::string val_split_digest;
    std::string test_corpus_digest;
    std::uint64_t split_seed = 0;
    int d_model = 0;
    std::string feature_fingerprint;
    std::string head_params_digest;
    bool class_weights = true;
    std::string toolkit_version = kToolkitVersion;
    std::string created_at;  // UTC, ISO-8601
    double wall_seconds = 0.0;
    std::string status;  // "complete" only once every digest is recorded
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp();

}  // namespace xhate
