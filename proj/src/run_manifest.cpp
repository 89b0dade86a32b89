#include "xhate/run_manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xhate/errors.hpp"

namespace xhate {

using ordered_json = nlohmann::ordered_json;

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string manifest_to_json(const RunManifest& m) {
    ordered_json j;
    j["run_id"] = m.run_id;
    j["hyperparams"] = nlohmann::ordered_json::parse(hyperparams_to_json(m.hyperparams));
    j["backbone_id"] = m.backbone_id;
    j["adapter_dir"] = m.adapter_dir;
    j["language_pair"]["train"] = m.train_lang;
    j["language_pair"]["test"] = m.test_lang;
    j["train_corpus_path"] = m.train_corpus_path;
    j["test_corpus_path"] = m.test_corpus_path;
    j["digests"]["train_corpus"] = m.train_corpus_digest;
    j["digests"]["train_split"] = m.train_split_digest;
    j["digests"]["val_split"] = m.val_split_digest;
    j["digests"]["test_corpus"] = m.test_corpus_digest;
    j["digests"]["features"] = m.feature_fingerprint;
    j["digests"]["head_params"] = m.head_params_digest;
    j["split_seed"] = m.split_seed;
    j["d_model"] = m.d_model;
    j["class_weights"] = m.class_weights;
    j["toolkit_version"] = m.toolkit_version;
    j["created_at"] = m.created_at;
    j["wall_seconds"] = m.wall_seconds;
    j["status"] = m.status;
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.hyperparams = hyperparams_from_json(j.at("hyperparams").dump());
    m.backbone_id = j.at("backbone_id").get<std::string>();
    m.adapter_dir = j.value("adapter_dir", "");
    m.train_lang = j.at("language_pair").at("train").get<std::string>();
    m.test_lang = j.at("language_pair").at("test").get<std::string>();
    m.train_corpus_path = j.value("train_corpus_path", "");
    m.test_corpus_path = j.value("test_corpus_path", "");
    const auto& d = j.at("digests");
    m.train_corpus_digest = d.value("train_corpus", "");
    m.train_split_digest = d.value("train_split", "");
    m.val_split_digest = d.value("val_split", "");
    m.test_corpus_digest = d.value("test_corpus", "");
    m.feature_fingerprint = d.value("features", "");
    m.head_params_digest = d.value("head_params", "");
    m.split_seed = j.value("split_seed", std::uint64_t{0});
    m.d_model = j.value("d_model", 0);
    m.class_weights = j.value("class_weights", true);
    m.toolkit_version = j.value("toolkit_version", "");
    m.created_at = j.value("created_at", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.status = j.value("status", "");
    return m;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path);
    out << manifest_to_json(m);
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

}  // namespace xhate
