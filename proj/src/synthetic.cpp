#include "xhate/synthetic.hpp"

#include <array>
#include <cstdio>
#include <unordered_set>

#include "xhate/util.hpp"

namespace xhate {

namespace {

constexpr std::array<const char*, 12> kHostile = {
    "vermin",  "invaders", "parasites", "traitors", "filth",   "menace",
    "plague",  "enemies",  "leeches",   "scum",     "threats", "liars"};

constexpr std::array<const char*, 12> kNeutral = {
    "gardens", "recipes", "bridges", "melodies", "harvest", "lanterns",
    "rivers",  "meadows", "pottery", "orchards", "sails",   "kites"};

constexpr std::array<const char*, 8> kFillerEn = {"the", "and",  "with", "are",
                                                  "they", "over", "all",  "here"};

constexpr std::array<const char*, 8> kFillerFr = {"le",  "et",   "avec", "sont",
                                                  "ils", "sur",  "tout", "ici"};

TextSample make_sample(Rng& rng, std::size_t index, const std::string& language,
                       std::unordered_set<std::string>& seen) {
    const int label = static_cast<int>(index % 2);
    const auto& pool = label == 1 ? kHostile : kNeutral;
    const auto& filler = language == "fr" ? kFillerFr : kFillerEn;
    std::string text;
    const std::size_t n_class = 4 + rng.index(4);
    const std::size_t n_fill = 2 + rng.index(3);
    for (std::size_t k = 0; k < n_class; ++k) {
        if (!text.empty()) text += ' ';
        text += pool[rng.index(pool.size())];
    }
    for (std::size_t k = 0; k < n_fill; ++k) {
        text += ' ';
        text += filler[rng.index(filler.size())];
    }
    if (!seen.insert(text).second) {
        // keep texts distinct so dedup never shrinks the toy corpus
        text += " x" + std::to_string(index);
        seen.insert(text);
    }
    TextSample s;
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%04zu", index);
    s.id = "syn-" + language + "-" + idx;
    s.text = std::move(text);
    s.language = language;
    s.label = label;
    s.source = Source::SYNTHETIC;
    return s;
}

}  // namespace

std::pair<Corpus, Corpus> make_synthetic_corpus(const SyntheticSpec& spec) {
    Rng rng(mix64(spec.seed ^ 0x73796EULL));  // "syn"
    std::unordered_set<std::string> seen;
    std::vector<TextSample> train, test;
    train.reserve(spec.n_train);
    test.reserve(spec.n_test);
    for (std::size_t i = 0; i < spec.n_train; ++i) {
        train.push_back(make_sample(rng, i, "en", seen));
    }
    for (std::size_t i = 0; i < spec.n_test; ++i) {
        test.push_back(make_sample(rng, i, "fr", seen));
    }
    return {make_corpus(std::move(train), {"synthetic-train"}),
            make_corpus(std::move(test), {"synthetic-test"})};
}

}  // namespace xhate
