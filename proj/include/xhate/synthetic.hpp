#pragma once

// Seeded bilingual toy corpus with two separable classes, used by the smoke
// tests and the --synthetic flag. Class-marker tokens are shared across the
// two toy languages (only filler words differ), so a head trained on one
// language has signal to transfer to the other.

#include <cstdint>
#include <utility>

#include "xhate/corpus.hpp"

namespace xhate {

struct SyntheticSpec {
    std::uint64_t seed = 7;
    std::size_t n_train = 400;  // language "en"
    std::size_t n_test = 100;   // language "fr"
};

// Returns (train corpus, test corpus); labels alternate so both are balanced.
std::pair<Corpus, Corpus> make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace xhate
