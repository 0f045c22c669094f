#pragma once

#include <string>
#include <vector>

#include "mir/corpus.hpp"

namespace mir {

// Synthetic dataset with planted topic structure. Every proposal gets a
// latent topic; its MI papers share at least 60% of their topic tokens with
// the proposal, its non-MI citations come from other topics, and each topic
// also carries surface-similar "background" papers that overlap a proposal's
// wording heavily without being methodologically relevant. Those papers end
// up in the corpora through other proposals' non-MI citations, so untrained
// bag-of-words retrieval ranks them high while the planted problem-token to
// method-token pairing stays learnable.
struct FixtureConfig {
    int proposals = 50;
    int papers = 150;
    int topics = 8;
    std::uint64_t seed = 1;
    double train_fraction = 0.76;
    double dev_fraction = 0.08;  // remainder is test
};

struct FixtureData {
    std::string proposals_jsonl;
    std::string papers_jsonl;
    std::string citations_jsonl;
};

FixtureData generate_fixture(const FixtureConfig& config);

// Convenience: generate and ingest in one step.
Mag fixture_mag(const FixtureConfig& config);

struct FixtureCheck {
    bool ok = true;
    std::vector<std::string> problems;
    std::size_t mi_edges = 0;
    std::size_t non_mi_edges = 0;
    std::size_t fooler_papers = 0;  // same-topic surface-similar distractors
};

// Verifies the planted rules on an ingested fixture: MI edges stay within
// topic at >= 60% token share, non-MI edges cross topics, hard-negative
// pools are non-empty for every train proposal, and the corpus mixes in
// same-topic distractors.
FixtureCheck check_fixture(const Mag& mag, const FixtureConfig& config);

}  // namespace mir
