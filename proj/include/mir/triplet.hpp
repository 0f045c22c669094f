#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mir/corpus.hpp"
#include "mir/domain.hpp"

namespace mir {

using Rng = std::mt19937_64;

enum class TextRole { proposal, paper, context };

// Reference to one of the three text kinds a triplet leg can carry.
// Context ids are composites of (proposal, paper, context index).
struct TextRef {
    TextRole role = TextRole::proposal;
    std::string id;

    bool operator==(const TextRef&) const = default;
};

std::string to_string(TextRole r);
TextRole text_role_from_string(const std::string& s);

TextRef proposal_ref(const std::string& proposal_id);
TextRef paper_ref(const std::string& paper_id);
TextRef context_ref(const std::string& proposal_id, const std::string& paper_id, std::size_t index);

struct ContextKey {
    std::string proposal_id;
    std::string paper_id;
    std::size_t index = 0;
};
ContextKey parse_context_ref(const TextRef& ref);

// The text a reference stands for: proposals as problem + motivation,
// papers as title + abstract, contexts verbatim.
std::string resolve_text(const Mag& mag, const TextRef& ref);

enum class TripletKind { t1, t2, t3 };
enum class NegativeClass { hard, soft };

std::string to_string(TripletKind k);
std::string to_string(NegativeClass c);
TripletKind triplet_kind_from_string(const std::string& s);
NegativeClass negative_class_from_string(const std::string& s);

struct Triplet {
    TextRef anchor;
    TextRef positive;
    TextRef negative;
    TripletKind kind = TripletKind::t1;
    NegativeClass negative_class = NegativeClass::soft;
    std::string sample_id;
    int epoch = 0;
};

struct TripletGroup {
    std::string sample_id;
    int epoch = 0;
    Triplet t1, t2, t3;
};

enum class NegativeDrawMode { per_sample, per_triplet };

struct SynthConfig {
    double alpha = 0.5;  // probability of the hard-negative branch
    std::uint64_t seed = 0;
    int epochs = 1;
    NegativeDrawMode negative_draw = NegativeDrawMode::per_sample;
};

struct SkipRecord {
    std::string proposal_id;
    int epoch = 0;
    std::string reason;
};

struct SynthResult {
    std::vector<TripletGroup> groups;
    std::vector<SkipRecord> skips;
};

struct PositiveSelection {
    std::string paper_id;       // l+
    std::size_t context_index;  // index of c+ within the edge's contexts
};

// Uniform draw of a positive MI citation (paper, then one of its MI
// contexts). Returns nullopt when the proposal has no MI citation.
std::optional<PositiveSelection> select_positive(Rng& rng, const Mag& mag,
                                                 const std::string& proposal_id);

// One r ~ U(0,1] per call; hard iff r <= alpha. Exact at alpha 0 and 1.
NegativeClass draw_negative_class(Rng& rng, double alpha);

// Negatives for the three triplet kinds. For t2/t3 an empty hard pool falls
// back to the soft pool and downgrades cls; nullopt means the sample visit
// cannot form this triplet at all.
std::optional<std::string> t1_negative(Rng& rng, NegativeClass cls, const std::string& proposal_id,
                                       const Mag& mag, const std::vector<std::string>& corpus_ids,
                                       const DomainVectorStore* vectors);
std::optional<std::string> t2_negative(Rng& rng, NegativeClass& cls, const std::string& proposal_id,
                                       const Mag& mag);
std::optional<std::string> t3_negative(Rng& rng, NegativeClass& cls, const std::string& proposal_id,
                                       const Mag& mag, const std::vector<std::string>& corpus_ids);

// One pass over the train proposals (sorted by id), emitting at most one
// three-triplet group per proposal. Draws come from per-proposal substreams
// of (seed, epoch, proposal id), so output is schedule-independent.
SynthResult synthesize_epoch(const Mag& mag, const std::vector<std::string>& corpus_ids,
                             const DomainVectorStore* vectors, const SynthConfig& config, int epoch);

// All epochs, concatenated in epoch order.
SynthResult synthesize(const Mag& mag, const std::vector<std::string>& corpus_ids,
                       const DomainVectorStore* vectors, const SynthConfig& config);

json triplet_to_json(const Triplet& t);
Triplet triplet_from_json(const json& obj);
std::string groups_to_jsonl(const std::vector<TripletGroup>& groups);
std::string skips_to_jsonl(const std::vector<SkipRecord>& skips);

// Reassembles groups from a triplets.jsonl stream. A (sample_id, epoch)
// visit missing any of T1/T2/T3 violates the synthesis contract and throws.
std::vector<TripletGroup> groups_from_jsonl(std::istream& in);

}  // namespace mir
