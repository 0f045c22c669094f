#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mir/corpus.hpp"

namespace mir {

enum class OwnerRole { proposal, paper };

struct EntitySet {
    std::vector<std::string> task;
    std::vector<std::string> method;
    std::vector<std::string> metric;
    std::vector<std::string> material;
    std::vector<std::string> generic;
};

// Flattens all categories, trims, deduplicates, sorts ascending
// case-insensitively with a case-sensitive tiebreak, joins with single
// spaces. Order-insensitive in its input.
std::string canonical_text(const EntitySet& entities);

// Any text-embedding backend producing fixed-dimension vectors.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual int dim() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
};

// Training-free bag-of-tokens embedder: each token hashes to a coordinate
// with a hash-derived sign. Deterministic and purely lexical.
class HashingEmbedder : public TextEmbedder {
public:
    explicit HashingEmbedder(int dim = 256);
    int dim() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override;

private:
    int dim_;
};

struct DomainVector {
    std::vector<double> vector;
    std::string owner_id;
    OwnerRole owner_role = OwnerRole::paper;
};

// Empty text maps to the all-zero vector by convention.
DomainVector domain_vector(const std::string& text, const TextEmbedder& embedder,
                           const std::string& owner_id, OwnerRole role);

// Cosine similarity in [-1, 1]; zero if either vector has zero norm.
// Dimension mismatch is an error.
double sim(const DomainVector& a, const DomainVector& b);

class DomainVectorStore {
public:
    void put(DomainVector v);
    const DomainVector& get(const std::string& owner_id) const;
    bool has(const std::string& owner_id) const { return vectors_.count(owner_id) > 0; }
    std::size_t size() const { return vectors_.size(); }

private:
    std::map<std::string, DomainVector> vectors_;
};

// argmax of sim(proposal, candidate) over corpus minus exclusion, ties broken
// by the lexicographically smallest paper id. Empty candidate pool yields
// nullopt (caller falls back to a soft negative).
std::optional<std::string> hardest_negative(const std::string& proposal_id,
                                            const std::set<std::string>& exclusion,
                                            const std::vector<std::string>& corpus_ids,
                                            const DomainVectorStore& vectors);

// Fallback when no entities.jsonl is supplied: unique non-stopword
// alphanumeric tokens of the owner's text, all in the generic category.
EntitySet extract_entities_fallback(const std::string& text);

const std::vector<std::string>& stopwords();

// entities.jsonl records keyed by (owner_id); owner_role must parse.
std::map<std::string, EntitySet> load_entities_file(const std::string& path);

// Domain vectors for all train proposals and the given paper pool, from
// per-owner entity sets (supplied or fallback-extracted).
DomainVectorStore build_domain_vectors(const Mag& mag, const std::vector<std::string>& paper_pool,
                                       const std::vector<std::string>& proposal_pool,
                                       const TextEmbedder& embedder,
                                       const std::map<std::string, EntitySet>* entities = nullptr);

}  // namespace mir
