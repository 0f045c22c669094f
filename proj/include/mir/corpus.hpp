#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mir/util.hpp"

namespace mir {

enum class Split { train, dev, test };
enum class PaperSource { gold, weak };

// The eight MultiCite citation intents. Methodology intent (MI) covers
// uses and extension only; everything else, including unsure, is non-MI.
enum class Intent {
    background,
    motivation,
    future_work,
    similar,
    difference,
    uses,
    extension,
    unsure,
};

Split split_from_string(const std::string& s);
std::string to_string(Split s);
Intent intent_from_string(const std::string& s);
std::string to_string(Intent i);
bool is_mi_intent(Intent i);

struct PaperRecord {
    std::string id;
    std::string title;
    std::string abstract_text;
    std::optional<int> year;
    std::optional<std::string> full_text;
    PaperSource source = PaperSource::gold;
};

struct ProposalRecord {
    std::string id;
    std::string problem;
    std::string motivation;
    Split split = Split::train;
    std::optional<std::string> date;
};

struct CitationContext {
    std::string text;
    Intent intent;
};

// One edge per (proposal, paper) pair; all contexts for the pair live here.
struct CitationEdge {
    std::string proposal_id;
    std::string paper_id;
    std::vector<CitationContext> contexts;
};

// True iff any context on the edge carries a methodology intent.
bool is_mi(const CitationEdge& edge);

enum class CorpusSetting { restricted, extended };
CorpusSetting corpus_setting_from_string(const std::string& s);
std::string to_string(CorpusSetting s);

struct IngestResult;

// Directed proposal -> cited-paper graph with intent-labeled citation
// contexts. Immutable once built; safe for unsynchronized concurrent reads.
class Mag {
public:
    const std::map<std::string, ProposalRecord>& proposals() const { return proposals_; }
    const std::map<std::string, PaperRecord>& papers() const { return papers_; }

    const ProposalRecord& proposal(const std::string& id) const;
    const PaperRecord& paper(const std::string& id) const;
    bool has_proposal(const std::string& id) const { return proposals_.count(id) > 0; }
    bool has_paper(const std::string& id) const { return papers_.count(id) > 0; }

    // Forward adjacency; empty vector for a proposal with no citations.
    const std::vector<CitationEdge>& edges_of(const std::string& proposal_id) const;
    const CitationEdge& edge(const std::string& proposal_id, const std::string& paper_id) const;

    // Reverse adjacency: proposals citing the given paper.
    const std::vector<std::string>& citing_proposals(const std::string& paper_id) const;

    // Cited papers with at least one MI context, sorted by id.
    std::vector<std::string> mi_papers(const std::string& proposal_id) const;
    // All cited papers of a proposal, any intent, sorted by id.
    std::vector<std::string> cited_papers(const std::string& proposal_id) const;

    std::vector<std::string> proposal_ids(Split split) const;

    std::size_t edge_count() const;

private:
    friend IngestResult ingest(std::istream&, std::istream&, std::istream&);

    std::map<std::string, ProposalRecord> proposals_;
    std::map<std::string, PaperRecord> papers_;
    std::map<std::string, std::vector<CitationEdge>> edges_;
    std::map<std::string, std::vector<std::string>> reverse_;
};

struct Reject {
    std::string stream;  // proposals | papers | citations
    std::size_t line;
    std::string reason;
};

struct IngestResult {
    Mag mag;
    std::vector<Reject> rejects;
};

// Validating ingest of the three line-delimited streams. Malformed records
// reject at record level; duplicate ids are fatal (ValidationError).
IngestResult ingest(std::istream& proposals, std::istream& papers, std::istream& citations);
IngestResult ingest_files(const std::string& proposals_path, const std::string& papers_path,
                          const std::string& citations_path);

// Evaluation corpora. Restricted: papers cited by test proposals. Extended:
// papers cited by train proposals plus papers cited by test proposals.
// Always sorted lexicographically by id. Empty result is an error.
std::vector<std::string> corpus(const Mag& mag, CorpusSetting setting);

// Training-side literature pool: all papers cited by train proposals.
std::vector<std::string> train_corpus(const Mag& mag);

struct SplitStats {
    std::size_t proposals = 0;
    std::size_t mi_citations = 0;      // contexts with MI intent
    std::size_t non_mi_citations = 0;  // contexts with non-MI intent
    std::size_t total_citations = 0;
    std::size_t mi_cited_papers = 0;      // distinct papers with >=1 MI context
    std::size_t non_mi_cited_papers = 0;  // distinct papers with >=1 non-MI context
    std::size_t total_cited_papers = 0;   // distinct papers cited
};

struct MagStats {
    std::map<Split, SplitStats> per_split;
    SplitStats total;
};

MagStats stats(const Mag& mag);
json stats_to_json(const MagStats& s);
std::string stats_to_tsv(const MagStats& s);

}  // namespace mir
