#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mir/corpus.hpp"
#include "mir/domain.hpp"

namespace mir {

// Fixed-dimension f32 rows keyed by ordered ids. Serialized as "MIRE".
struct EmbeddingStore {
    std::vector<std::string> ids;
    int dim = 0;
    std::vector<float> data;  // row-major, ids.size() x dim

    const float* row(std::size_t i) const { return data.data() + i * static_cast<std::size_t>(dim); }
    std::vector<double> row_vector(std::size_t i) const;
    void append(const std::string& id, const std::vector<double>& v);
};

std::string save_store(const EmbeddingStore& store);
EmbeddingStore load_store(const std::string& bytes);

struct EmbedWarning {
    std::string paper_id;
    std::string reason;
};

// Embeds title + "\n" + abstract per paper, in the given id order. Papers
// without an abstract are excluded and reported.
EmbeddingStore embed_corpus(const TextEmbedder& encoder, const Mag& mag,
                            const std::vector<std::string>& paper_ids,
                            std::vector<EmbedWarning>* warnings = nullptr);

// Embeds proposals as problem + "\n" + motivation.
EmbeddingStore embed_proposals(const TextEmbedder& encoder, const Mag& mag,
                               const std::vector<std::string>& proposal_ids);

struct RankedItem {
    std::string paper_id;
    double distance = 0.0;

    bool operator==(const RankedItem&) const = default;
};

// Full-corpus ordering by ascending distance, ties by ascending paper id.
struct Ranking {
    std::string proposal_id;
    std::vector<RankedItem> items;
};

Ranking rank_by_vector(const std::string& proposal_id, const std::vector<double>& query,
                       const EmbeddingStore& store);
Ranking rank(const TextEmbedder& encoder, const ProposalRecord& proposal, const EmbeddingStore& store);

double recall_at_k(const Ranking& ranking, const std::set<std::string>& relevant, int k);
double average_precision(const Ranking& ranking, const std::set<std::string>& relevant);

struct ProposalEval {
    std::string proposal_id;
    std::size_t relevant_in_corpus = 0;
    std::size_t relevant_missing = 0;  // relevant papers absent from the corpus
    std::map<int, double> recall;      // per requested k
    double ap = 0.0;
};

struct EvalReport {
    std::string setting;
    std::vector<int> k_list;
    std::vector<ProposalEval> rows;        // included proposals only
    std::map<int, double> mean_recall;
    double map_score = 0.0;
    std::size_t excluded_proposals = 0;    // no in-corpus relevant papers
    std::size_t missing_relevant_total = 0;
};

// Metrics over precomputed rankings; relevant sets are intersected with each
// ranking's corpus. Proposals with nothing relevant in corpus are excluded
// from the means and counted.
EvalReport evaluate_rankings(const std::vector<Ranking>& rankings,
                             const std::map<std::string, std::set<std::string>>& relevant,
                             const std::vector<int>& k_list, const std::string& setting);

// End-to-end evaluation of an encoder on the test split of a MAG.
EvalReport evaluate(const TextEmbedder& encoder, const Mag& mag, CorpusSetting setting,
                    const std::vector<int>& k_list, std::vector<Ranking>* rankings_out = nullptr);

std::string eval_to_tsv(const EvalReport& report);
json eval_to_json(const EvalReport& report);

json ranking_to_json(const Ranking& r);
Ranking ranking_from_json(const json& obj);
std::string rankings_to_jsonl(const std::vector<Ranking>& rankings);
std::vector<Ranking> rankings_from_jsonl(std::istream& in);

// Knee of a non-decreasing coverage curve: the point with maximum
// perpendicular distance to the first-to-last chord; ties take the smallest
// k. Flat or collinear curves return the smallest k reaching max coverage.
int elbow(const std::vector<std::pair<int, double>>& curve);

// Mean recall@k over the given proposals for k = 1..k_max.
std::vector<std::pair<int, double>> coverage_curve(const std::vector<Ranking>& rankings,
                                                   const std::map<std::string, std::set<std::string>>& relevant,
                                                   int k_max);

}  // namespace mir
