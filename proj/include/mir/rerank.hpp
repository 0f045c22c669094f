#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mir/corpus.hpp"
#include "mir/domain.hpp"
#include "mir/judge.hpp"
#include "mir/metrics.hpp"
#include "mir/prompts.hpp"

namespace mir {

enum class JudgeStrategy { pointwise, agent };
enum class ShotMode { zero, few };
enum class InputMode { abstract_text, full_paper };

JudgeStrategy judge_strategy_from_string(const std::string& s);
ShotMode shot_mode_from_string(const std::string& s);
InputMode input_mode_from_string(const std::string& s);
std::string to_string(JudgeStrategy s);
std::string to_string(ShotMode s);
std::string to_string(InputMode m);

struct JudgeConfig {
    JudgeStrategy strategy = JudgeStrategy::pointwise;
    ShotMode shots = ShotMode::zero;
    InputMode input_mode = InputMode::abstract_text;
    int k = 10;
    std::string model_id = "judge-default";
    double temperature = 0.0;
    int max_parallel = 1;
    int few_shot_count = 2;
    int max_tokens = 1024;
    RetryPolicy retry;
    std::uint64_t seed = 0;
};

enum class Verdict { relevant, non_relevant, unknown };
std::string to_string(Verdict v);

struct RawScores {
    double problem_proximity = 0.0;
    double methodological_utility = 0.0;
    double confidence = 0.0;
};

struct Judgment {
    std::string paper_id;
    Verdict verdict = Verdict::unknown;
    std::optional<RawScores> raw_scores;  // logged, never used for ordering
    std::string reasoning;
    std::string transcript_hash;
    bool from_cache = false;
    bool transport_failed = false;
};

// A contrastive few-shot exemplar: a train proposal, one cited paper's
// abstract, and scored citation lines (1 = methodology, 0 = not).
struct Exemplar {
    std::string proposal_text;
    std::string paper_abstract;
    std::vector<std::pair<std::string, int>> citations;
};

std::string render_exemplars(const std::vector<Exemplar>& exemplars);

// First k items of the first-stage order (all of them when k exceeds it).
std::vector<RankedItem> select_topk(const Ranking& ranking, int k);

// Nearest train proposals to the test proposal under the encoder, each
// contributing one exemplar with at least one score-1 and one score-0
// citation. Train proposals lacking either class are passed over.
std::vector<Exemplar> build_fewshots(const ProposalRecord& proposal, const Mag& mag,
                                     const TextEmbedder& encoder, int n, std::uint64_t seed);

// Full text up to the end of the methodology section; heading detection
// falls back to a 60% character prefix, and a missing full text falls back
// to the abstract. The reason for any fallback lands in *note.
std::string truncate_full_text(const PaperRecord& paper, std::string* note = nullptr);

// Text of a candidate paper under the configured input mode.
std::string paper_input_text(const PaperRecord& paper, InputMode mode, std::string* note = nullptr);

struct CostReport {
    std::size_t judge_calls = 0;    // resolved judge prompts (all stages)
    std::size_t backend_calls = 0;  // attempts that reached the backend
    std::size_t cache_hits = 0;
    std::size_t transport_failures = 0;  // calls with every attempt failed
    long prompt_tokens = 0;
    long completion_tokens = 0;
    double cache_hit_ratio = 0.0;

    void add(const ResolvedCall& call);
    void merge(const CostReport& other);
};

json cost_report_to_json(const CostReport& report);

Judgment judge_pointwise(JudgeClient& client, const TranscriptCache* cache,
                         const JudgeConfig& config, const PromptLibrary& prompts,
                         const std::string& proposal_text, const PaperRecord& paper,
                         const std::vector<Exemplar>* exemplars, CostReport* cost = nullptr);

struct AgentJudgment {
    std::string proposal_analysis;
    std::string paper_analysis;
    Judgment judgment;
};

// Three-stage judge. The stage-1 proposal analysis is computed by
// agent_proposal_analysis() once per proposal and passed in.
AgentJudgment judge_agent(JudgeClient& client, const TranscriptCache* cache,
                          const JudgeConfig& config, const PromptLibrary& prompts,
                          const std::string& proposal_text, const std::string& proposal_analysis,
                          const PaperRecord& paper, const std::vector<Exemplar>* exemplars,
                          CostReport* cost = nullptr);

ResolvedCall agent_proposal_analysis(JudgeClient& client, const TranscriptCache* cache,
                                     const JudgeConfig& config, const PromptLibrary& prompts,
                                     const std::string& proposal_text);

// Stable partition of the top k: relevant-or-unknown block first, then
// non-relevant, both in first-stage order; the tail is untouched. Verdicts
// must cover exactly the top k.
Ranking reorder(const Ranking& ranking, int k, const std::map<std::string, Verdict>& verdicts);

// Verdict parsers, exposed for tests.
Verdict parse_pointwise_response(const std::string& text, std::optional<RawScores>* raw_scores,
                                 std::string* reasoning);
Verdict parse_yes_no_response(const std::string& text);

struct RerankResult {
    std::vector<Ranking> rankings;  // reordered
    EvalReport eval;
    CostReport cost;
    json judgment_log = json::array();
    bool aborted = false;  // backend unreachable for more than half the calls
};

// Judges the top k of every first-stage ranking and reorders it, then
// recomputes retrieval metrics on the reordered rankings. few-shot mode
// needs the first-stage encoder to pick similar train proposals.
RerankResult rerank_pipeline(const JudgeConfig& config, const Mag& mag,
                             const std::vector<Ranking>& first_stage, JudgeClient& client,
                             const TranscriptCache* cache, const PromptLibrary& prompts,
                             const TextEmbedder* fewshot_encoder,
                             const std::vector<int>& k_list = {3, 5});

}  // namespace mir
