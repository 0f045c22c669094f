#include "mir/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "mir/triplet.hpp"

namespace mir {

namespace {

const std::vector<std::string> kMethodHeadings = {"method", "methodology", "approach", "model", "proposed"};
const std::vector<std::string> kEndHeadings = {"experiment", "result", "evaluation", "discussion", "conclusion"};

// A heading is a short line (<= 64 chars, <= 6 words, no trailing period)
// whose first word after any numbering prefix starts with a known section
// word.
bool line_is_heading(const std::string& line, const std::vector<std::string>& words) {
    const std::string t = trim(line);
    if (t.empty() || t.size() > 64 || t.back() == '.') return false;
    std::istringstream ss(t);
    std::string tok;
    int word_count = 0;
    std::string first_word;
    while (ss >> tok) {
        ++word_count;
        if (first_word.empty()) {
            std::string cleaned;
            for (char c : tok) {
                if (std::isalpha(static_cast<unsigned char>(c))) cleaned.push_back(c);
                else if (!cleaned.empty()) break;
            }
            if (!cleaned.empty()) first_word = to_lower(cleaned);
        }
    }
    if (word_count > 6 || first_word.empty()) return false;
    for (const std::string& w : words) {
        if (first_word.rfind(w, 0) == 0) return true;
    }
    return false;
}

std::string input_text_name(InputMode mode) {
    return mode == InputMode::abstract_text ? "Input Paper Abstract" : "Input Paper Full Text";
}

std::string combine_hashes(std::initializer_list<std::string> keys) {
    std::string material;
    for (const std::string& k : keys) {
        material += k;
        material.push_back('\n');
    }
    return sha256_hex(material);
}

}  // namespace

JudgeStrategy judge_strategy_from_string(const std::string& s) {
    if (s == "pointwise") return JudgeStrategy::pointwise;
    if (s == "agent") return JudgeStrategy::agent;
    throw std::runtime_error("unknown strategy: " + s);
}

ShotMode shot_mode_from_string(const std::string& s) {
    if (s == "zero") return ShotMode::zero;
    if (s == "few") return ShotMode::few;
    throw std::runtime_error("unknown shot mode: " + s);
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "abstract") return InputMode::abstract_text;
    if (s == "full_paper") return InputMode::full_paper;
    throw std::runtime_error("unknown input mode: " + s);
}

std::string to_string(JudgeStrategy s) { return s == JudgeStrategy::pointwise ? "pointwise" : "agent"; }
std::string to_string(ShotMode s) { return s == ShotMode::zero ? "zero" : "few"; }
std::string to_string(InputMode m) { return m == InputMode::abstract_text ? "abstract" : "full_paper"; }

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::relevant: return "relevant";
        case Verdict::non_relevant: return "non_relevant";
        case Verdict::unknown: return "unknown";
    }
    return "?";
}

std::vector<RankedItem> select_topk(const Ranking& ranking, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.items.size());
    return {ranking.items.begin(), ranking.items.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string render_exemplars(const std::vector<Exemplar>& exemplars) {
    std::ostringstream out;
    for (const Exemplar& ex : exemplars) {
        out << "Exemplar:\n";
        out << "Sample Proposal: " << ex.proposal_text << "\n\n";
        out << "Paper: " << ex.paper_abstract << "\n\n";
        out << "Methodology Citations:\n";
        int idx = 0;
        for (const auto& [text, score] : ex.citations) {
            if (score != 1) continue;
            out << ++idx << ".\nCitation: " << text << "\nRelevance Score: 1\n\n";
        }
        out << "Non-Methodology Citation:\n";
        for (const auto& [text, score] : ex.citations) {
            if (score != 0) continue;
            out << "Citation: " << text << "\nRelevance Score: 0\n\n";
        }
    }
    return out.str();
}

std::vector<Exemplar> build_fewshots(const ProposalRecord& proposal, const Mag& mag,
                                     const TextEmbedder& encoder, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("few-shot count must be >= 1");
    const std::vector<std::string> train_ids = mag.proposal_ids(Split::train);
    if (train_ids.empty()) throw std::runtime_error("few-shot exemplars need a train split");

    const std::vector<double> query = encoder.embed(proposal.problem + "\n" + proposal.motivation);
    std::vector<std::pair<double, std::string>> order;
    for (const std::string& pid : train_ids) {
        const ProposalRecord& p = mag.proposal(pid);
        const std::vector<double> v = encoder.embed(p.problem + "\n" + p.motivation);
        double sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - query[i];
            sq += d * d;
        }
        order.emplace_back(std::sqrt(sq), pid);
    }
    std::sort(order.begin(), order.end());

    Rng rng(substream_seed(seed, "fewshot#" + proposal.id));
    std::vector<Exemplar> exemplars;
    for (const auto& [dist, pid] : order) {
        if (static_cast<int>(exemplars.size()) >= n) break;
        const ProposalRecord& train_prop = mag.proposal(pid);
        const auto& edges = mag.edges_of(pid);

        // Prefer a single cited paper carrying both context classes.
        std::vector<const CitationEdge*> dual;
        std::vector<const CitationEdge*> mi_edges;
        std::vector<std::pair<const CitationEdge*, std::size_t>> non_mi_contexts;
        for (const CitationEdge& e : edges) {
            bool has_mi = false, has_non = false;
            for (std::size_t i = 0; i < e.contexts.size(); ++i) {
                if (is_mi_intent(e.contexts[i].intent)) has_mi = true;
                else {
                    has_non = true;
                    non_mi_contexts.emplace_back(&e, i);
                }
            }
            if (has_mi) mi_edges.push_back(&e);
            if (has_mi && has_non) dual.push_back(&e);
        }
        if (mi_edges.empty() || non_mi_contexts.empty()) continue;  // lacks a class

        Exemplar ex;
        ex.proposal_text = train_prop.problem + "\n" + train_prop.motivation;
        const CitationEdge* chosen =
            !dual.empty() ? dual[uniform_index(rng, dual.size())] : mi_edges[uniform_index(rng, mi_edges.size())];
        ex.paper_abstract = mag.paper(chosen->paper_id).abstract_text;
        for (const CitationContext& c : chosen->contexts) {
            if (is_mi_intent(c.intent)) ex.citations.emplace_back(c.text, 1);
        }
        bool have_zero = false;
        for (const CitationContext& c : chosen->contexts) {
            if (!is_mi_intent(c.intent)) {
                ex.citations.emplace_back(c.text, 0);
                have_zero = true;
                break;
            }
        }
        if (!have_zero) {
            const auto& [edge, idx] = non_mi_contexts[uniform_index(rng, non_mi_contexts.size())];
            ex.citations.emplace_back(edge->contexts[idx].text, 0);
        }
        exemplars.push_back(std::move(ex));
    }
    if (exemplars.empty()) {
        throw std::runtime_error("no train proposal offers both citation classes for few-shot exemplars");
    }
    return exemplars;
}

std::string truncate_full_text(const PaperRecord& paper, std::string* note) {
    if (!paper.full_text || trim(*paper.full_text).empty()) {
        if (note) *note = "no full text; using abstract";
        return paper.abstract_text;
    }
    const std::string& text = *paper.full_text;
    std::vector<std::pair<std::size_t, std::string>> lines;  // offset, content
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::size_t end = eol == std::string::npos ? text.size() : eol;
        lines.emplace_back(pos, text.substr(pos, end - pos));
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }

    std::size_t method_line = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (line_is_heading(lines[i].second, kMethodHeadings)) {
            method_line = i;
            break;
        }
    }
    if (method_line < lines.size()) {
        for (std::size_t i = method_line + 1; i < lines.size(); ++i) {
            if (line_is_heading(lines[i].second, kEndHeadings)) {
                return text.substr(0, lines[i].first);
            }
        }
    }
    if (note) *note = "methodology section not detected; using 60% prefix";
    return text.substr(0, static_cast<std::size_t>(std::floor(text.size() * 0.6)));
}

std::string paper_input_text(const PaperRecord& paper, InputMode mode, std::string* note) {
    if (mode == InputMode::abstract_text) return paper.abstract_text;
    return truncate_full_text(paper, note);
}

Verdict parse_pointwise_response(const std::string& text, std::optional<RawScores>* raw_scores,
                                 std::string* reasoning) {
    const std::size_t open = text.find('{');
    const std::size_t close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close <= open) return Verdict::unknown;
    json obj = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("relevance_score")) return Verdict::unknown;

    int score = -1;
    const json& rs = obj["relevance_score"];
    if (rs.is_number_integer()) score = rs.get<int>();
    else if (rs.is_string()) {
        const std::string s = trim(rs.get<std::string>());
        if (s == "0") score = 0;
        else if (s == "1") score = 1;
    }
    if (score != 0 && score != 1) return Verdict::unknown;

    if (reasoning && obj.contains("reasoning") && obj["reasoning"].is_string()) {
        *reasoning = obj["reasoning"].get<std::string>();
    }
    if (raw_scores) {
        RawScores raw;
        bool ok = true;
        auto read = [&](const char* key, double& dst) {
            if (!obj.contains(key) || !obj[key].is_number()) { ok = false; return; }
            dst = obj[key].get<double>();
            if (dst < 0.0 || dst > 1.0) ok = false;
        };
        read("problem_proximity_score", raw.problem_proximity);
        read("methodological_utility_score", raw.methodological_utility);
        read("confidence", raw.confidence);
        if (ok) *raw_scores = raw;
    }
    return score == 1 ? Verdict::relevant : Verdict::non_relevant;
}

Verdict parse_yes_no_response(const std::string& text) {
    std::string cleaned;
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (cleaned == "yes") return Verdict::relevant;
    if (cleaned == "no") return Verdict::non_relevant;
    return Verdict::unknown;
}

namespace {

JudgeRequest make_request(const JudgeConfig& config, std::string prompt) {
    JudgeRequest req;
    req.model_id = config.model_id;
    req.messages = {{"user", std::move(prompt)}};
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    return req;
}

}  // namespace

void CostReport::add(const ResolvedCall& call) {
    ++judge_calls;
    if (call.from_cache) ++cache_hits;
    backend_calls += static_cast<std::size_t>(call.attempts);
    if (call.transport_failed) ++transport_failures;
    prompt_tokens += call.prompt_tokens;
    completion_tokens += call.completion_tokens;
}

void CostReport::merge(const CostReport& other) {
    judge_calls += other.judge_calls;
    backend_calls += other.backend_calls;
    cache_hits += other.cache_hits;
    transport_failures += other.transport_failures;
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
}

Judgment judge_pointwise(JudgeClient& client, const TranscriptCache* cache,
                         const JudgeConfig& config, const PromptLibrary& prompts,
                         const std::string& proposal_text, const PaperRecord& paper,
                         const std::vector<Exemplar>* exemplars, CostReport* cost) {
    std::string base = prompts.pointwise;
    std::map<std::string, std::string> slots{
        {"input_text_name", input_text_name(config.input_mode)},
        {"proposal", proposal_text},
        {"input_paper_title", paper.title},
        {"input_paper_text", paper_input_text(paper, config.input_mode)},
    };
    if (config.shots == ShotMode::few && exemplars) {
        slots["exemplars"] = render_exemplars(*exemplars);
    } else {
        base = strip_exemplar_block(base);
        slots["exemplars"] = "";
    }
    const std::string prompt = fill_slots(base, slots);
    const ResolvedCall call = resolve_call(
        client, cache, make_request(config, prompt), to_string(config.input_mode), config.retry,
        [](const std::string& text) { return parse_pointwise_response(text, nullptr, nullptr) != Verdict::unknown; });
    if (cost) cost->add(call);

    Judgment j;
    j.paper_id = paper.id;
    j.transcript_hash = call.key;
    j.from_cache = call.from_cache;
    j.transport_failed = call.transport_failed;
    j.verdict = parse_pointwise_response(call.text, &j.raw_scores, &j.reasoning);
    return j;
}

ResolvedCall agent_proposal_analysis(JudgeClient& client, const TranscriptCache* cache,
                                     const JudgeConfig& config, const PromptLibrary& prompts,
                                     const std::string& proposal_text) {
    const std::string prompt = fill_slots(prompts.agent_proposal_analysis,
                                          {{"query", proposal_text}, {"proposal", proposal_text}});
    return resolve_call(client, cache, make_request(config, prompt), to_string(config.input_mode),
                        config.retry, [](const std::string& text) { return !trim(text).empty(); });
}

AgentJudgment judge_agent(JudgeClient& client, const TranscriptCache* cache,
                          const JudgeConfig& config, const PromptLibrary& prompts,
                          const std::string& proposal_text, const std::string& proposal_analysis,
                          const PaperRecord& paper, const std::vector<Exemplar>* exemplars,
                          CostReport* cost) {
    const std::string name = input_text_name(config.input_mode);
    const std::string paper_text = paper_input_text(paper, config.input_mode);

    // Stage 2: applicability analysis of the paper. Few-shot exemplars go
    // right before the proposal section.
    std::string stage2_template = prompts.agent_paper_analysis;
    if (config.shots == ShotMode::few && exemplars) {
        static const std::string marker = "Here is the Research Proposal:";
        const std::size_t at = stage2_template.find(marker);
        const std::string block = "Exemplars\n" + render_exemplars(*exemplars) + "\n";
        if (at != std::string::npos) stage2_template.insert(at, block);
        else stage2_template += "\n" + block;
    }
    const std::string stage2_prompt =
        fill_slots(stage2_template, {{"input_text_name", name},
                                     {"proposal", proposal_text},
                                     {"proposal_analysis", proposal_analysis},
                                     {"paper_or_abstract", paper_text}});
    const ResolvedCall stage2 =
        resolve_call(client, cache, make_request(config, stage2_prompt), to_string(config.input_mode),
                     config.retry, [](const std::string& text) { return !trim(text).empty(); });
    if (cost) cost->add(stage2);

    AgentJudgment out;
    out.proposal_analysis = proposal_analysis;
    out.paper_analysis = stage2.text;
    out.judgment.paper_id = paper.id;

    if (stage2.transport_failed) {
        out.judgment.verdict = Verdict::unknown;
        out.judgment.transport_failed = true;
        out.judgment.transcript_hash = stage2.key;
        return out;
    }

    // Stage 3: one-word relevance judgment.
    const std::string stage3_prompt =
        fill_slots(prompts.agent_relevance_judgment, {{"input_text_name", name},
                                                      {"proposal", proposal_text},
                                                      {"proposal_analysis", proposal_analysis},
                                                      {"paper_or_abstract", paper_text},
                                                      {"paper_analysis", stage2.text}});
    const ResolvedCall stage3 = resolve_call(
        client, cache, make_request(config, stage3_prompt), to_string(config.input_mode), config.retry,
        [](const std::string& text) { return parse_yes_no_response(text) != Verdict::unknown; });
    if (cost) cost->add(stage3);

    out.judgment.verdict = parse_yes_no_response(stage3.text);
    out.judgment.transport_failed = stage3.transport_failed;
    out.judgment.from_cache = stage2.from_cache && stage3.from_cache;
    out.judgment.transcript_hash = combine_hashes({stage2.key, stage3.key});
    out.judgment.reasoning = stage2.text;
    return out;
}

Ranking reorder(const Ranking& ranking, int k, const std::map<std::string, Verdict>& verdicts) {
    const std::vector<RankedItem> top = select_topk(ranking, k);
    if (verdicts.size() != top.size()) {
        throw std::invalid_argument("verdicts must cover exactly the top-k (" +
                                    std::to_string(top.size()) + " expected, " +
                                    std::to_string(verdicts.size()) + " given)");
    }
    for (const RankedItem& item : top) {
        if (!verdicts.count(item.paper_id)) {
            throw std::invalid_argument("missing verdict for top-k paper " + item.paper_id);
        }
    }

    Ranking out;
    out.proposal_id = ranking.proposal_id;
    out.items.reserve(ranking.items.size());
    // Unknown rides with relevant: a parse failure must not demote a
    // first-stage hit.
    for (const RankedItem& item : top) {
        if (verdicts.at(item.paper_id) != Verdict::non_relevant) out.items.push_back(item);
    }
    for (const RankedItem& item : top) {
        if (verdicts.at(item.paper_id) == Verdict::non_relevant) out.items.push_back(item);
    }
    out.items.insert(out.items.end(), ranking.items.begin() + static_cast<std::ptrdiff_t>(top.size()),
                     ranking.items.end());
    return out;
}

json cost_report_to_json(const CostReport& report) {
    return json{{"judge_calls", report.judge_calls},
                {"backend_calls", report.backend_calls},
                {"cache_hits", report.cache_hits},
                {"transport_failures", report.transport_failures},
                {"prompt_tokens", report.prompt_tokens},
                {"completion_tokens", report.completion_tokens},
                {"cache_hit_ratio", report.cache_hit_ratio}};
}

RerankResult rerank_pipeline(const JudgeConfig& config, const Mag& mag,
                             const std::vector<Ranking>& first_stage, JudgeClient& client,
                             const TranscriptCache* cache, const PromptLibrary& prompts,
                             const TextEmbedder* fewshot_encoder, const std::vector<int>& k_list) {
    if (config.shots == ShotMode::few && !fewshot_encoder) {
        throw std::invalid_argument("few-shot re-ranking needs the first-stage encoder");
    }
    std::vector<Ranking> ordered = first_stage;
    std::sort(ordered.begin(), ordered.end(),
              [](const Ranking& a, const Ranking& b) { return a.proposal_id < b.proposal_id; });

    RerankResult result;
    struct PaperOutcome {
        Judgment judgment;
        CostReport cost;
        json log;
    };

    std::size_t next = 0;
    for (; next < ordered.size(); ++next) {
        const Ranking& ranking = ordered[next];
        const ProposalRecord& proposal = mag.proposal(ranking.proposal_id);
        const std::string proposal_text = proposal.problem + "\n" + proposal.motivation;
        const std::vector<RankedItem> top = select_topk(ranking, config.k);

        std::vector<Exemplar> exemplars;
        if (config.shots == ShotMode::few) {
            exemplars = build_fewshots(proposal, mag, *fewshot_encoder, config.few_shot_count, config.seed);
        }
        std::string proposal_analysis;
        if (config.strategy == JudgeStrategy::agent) {
            const ResolvedCall stage1 = agent_proposal_analysis(client, cache, config, prompts, proposal_text);
            result.cost.add(stage1);
            proposal_analysis = stage1.text;
        }

        auto judge_one = [&](const RankedItem& item) {
            PaperOutcome outcome;
            const PaperRecord& paper = mag.paper(item.paper_id);
            if (config.strategy == JudgeStrategy::pointwise) {
                outcome.judgment = judge_pointwise(client, cache, config, prompts, proposal_text, paper,
                                                   exemplars.empty() ? nullptr : &exemplars, &outcome.cost);
            } else {
                const AgentJudgment aj = judge_agent(client, cache, config, prompts, proposal_text,
                                                     proposal_analysis, paper,
                                                     exemplars.empty() ? nullptr : &exemplars, &outcome.cost);
                outcome.judgment = aj.judgment;
            }
            outcome.log = json{{"proposal_id", ranking.proposal_id},
                               {"paper_id", item.paper_id},
                               {"verdict", to_string(outcome.judgment.verdict)},
                               {"from_cache", outcome.judgment.from_cache},
                               {"transport_failed", outcome.judgment.transport_failed},
                               {"transcript_hash", outcome.judgment.transcript_hash},
                               {"reasoning", outcome.judgment.reasoning}};
            if (outcome.judgment.raw_scores) {
                outcome.log["raw_scores"] = json{
                    {"problem_proximity_score", outcome.judgment.raw_scores->problem_proximity},
                    {"methodological_utility_score", outcome.judgment.raw_scores->methodological_utility},
                    {"confidence", outcome.judgment.raw_scores->confidence}};
            }
            return outcome;
        };

        // Bounded fan-out over the candidate papers; outcomes apply in
        // first-stage order regardless of completion order.
        std::map<std::string, Verdict> verdicts;
        const int parallel = std::max(1, config.max_parallel);
        for (std::size_t start = 0; start < top.size(); start += static_cast<std::size_t>(parallel)) {
            const std::size_t end = std::min(top.size(), start + static_cast<std::size_t>(parallel));
            std::vector<std::future<PaperOutcome>> futures;
            for (std::size_t i = start; i < end; ++i) {
                futures.push_back(std::async(std::launch::async, judge_one, std::cref(top[i])));
            }
            for (std::size_t i = start; i < end; ++i) {
                PaperOutcome outcome = futures[i - start].get();
                verdicts[top[i].paper_id] = outcome.judgment.verdict;
                result.cost.merge(outcome.cost);
                result.judgment_log.push_back(std::move(outcome.log));
            }
        }
        result.rankings.push_back(reorder(ranking, config.k, verdicts));

        if (result.cost.judge_calls >= 2 &&
            result.cost.transport_failures * 2 > result.cost.judge_calls) {
            result.aborted = true;
            ++next;
            break;
        }
    }
    // Untouched first-stage rankings for proposals not reached before an
    // abort, so partial artifacts stay complete per proposal.
    for (; next < ordered.size(); ++next) result.rankings.push_back(ordered[next]);

    if (result.cost.judge_calls > 0) {
        result.cost.cache_hit_ratio =
            static_cast<double>(result.cost.cache_hits) / static_cast<double>(result.cost.judge_calls);
    }

    std::map<std::string, std::set<std::string>> relevant;
    for (const Ranking& r : result.rankings) {
        const std::vector<std::string> mi = mag.mi_papers(r.proposal_id);
        relevant[r.proposal_id] = std::set<std::string>(mi.begin(), mi.end());
    }
    result.eval = evaluate_rankings(result.rankings, relevant, k_list, "rerank");
    return result;
}

}  // namespace mir
