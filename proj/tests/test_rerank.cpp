#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "mir/fixture.hpp"
#include "mir/rerank.hpp"
#include "mir/triplet.hpp"
#include "test_helpers.hpp"

using namespace mir;

namespace {

// Scripted judge backend for offline tests.
class MockJudgeClient : public JudgeClient {
public:
    explicit MockJudgeClient(std::function<JudgeResponse(const JudgeRequest&, int)> script)
        : script_(std::move(script)) {}

    JudgeResponse complete(const JudgeRequest& request) override {
        const int call = calls_++;
        return script_(request, call);
    }

    int calls() const { return calls_.load(); }

private:
    std::function<JudgeResponse(const JudgeRequest&, int)> script_;
    std::atomic<int> calls_{0};
};

JudgeResponse canned(const std::string& text) { return {text, 100, 20}; }

std::string temp_dir(const std::string& tag) {
    const auto path = std::filesystem::temp_directory_path() /
                      ("mir_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
    return path.string();
}

JudgeConfig fast_config() {
    JudgeConfig config;
    config.retry = {3, 1};
    return config;
}

Ranking ranking_of(const std::string& pid, const std::vector<std::string>& order) {
    Ranking r;
    r.proposal_id = pid;
    for (std::size_t i = 0; i < order.size(); ++i) r.items.push_back({order[i], static_cast<double>(i)});
    return r;
}

const std::string kGoodPointwise =
    R"({"problem_proximity_score":0.8,"methodological_utility_score":0.7,"confidence":0.9,)"
    R"("reasoning":"transfers directly","relevance_score":1})";

}  // namespace

TEST_CASE("select_topk preserves first-stage order and handles short rankings") {
    Ranking r = ranking_of("P", {"A", "B", "C"});
    const auto top2 = select_topk(r, 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].paper_id == "A");
    CHECK(top2[1].paper_id == "B");
    CHECK(select_topk(r, 10).size() == 3);
    CHECK(select_topk(r, 10) == select_topk(r, 10));
    CHECK_THROWS(select_topk(r, 0));
}

TEST_CASE("pointwise responses parse to verdicts") {
    std::optional<RawScores> raw;
    std::string reasoning;
    CHECK(parse_pointwise_response(kGoodPointwise, &raw, &reasoning) == Verdict::relevant);
    REQUIRE(raw.has_value());
    CHECK(raw->problem_proximity == doctest::Approx(0.8));
    CHECK(reasoning == "transfers directly");

    CHECK(parse_pointwise_response(R"({"relevance_score":0})", nullptr, nullptr) == Verdict::non_relevant);
    CHECK(parse_pointwise_response("Sure! Here you go: {\"relevance_score\": 1}", nullptr, nullptr) ==
          Verdict::relevant);
    CHECK(parse_pointwise_response("no json here", nullptr, nullptr) == Verdict::unknown);
    CHECK(parse_pointwise_response(R"({"relevance_score":2})", nullptr, nullptr) == Verdict::unknown);
    CHECK(parse_pointwise_response(R"({"other":1})", nullptr, nullptr) == Verdict::unknown);

    // Out-of-range auxiliary scores are dropped, the verdict stands.
    raw.reset();
    CHECK(parse_pointwise_response(
              R"({"problem_proximity_score":1.4,"methodological_utility_score":0.5,"confidence":0.5,"relevance_score":1})",
              &raw, nullptr) == Verdict::relevant);
    CHECK_FALSE(raw.has_value());
}

TEST_CASE("yes/no replies parse case-insensitively with wrappers stripped") {
    CHECK(parse_yes_no_response("{{Yes}}") == Verdict::relevant);
    CHECK(parse_yes_no_response("no.") == Verdict::non_relevant);
    CHECK(parse_yes_no_response("  YES\n") == Verdict::relevant);
    CHECK(parse_yes_no_response("{No}") == Verdict::non_relevant);
    CHECK(parse_yes_no_response("maybe") == Verdict::unknown);
    CHECK(parse_yes_no_response("yes and no") == Verdict::unknown);
}

TEST_CASE("judge_pointwise parses, retries, and caches") {
    const Mag mag = mir_test::small_mag();
    const PaperRecord& paper = mag.paper("A");
    const PromptLibrary prompts = PromptLibrary::load();
    const JudgeConfig config = fast_config();

    SUBCASE("clean response judges relevant and embeds the anchor criteria") {
        MockJudgeClient client([&](const JudgeRequest& req, int) {
            CHECK(req.messages.size() == 1);
            CHECK(req.messages[0].text.find("Core Assessment Objective") != std::string::npos);
            CHECK(req.messages[0].text.find("substantive methodological utility") != std::string::npos);
            CHECK(req.messages[0].text.find(paper.title) != std::string::npos);
            return canned(kGoodPointwise);
        });
        const Judgment j = judge_pointwise(client, nullptr, config, prompts, "proposal text", paper, nullptr);
        CHECK(j.verdict == Verdict::relevant);
        CHECK(client.calls() == 1);
    }
    SUBCASE("score zero is non-relevant") {
        MockJudgeClient client([](const JudgeRequest&, int) { return canned(R"({"relevance_score":0})"); });
        CHECK(judge_pointwise(client, nullptr, config, prompts, "p", paper, nullptr).verdict ==
              Verdict::non_relevant);
    }
    SUBCASE("persistent garbage exhausts retries into unknown") {
        MockJudgeClient client([](const JudgeRequest&, int) { return canned("not parseable"); });
        const Judgment j = judge_pointwise(client, nullptr, config, prompts, "p", paper, nullptr);
        CHECK(j.verdict == Verdict::unknown);
        CHECK(client.calls() == 4);  // initial attempt + 3 retries
    }
    SUBCASE("garbage then success recovers") {
        MockJudgeClient client([](const JudgeRequest&, int call) {
            return call == 0 ? canned("garbage") : canned(kGoodPointwise);
        });
        CHECK(judge_pointwise(client, nullptr, config, prompts, "p", paper, nullptr).verdict ==
              Verdict::relevant);
        CHECK(client.calls() == 2);
    }
    SUBCASE("cache answers replays without backend calls") {
        const TranscriptCache cache(temp_dir("cache"));
        MockJudgeClient client([](const JudgeRequest&, int) { return canned(kGoodPointwise); });
        const Judgment first = judge_pointwise(client, &cache, config, prompts, "p", paper, nullptr);
        CHECK_FALSE(first.from_cache);
        const Judgment second = judge_pointwise(client, &cache, config, prompts, "p", paper, nullptr);
        CHECK(second.from_cache);
        CHECK(second.verdict == first.verdict);
        CHECK(client.calls() == 1);
    }
    SUBCASE("cache keys separate models, temperatures, and input modes") {
        const std::string key_a = cache_key("model-a", "prompt", 0.0, "abstract");
        CHECK(key_a != cache_key("model-b", "prompt", 0.0, "abstract"));
        CHECK(key_a != cache_key("model-a", "prompt", 0.5, "abstract"));
        CHECK(key_a != cache_key("model-a", "prompt", 0.0, "full_paper"));
        CHECK(key_a == cache_key("model-a", "prompt", 0.0, "abstract"));
    }
}

TEST_CASE("judge_agent runs the three-stage protocol") {
    const Mag mag = mir_test::small_mag();
    const PaperRecord& paper = mag.paper("A");
    const PromptLibrary prompts = PromptLibrary::load();
    JudgeConfig config = fast_config();
    config.strategy = JudgeStrategy::agent;

    SUBCASE("stage replies flow into a relevant verdict") {
        MockJudgeClient client([](const JudgeRequest& req, int) {
            if (req.messages[0].text.find("generic plan of action") != std::string::npos ||
                req.messages[0].text.find("A generic plan of action") != std::string::npos) {
                return canned("1. objective 2. core problem 3. subproblems 4. plan");
            }
            if (req.messages[0].text.find("only one of the following two words") != std::string::npos) {
                return canned("{{Yes}}");
            }
            return canned("the paper applies to subproblem 2");
        });
        const ResolvedCall stage1 = agent_proposal_analysis(client, nullptr, config, prompts, "proposal");
        const AgentJudgment aj =
            judge_agent(client, nullptr, config, prompts, "proposal", stage1.text, paper, nullptr);
        CHECK(aj.judgment.verdict == Verdict::relevant);
        CHECK(aj.paper_analysis.find("subproblem") != std::string::npos);
        CHECK(client.calls() == 3);
    }
    SUBCASE("lowercase punctuated no is non-relevant") {
        MockJudgeClient client([](const JudgeRequest& req, int) {
            if (req.messages[0].text.find("only one of the following two words") != std::string::npos) {
                return canned("no.");
            }
            return canned("analysis");
        });
        const AgentJudgment aj = judge_agent(client, nullptr, config, prompts, "p", "analysis", paper, nullptr);
        CHECK(aj.judgment.verdict == Verdict::non_relevant);
    }
    SUBCASE("stage-2 transport failure yields unknown") {
        MockJudgeClient client([](const JudgeRequest&, int) -> JudgeResponse {
            throw JudgeTransportError("down");
        });
        const AgentJudgment aj = judge_agent(client, nullptr, config, prompts, "p", "analysis", paper, nullptr);
        CHECK(aj.judgment.verdict == Verdict::unknown);
        CHECK(aj.judgment.transport_failed);
        CHECK(client.calls() == 4);  // stage 2 exhausted, stage 3 never ran
    }
}

TEST_CASE("reorder stably partitions the top-k") {
    const Ranking r = ranking_of("P", {"A", "B", "C", "D", "E", "F", "G"});

    SUBCASE("hand case") {
        const std::map<std::string, Verdict> verdicts{{"A", Verdict::non_relevant},
                                                      {"B", Verdict::relevant},
                                                      {"C", Verdict::non_relevant},
                                                      {"D", Verdict::relevant},
                                                      {"E", Verdict::relevant}};
        const Ranking out = reorder(r, 5, verdicts);
        std::vector<std::string> order;
        for (const RankedItem& item : out.items) order.push_back(item.paper_id);
        CHECK(order == std::vector<std::string>{"B", "D", "E", "A", "C", "F", "G"});
    }
    SUBCASE("all relevant leaves the order unchanged") {
        std::map<std::string, Verdict> verdicts;
        for (const char* id : {"A", "B", "C"}) verdicts[id] = Verdict::relevant;
        const Ranking out = reorder(r, 3, verdicts);
        CHECK(out.items[0].paper_id == "A");
        CHECK(out.items[1].paper_id == "B");
        CHECK(out.items[2].paper_id == "C");
    }
    SUBCASE("all non-relevant is a single unchanged block") {
        std::map<std::string, Verdict> verdicts;
        for (const char* id : {"A", "B", "C"}) verdicts[id] = Verdict::non_relevant;
        const Ranking out = reorder(r, 3, verdicts);
        CHECK(out.items[0].paper_id == "A");
        CHECK(out.items[2].paper_id == "C");
    }
    SUBCASE("unknown rides with the relevant block") {
        const std::map<std::string, Verdict> verdicts{
            {"A", Verdict::non_relevant}, {"B", Verdict::unknown}, {"C", Verdict::relevant}};
        const Ranking out = reorder(r, 3, verdicts);
        CHECK(out.items[0].paper_id == "B");
        CHECK(out.items[1].paper_id == "C");
        CHECK(out.items[2].paper_id == "A");
    }
    SUBCASE("verdicts outside the top-k are an error") {
        const std::map<std::string, Verdict> verdicts{
            {"A", Verdict::relevant}, {"B", Verdict::relevant}, {"G", Verdict::relevant}};
        CHECK_THROWS_AS(reorder(r, 3, verdicts), std::invalid_argument);
    }
    SUBCASE("reorder is a top-k permutation and idempotent") {
        Rng rng(13);
        for (int trial = 0; trial < 40; ++trial) {
            std::map<std::string, Verdict> verdicts;
            for (const char* id : {"A", "B", "C", "D", "E"}) {
                const auto roll = uniform_index(rng, 3);
                verdicts[id] = roll == 0   ? Verdict::relevant
                               : roll == 1 ? Verdict::non_relevant
                                           : Verdict::unknown;
            }
            const Ranking once = reorder(r, 5, verdicts);
            std::multiset<std::string> before, after;
            for (const RankedItem& i : r.items) before.insert(i.paper_id);
            for (const RankedItem& i : once.items) after.insert(i.paper_id);
            CHECK(before == after);
            CHECK(once.items[5].paper_id == "F");  // tail untouched
            const Ranking twice = reorder(once, 5, verdicts);
            for (std::size_t i = 0; i < once.items.size(); ++i) {
                CHECK(twice.items[i].paper_id == once.items[i].paper_id);
            }
        }
    }
}

TEST_CASE("build_fewshots retrieves similar train proposals with both classes") {
    const Mag mag = fixture_mag(FixtureConfig{});
    const HashingEmbedder emb(64);
    const std::string test_id = mag.proposal_ids(Split::test).front();
    const ProposalRecord& proposal = mag.proposal(test_id);

    const std::vector<Exemplar> shots = build_fewshots(proposal, mag, emb, 2, 9);
    REQUIRE(shots.size() == 2);
    for (const Exemplar& ex : shots) {
        bool has_one = false, has_zero = false;
        for (const auto& [text, score] : ex.citations) {
            if (score == 1) has_one = true;
            if (score == 0) has_zero = true;
        }
        CHECK(has_one);
        CHECK(has_zero);
        CHECK_FALSE(ex.paper_abstract.empty());
    }

    // The first exemplar comes from the distance-nearest usable train
    // proposal (brute-force check over the encoder distances).
    const std::vector<double> q = emb.embed(proposal.problem + "\n" + proposal.motivation);
    std::vector<std::pair<double, std::string>> order;
    for (const std::string& pid : mag.proposal_ids(Split::train)) {
        const ProposalRecord& p = mag.proposal(pid);
        const std::vector<double> v = emb.embed(p.problem + "\n" + p.motivation);
        double sq = 0;
        for (std::size_t i = 0; i < v.size(); ++i) sq += (v[i] - q[i]) * (v[i] - q[i]);
        order.emplace_back(std::sqrt(sq), pid);
    }
    std::sort(order.begin(), order.end());
    const ProposalRecord& nearest = mag.proposal(order.front().second);
    CHECK(shots[0].proposal_text == nearest.problem + "\n" + nearest.motivation);

    // Deterministic in the seed.
    const std::vector<Exemplar> again = build_fewshots(proposal, mag, emb, 2, 9);
    CHECK(again[0].citations == shots[0].citations);
    CHECK(render_exemplars(again) == render_exemplars(shots));
    CHECK(render_exemplars(shots).find("Relevance Score: 1") != std::string::npos);
    CHECK(render_exemplars(shots).find("Relevance Score: 0") != std::string::npos);
}

TEST_CASE("truncate_full_text cuts at the end of the methodology section") {
    PaperRecord paper;
    paper.id = "L";
    paper.title = "t";
    paper.abstract_text = "the abstract";

    SUBCASE("explicit headings") {
        paper.full_text =
            "1 Introduction\nintro text\n3 Methodology\nwe do things\nmore method text\n"
            "4 Experiments\nnumbers numbers\n5 Conclusion\nbye\n";
        std::string note;
        const std::string out = truncate_full_text(paper, &note);
        CHECK(out.find("we do things") != std::string::npos);
        CHECK(out.find("more method text") != std::string::npos);
        CHECK(out.find("4 Experiments") == std::string::npos);
        CHECK(out.find("numbers") == std::string::npos);
        CHECK(note.empty());
    }
    SUBCASE("markdown-style headings work too") {
        paper.full_text = "# Approach\ncontent here\n## Results\nfindings\n";
        const std::string out = truncate_full_text(paper);
        CHECK(out.find("content here") != std::string::npos);
        CHECK(out.find("findings") == std::string::npos);
    }
    SUBCASE("headingless text falls back to a 60% prefix") {
        std::string body(1000, 'x');
        paper.full_text = body;
        std::string note;
        const std::string out = truncate_full_text(paper, &note);
        CHECK(out.size() == 600);
        CHECK(note.find("60%") != std::string::npos);
    }
    SUBCASE("missing full text falls back to the abstract") {
        paper.full_text.reset();
        std::string note;
        CHECK(truncate_full_text(paper, &note) == "the abstract");
        CHECK(note.find("abstract") != std::string::npos);
    }
    SUBCASE("prose starting with a section word is not a heading") {
        paper.full_text =
            "Model compression is a broad topic.\n3 Method\ncore content\n4 Results\nnumbers\n";
        const std::string out = truncate_full_text(paper);
        CHECK(out.find("core content") != std::string::npos);
        CHECK(out.find("broad topic") != std::string::npos);
    }
}

TEST_CASE("rerank_pipeline with an oracle judge prioritizes true positives") {
    const Mag mag = fixture_mag(FixtureConfig{});
    const std::vector<std::string> corpus_ids = corpus(mag, CorpusSetting::restricted);
    const HashingEmbedder emb(64);
    const EmbeddingStore store = embed_corpus(emb, mag, corpus_ids);

    std::vector<Ranking> first_stage;
    std::map<std::string, std::set<std::string>> relevant;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        first_stage.push_back(rank(emb, mag.proposal(pid), store));
        const auto mi = mag.mi_papers(pid);
        relevant[pid] = std::set<std::string>(mi.begin(), mi.end());
    }

    // Oracle judge: relevant iff the paper is ground truth for the proposal
    // named in the prompt. The proposal text is embedded in the prompt, so
    // look the proposal up by its problem text.
    const PromptLibrary prompts = PromptLibrary::load();
    MockJudgeClient client([&](const JudgeRequest& req, int) {
        for (const auto& [pid, rel] : relevant) {
            const ProposalRecord& p = mag.proposal(pid);
            if (req.messages[0].text.find(p.problem) == std::string::npos) continue;
            for (const std::string& lid : rel) {
                const PaperRecord& paper = mag.paper(lid);
                if (req.messages[0].text.find("Title: " + paper.title + "\n") != std::string::npos &&
                    req.messages[0].text.find(paper.abstract_text) != std::string::npos) {
                    return canned(R"({"relevance_score":1})");
                }
            }
            return canned(R"({"relevance_score":0})");
        }
        return canned(R"({"relevance_score":0})");
    });

    JudgeConfig config = fast_config();
    config.k = 10;
    config.max_parallel = 2;
    const RerankResult result =
        rerank_pipeline(config, mag, first_stage, client, nullptr, prompts, nullptr, {3, 5});
    CHECK_FALSE(result.aborted);
    REQUIRE(result.rankings.size() == first_stage.size());

    std::map<std::string, Ranking> before;
    for (const Ranking& r : first_stage) before[r.proposal_id] = r;
    for (const Ranking& r : result.rankings) {
        const std::set<std::string>& rel = relevant[r.proposal_id];
        // Within the top k, every relevant paper precedes every non-relevant one.
        bool seen_non_relevant = false;
        for (int i = 0; i < config.k && i < static_cast<int>(r.items.size()); ++i) {
            const bool is_rel = rel.count(r.items[static_cast<std::size_t>(i)].paper_id) > 0;
            if (!is_rel) seen_non_relevant = true;
            else CHECK_FALSE(seen_non_relevant);
        }
        // Recall at 3 never degrades.
        if (!rel.empty()) {
            CHECK(recall_at_k(r, rel, 3) >= recall_at_k(before[r.proposal_id], rel, 3));
        }
    }
    CHECK(result.cost.judge_calls > 0);
    CHECK(result.cost.prompt_tokens > 0);
}

TEST_CASE("agent few-shot prompts carry the rendered exemplars") {
    const Mag mag = mir_test::small_mag();
    const PaperRecord& paper = mag.paper("A");
    const PromptLibrary prompts = PromptLibrary::load();
    JudgeConfig config = fast_config();
    config.strategy = JudgeStrategy::agent;
    config.shots = ShotMode::few;

    std::vector<Exemplar> exemplars(1);
    exemplars[0].proposal_text = "exemplar proposal body";
    exemplars[0].paper_abstract = "exemplar paper abstract";
    exemplars[0].citations = {{"we adopt the approach", 1}, {"background mention", 0}};

    std::vector<std::string> seen;
    MockJudgeClient client([&](const JudgeRequest& req, int) {
        seen.push_back(req.messages[0].text);
        if (req.messages[0].text.find("only one of the following two words") != std::string::npos) {
            return canned("{{No}}");
        }
        return canned("stage analysis");
    });
    const AgentJudgment aj =
        judge_agent(client, nullptr, config, prompts, "proposal", "stage1 analysis", paper, &exemplars);
    CHECK(aj.judgment.verdict == Verdict::non_relevant);
    REQUIRE(seen.size() == 2);
    // Stage 2 holds the exemplars, ahead of the proposal section.
    const std::size_t exemplar_at = seen[0].find("exemplar paper abstract");
    const std::size_t proposal_at = seen[0].find("Here is the Research Proposal:");
    REQUIRE(exemplar_at != std::string::npos);
    REQUIRE(proposal_at != std::string::npos);
    CHECK(exemplar_at < proposal_at);
    CHECK(seen[0].find("Relevance Score: 1") != std::string::npos);
    CHECK(seen[1].find("exemplar paper abstract") == std::string::npos);  // stage 3 stays lean
}

TEST_CASE("rerank_pipeline works with the agent strategy") {
    const Mag mag = fixture_mag(FixtureConfig{});
    const HashingEmbedder emb(64);
    const EmbeddingStore store = embed_corpus(emb, mag, corpus(mag, CorpusSetting::restricted));
    std::vector<Ranking> first_stage;
    std::map<std::string, std::set<std::string>> relevant;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        first_stage.push_back(rank(emb, mag.proposal(pid), store));
        const auto mi = mag.mi_papers(pid);
        relevant[pid] = std::set<std::string>(mi.begin(), mi.end());
    }
    const PromptLibrary prompts = PromptLibrary::load();
    MockJudgeClient client([&](const JudgeRequest& req, int) {
        const std::string& text = req.messages[0].text;
        if (text.find("only one of the following two words") == std::string::npos) {
            return canned("intermediate analysis");
        }
        // Oracle verdict keyed on the ground-truth abstract appearing in the
        // stage-3 prompt.
        for (const auto& [pid, rel] : relevant) {
            if (text.find(mag.proposal(pid).problem) == std::string::npos) continue;
            for (const std::string& lid : rel) {
                if (text.find(mag.paper(lid).abstract_text) != std::string::npos) return canned("{{Yes}}");
            }
        }
        return canned("{{No}}");
    });

    JudgeConfig config = fast_config();
    config.strategy = JudgeStrategy::agent;
    config.k = 5;
    const RerankResult result =
        rerank_pipeline(config, mag, first_stage, client, nullptr, prompts, nullptr, {3});
    CHECK_FALSE(result.aborted);
    // One stage-1 call per proposal plus two per judged paper.
    CHECK(result.cost.judge_calls ==
          first_stage.size() + 2 * static_cast<std::size_t>(config.k) * first_stage.size());
    for (const Ranking& r : result.rankings) {
        const std::set<std::string>& rel = relevant[r.proposal_id];
        bool seen_non_relevant = false;
        for (int i = 0; i < config.k; ++i) {
            const bool is_rel = rel.count(r.items[static_cast<std::size_t>(i)].paper_id) > 0;
            if (!is_rel) seen_non_relevant = true;
            else CHECK_FALSE(seen_non_relevant);
        }
    }
}

TEST_CASE("rerank_pipeline replays entirely from cache") {
    const Mag mag = fixture_mag(FixtureConfig{});
    const HashingEmbedder emb(64);
    const EmbeddingStore store = embed_corpus(emb, mag, corpus(mag, CorpusSetting::restricted));
    std::vector<Ranking> first_stage;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        first_stage.push_back(rank(emb, mag.proposal(pid), store));
    }
    const PromptLibrary prompts = PromptLibrary::load();
    const TranscriptCache cache(temp_dir("replay"));
    MockJudgeClient client([](const JudgeRequest&, int) { return canned(R"({"relevance_score":1})"); });

    JudgeConfig config = fast_config();
    config.k = 5;
    const RerankResult first = rerank_pipeline(config, mag, first_stage, client, &cache, prompts, nullptr);
    const int calls_after_first = client.calls();
    CHECK(calls_after_first > 0);

    const RerankResult second = rerank_pipeline(config, mag, first_stage, client, &cache, prompts, nullptr);
    CHECK(client.calls() == calls_after_first);  // zero new backend calls
    CHECK(second.cost.cache_hits == second.cost.judge_calls);
    CHECK(rankings_to_jsonl(second.rankings) == rankings_to_jsonl(first.rankings));
    CHECK(eval_to_json(second.eval).dump() == eval_to_json(first.eval).dump());
}

TEST_CASE("rerank_pipeline aborts when the backend is mostly unreachable") {
    const Mag mag = fixture_mag(FixtureConfig{});
    const HashingEmbedder emb(64);
    const EmbeddingStore store = embed_corpus(emb, mag, corpus(mag, CorpusSetting::restricted));
    std::vector<Ranking> first_stage;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        first_stage.push_back(rank(emb, mag.proposal(pid), store));
    }
    const PromptLibrary prompts = PromptLibrary::load();
    MockJudgeClient client([](const JudgeRequest&, int) -> JudgeResponse {
        throw JudgeTransportError("nope");
    });
    JudgeConfig config = fast_config();
    config.k = 5;
    const RerankResult result = rerank_pipeline(config, mag, first_stage, client, nullptr, prompts, nullptr);
    CHECK(result.aborted);
    CHECK(result.rankings.size() == first_stage.size());  // partial artifacts stay complete
    CHECK(result.cost.transport_failures * 2 > result.cost.judge_calls);
}

TEST_CASE("the http judge client speaks the wire contract") {
    ::setenv("MIR_JUDGE_API_KEY", "sk-test-key", 1);
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        CHECK(req.get_header_value("Authorization") == "Bearer sk-test-key");
        const json body = json::parse(req.body);
        CHECK(body.at("model_id") == "m1");
        CHECK(body.at("messages").size() == 1);
        CHECK(body.at("messages")[0].at("role") == "user");
        res.set_content(json{{"text", R"({"relevance_score":1})"},
                             {"prompt_tokens", 42},
                             {"completion_tokens", 7}}
                            .dump(),
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpJudgeClient client("http://127.0.0.1:" + std::to_string(port));
    JudgeRequest request;
    request.model_id = "m1";
    request.messages = {{"user", "judge this"}};
    const JudgeResponse response = client.complete(request);
    CHECK(response.text == R"({"relevance_score":1})");
    CHECK(response.prompt_tokens == 42);
    CHECK(response.completion_tokens == 7);
    CHECK(hits == 1);

    server.stop();
    worker.join();
    ::unsetenv("MIR_JUDGE_API_KEY");

    CHECK_THROWS_AS(client.complete(request), JudgeTransportError);
}
