#include "mir/fixture.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mir/triplet.hpp"

namespace mir {

namespace {

constexpr int kProblemRegister = 12;  // problem tokens per topic
constexpr int kMethodRegister = 12;
constexpr int kBackgroundRegister = 6;
constexpr int kFillerCount = 20;

std::string prob_token(int topic, int i) { return "p" + std::to_string(topic) + "w" + std::to_string(i); }
std::string meth_token(int topic, int i) { return "m" + std::to_string(topic) + "w" + std::to_string(i); }
std::string back_token(int topic, int i) { return "b" + std::to_string(topic) + "w" + std::to_string(i); }
std::string filler_token(int i) { return "filler" + std::to_string(i); }

// Token kind and topic are recoverable from the token text itself, which
// keeps the fixture checker independent of generator state.
struct TokenInfo {
    char kind = '?';  // p | m | b | f
    int topic = -1;
};

TokenInfo classify_token(const std::string& tok) {
    TokenInfo info;
    if (tok.rfind("filler", 0) == 0) {
        info.kind = 'f';
        return info;
    }
    if (tok.size() >= 3 && (tok[0] == 'p' || tok[0] == 'm' || tok[0] == 'b')) {
        const std::size_t w = tok.find('w', 1);
        if (w != std::string::npos && w > 1) {
            info.kind = tok[0];
            info.topic = std::stoi(tok.substr(1, w - 1));
        }
    }
    return info;
}

template <class T>
std::vector<T> sample_without_replacement(Rng& rng, std::vector<T> pool, std::size_t n) {
    std::vector<T> out;
    n = std::min(n, pool.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = uniform_index(rng, pool.size());
        out.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
}

std::string join_tokens(Rng& rng, std::vector<std::string> tokens) {
    for (std::size_t i = tokens.size(); i > 1; --i) {
        std::swap(tokens[i - 1], tokens[uniform_index(rng, i)]);
    }
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string pad_id(const char* prefix, int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
    return buf;
}

struct PaperPlan {
    std::string id;
    int topic = 0;
    bool is_method = false;
    std::vector<std::string> prob_tokens;
    std::vector<std::string> meth_tokens;  // background papers: back tokens
};

}  // namespace

FixtureData generate_fixture(const FixtureConfig& config) {
    if (config.topics < 2) throw std::invalid_argument("fixture needs at least 2 topics");
    if (config.proposals < config.topics * 2) {
        throw std::invalid_argument("fixture needs at least 2 proposals per topic");
    }
    if (config.papers < config.topics * 4) {
        throw std::invalid_argument("fixture needs at least 4 papers per topic");
    }
    Rng rng(substream_seed(config.seed, "fixture"));
    const int T = config.topics;

    std::vector<std::string> fillers;
    for (int i = 0; i < kFillerCount; ++i) fillers.push_back(filler_token(i));

    // Papers: ~55% method papers, the rest surface-similar background ones.
    const int n_method = static_cast<int>(config.papers * 0.55);
    std::vector<PaperPlan> plans;
    std::vector<std::vector<std::size_t>> method_pool(T), back_pool(T);
    for (int i = 0; i < config.papers; ++i) {
        PaperPlan plan;
        plan.id = pad_id("L", i);
        plan.is_method = i < n_method;
        plan.topic = plan.is_method ? i % T : (i - n_method) % T;
        const int t = plan.topic;
        if (plan.is_method) {
            std::vector<std::string> probs, meths;
            for (int j = 0; j < kProblemRegister; ++j) probs.push_back(prob_token(t, j));
            for (int j = 0; j < kMethodRegister; ++j) meths.push_back(meth_token(t, j));
            const std::size_t n_prob = 6 + uniform_index(rng, 2);  // 6 or 7
            plan.prob_tokens = sample_without_replacement(rng, probs, n_prob);
            plan.meth_tokens = sample_without_replacement(rng, meths, 4);
            method_pool[t].push_back(plans.size());
        } else {
            std::vector<std::string> probs, backs;
            for (int j = 0; j < kProblemRegister; ++j) probs.push_back(prob_token(t, j));
            for (int j = 0; j < kBackgroundRegister; ++j) backs.push_back(back_token(t, j));
            plan.prob_tokens = sample_without_replacement(rng, probs, 7);
            plan.meth_tokens = sample_without_replacement(rng, backs, 2);
            back_pool[t].push_back(plans.size());
        }
        plans.push_back(std::move(plan));
    }

    std::ostringstream papers_out;
    for (const PaperPlan& plan : plans) {
        std::vector<std::string> abstract_tokens = plan.prob_tokens;
        abstract_tokens.insert(abstract_tokens.end(), plan.meth_tokens.begin(), plan.meth_tokens.end());
        for (const std::string& f : sample_without_replacement(rng, fillers, 2)) abstract_tokens.push_back(f);

        std::vector<std::string> title_tokens;
        if (plan.is_method) {
            title_tokens = {plan.meth_tokens[0], plan.meth_tokens[1], plan.prob_tokens[0]};
        } else {
            title_tokens = {plan.prob_tokens[0], plan.prob_tokens[1], plan.meth_tokens[0]};
        }

        json rec{{"id", plan.id},
                 {"title", join_tokens(rng, title_tokens)},
                 {"abstract", join_tokens(rng, abstract_tokens) + "."},
                 {"year", plan.is_method ? 2017 : 2016}};
        if (plan.is_method) {
            std::ostringstream full;
            full << "1 Introduction\n"
                 << join_tokens(rng, plan.prob_tokens) << " " << fillers[0] << "\n"
                 << "2 Related Work\n"
                 << fillers[1] << " " << fillers[2] << "\n"
                 << "3 Methodology\n"
                 << join_tokens(rng, plan.meth_tokens) << " " << join_tokens(rng, plan.prob_tokens) << "\n"
                 << "4 Experiments\n"
                 << fillers[3] << " " << fillers[4] << "\n"
                 << "5 Conclusion\n"
                 << fillers[5] << "\n";
            rec["full_text"] = full.str();
        }
        papers_out << rec.dump() << '\n';
    }

    // Proposals: round-robin topics so every split covers every topic.
    const int n_train = static_cast<int>(config.proposals * config.train_fraction);
    const int n_dev = std::max(1, static_cast<int>(config.proposals * config.dev_fraction));
    std::ostringstream proposals_out;
    std::ostringstream citations_out;
    std::vector<int> per_topic_seen(T, 0);

    for (int i = 0; i < config.proposals; ++i) {
        const int t = i % T;
        const std::string pid = pad_id("P", i);
        const std::string split = i < n_train ? "train" : (i < n_train + n_dev ? "dev" : "test");
        const std::string date = split == "train" ? "2018-03-0" + std::to_string(1 + i % 9)
                                 : split == "dev" ? "2019-02-1" + std::to_string(i % 9)
                                                  : "2019-09-0" + std::to_string(1 + i % 9);

        std::vector<std::string> probs;
        for (int j = 0; j < kProblemRegister; ++j) probs.push_back(prob_token(t, j));
        std::vector<std::string> problem_tokens(probs.begin(), probs.begin() + 7);
        std::vector<std::string> motivation_tokens(probs.begin() + 7, probs.end());
        problem_tokens.push_back(fillers[uniform_index(rng, fillers.size())]);
        motivation_tokens.push_back(fillers[uniform_index(rng, fillers.size())]);

        proposals_out << json{{"id", pid},
                              {"problem", join_tokens(rng, problem_tokens) + "."},
                              {"motivation", join_tokens(rng, motivation_tokens) + "."},
                              {"split", split},
                              {"date", date}}
                             .dump()
                      << '\n';

        // MI citations slide a stride-1 window over the topic's method pool,
        // so consecutive same-topic proposals always share a method paper
        // and every T2 hard pool stays non-empty.
        const int j = per_topic_seen[t]++;
        const auto& mpool = method_pool[t];
        const std::size_t n_mi = 2 + uniform_index(rng, 2);  // 2 or 3
        std::set<std::size_t> picked;
        for (std::size_t m = 0; m < n_mi; ++m) picked.insert(mpool[(j + m) % mpool.size()]);
        for (std::size_t idx : picked) {
            const PaperPlan& paper = plans[idx];
            json contexts = json::array();
            const std::size_t n_ctx = 1 + uniform_index(rng, 2);
            for (std::size_t c = 0; c < n_ctx; ++c) {
                std::vector<std::string> ctx_tokens = {
                    paper.meth_tokens[uniform_index(rng, paper.meth_tokens.size())],
                    paper.meth_tokens[uniform_index(rng, paper.meth_tokens.size())],
                    prob_token(t, static_cast<int>(uniform_index(rng, kProblemRegister))),
                    fillers[uniform_index(rng, fillers.size())]};
                contexts.push_back(json{{"text", join_tokens(rng, ctx_tokens) + "."},
                                        {"intent", uniform_index(rng, 2) == 0 ? "uses" : "extension"}});
            }
            if (uniform_index(rng, 4) == 0) {
                contexts.push_back(json{{"text", join_tokens(rng, {paper.prob_tokens[0],
                                                                   fillers[uniform_index(rng, fillers.size())]}) +
                                                     "."},
                                        {"intent", "background"}});
            }
            citations_out << json{{"proposal_id", pid}, {"paper_id", paper.id}, {"contexts", contexts}}.dump()
                          << '\n';
        }

        // Non-MI citations cross topics.
        static const std::vector<std::string> non_mi_intents = {"background", "motivation", "similar",
                                                                "difference", "future_work", "unsure"};
        const std::size_t n_non = 2;
        for (std::size_t m = 0; m < n_non; ++m) {
            const int s = (t + 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(T - 1)))) % T;
            const auto& bpool = back_pool[s];
            const PaperPlan& paper = plans[bpool[uniform_index(rng, bpool.size())]];
            std::vector<std::string> ctx_tokens = {paper.prob_tokens[0], paper.prob_tokens[1],
                                                   fillers[uniform_index(rng, fillers.size())]};
            json contexts = json::array();
            contexts.push_back(json{{"text", join_tokens(rng, ctx_tokens) + "."},
                                    {"intent", non_mi_intents[uniform_index(rng, non_mi_intents.size())]}});
            citations_out << json{{"proposal_id", pid}, {"paper_id", paper.id}, {"contexts", contexts}}.dump()
                          << '\n';
        }
    }

    return {proposals_out.str(), papers_out.str(), citations_out.str()};
}

Mag fixture_mag(const FixtureConfig& config) {
    const FixtureData data = generate_fixture(config);
    std::istringstream p(data.proposals_jsonl), a(data.papers_jsonl), c(data.citations_jsonl);
    IngestResult result = ingest(p, a, c);
    if (!result.rejects.empty()) {
        throw std::logic_error("fixture generator produced rejected records: " + result.rejects[0].reason);
    }
    return std::move(result.mag);
}

FixtureCheck check_fixture(const Mag& mag, const FixtureConfig& config) {
    FixtureCheck check;
    auto complain = [&](const std::string& msg) {
        check.ok = false;
        if (check.problems.size() < 25) check.problems.push_back(msg);
    };

    auto non_filler_tokens = [&](const std::string& text) {
        std::set<std::string> out;
        for (const std::string& tok : tokenize(text)) {
            if (classify_token(tok).kind != 'f') out.insert(tok);
        }
        return out;
    };
    auto topic_of = [&](const std::set<std::string>& tokens) {
        std::set<int> topics;
        for (const std::string& tok : tokens) {
            const TokenInfo info = classify_token(tok);
            if (info.kind == 'p' || info.kind == 'm' || info.kind == 'b') topics.insert(info.topic);
        }
        return topics.size() == 1 ? *topics.begin() : -1;
    };

    std::map<std::string, int> proposal_topic;
    for (const auto& [pid, prop] : mag.proposals()) {
        const int t = topic_of(non_filler_tokens(prop.problem + " " + prop.motivation));
        if (t < 0) complain("proposal " + pid + " mixes topics");
        proposal_topic[pid] = t;
    }

    for (const auto& [pid, prop] : mag.proposals()) {
        const std::set<std::string> prop_tokens = non_filler_tokens(prop.problem + " " + prop.motivation);
        bool has_mi = false, has_all_non_mi = false;
        for (const CitationEdge& edge : mag.edges_of(pid)) {
            const PaperRecord& paper = mag.paper(edge.paper_id);
            const std::set<std::string> paper_tokens =
                non_filler_tokens(paper.title + " " + paper.abstract_text);
            std::size_t shared = 0;
            for (const std::string& tok : paper_tokens) shared += prop_tokens.count(tok);
            const double share = paper_tokens.empty()
                                     ? 0.0
                                     : static_cast<double>(shared) / static_cast<double>(paper_tokens.size());
            const int paper_topic = topic_of(paper_tokens);
            if (is_mi(edge)) {
                ++check.mi_edges;
                has_mi = true;
                if (share < 0.6) {
                    complain("MI edge " + pid + "->" + edge.paper_id + " shares only " +
                             std::to_string(share));
                }
                if (paper_topic != proposal_topic[pid]) {
                    complain("MI edge " + pid + "->" + edge.paper_id + " crosses topics");
                }
            } else {
                ++check.non_mi_edges;
                has_all_non_mi = true;
                if (paper_topic == proposal_topic[pid]) {
                    complain("non-MI edge " + pid + "->" + edge.paper_id + " stays in topic");
                }
                if (share >= 0.6) {
                    complain("non-MI edge " + pid + "->" + edge.paper_id + " shares " + std::to_string(share));
                }
            }
        }
        if (prop.split == Split::train) {
            if (!has_mi) complain("train proposal " + pid + " lacks an MI citation");
            if (!has_all_non_mi) complain("train proposal " + pid + " lacks an all-non-MI citation");
            bool shares = false;
            for (const CitationEdge& edge : mag.edges_of(pid)) {
                for (const std::string& other : mag.citing_proposals(edge.paper_id)) {
                    if (other != pid && mag.proposal(other).split == Split::train) shares = true;
                }
            }
            if (!shares) complain("train proposal " + pid + " shares no cited paper (empty T2 hard pool)");
        }
    }

    // Distractor mix: the restricted corpus must hold same-topic papers that
    // are not the proposal's own citations.
    const std::vector<std::string> restricted = corpus(mag, CorpusSetting::restricted);
    std::size_t with_fooler = 0, test_count = 0;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        ++test_count;
        const std::vector<std::string> cited = mag.cited_papers(pid);
        const std::set<std::string> cited_set(cited.begin(), cited.end());
        bool fooler = false;
        for (const std::string& lid : restricted) {
            if (cited_set.count(lid)) continue;
            const PaperRecord& paper = mag.paper(lid);
            if (topic_of(non_filler_tokens(paper.title + " " + paper.abstract_text)) == proposal_topic[pid]) {
                fooler = true;
                ++check.fooler_papers;
            }
        }
        if (fooler) ++with_fooler;
    }
    if (test_count > 0 && with_fooler * 2 < test_count) {
        complain("fewer than half the test proposals see a same-topic distractor");
    }
    (void)config;
    return check;
}

}  // namespace mir
