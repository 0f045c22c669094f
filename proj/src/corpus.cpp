#include "mir/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mir {

namespace {

const std::vector<CitationEdge> kNoEdges;
const std::vector<std::string> kNoProposals;

std::string require_string(const json& obj, const char* key, const char* what) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw std::runtime_error(std::string("missing or non-string field '") + key + "' in " + what);
    }
    return obj[key].get<std::string>();
}

}  // namespace

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw std::runtime_error("unknown split: " + s);
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

Intent intent_from_string(const std::string& s) {
    if (s == "background") return Intent::background;
    if (s == "motivation") return Intent::motivation;
    if (s == "future_work") return Intent::future_work;
    if (s == "similar") return Intent::similar;
    if (s == "difference") return Intent::difference;
    if (s == "uses") return Intent::uses;
    if (s == "extension") return Intent::extension;
    if (s == "unsure") return Intent::unsure;
    throw std::runtime_error("unknown intent: " + s);
}

std::string to_string(Intent i) {
    switch (i) {
        case Intent::background: return "background";
        case Intent::motivation: return "motivation";
        case Intent::future_work: return "future_work";
        case Intent::similar: return "similar";
        case Intent::difference: return "difference";
        case Intent::uses: return "uses";
        case Intent::extension: return "extension";
        case Intent::unsure: return "unsure";
    }
    return "?";
}

bool is_mi_intent(Intent i) { return i == Intent::uses || i == Intent::extension; }

bool is_mi(const CitationEdge& edge) {
    return std::any_of(edge.contexts.begin(), edge.contexts.end(),
                       [](const CitationContext& c) { return is_mi_intent(c.intent); });
}

CorpusSetting corpus_setting_from_string(const std::string& s) {
    if (s == "restricted") return CorpusSetting::restricted;
    if (s == "extended") return CorpusSetting::extended;
    throw std::runtime_error("unknown corpus setting: " + s);
}

std::string to_string(CorpusSetting s) {
    return s == CorpusSetting::restricted ? "restricted" : "extended";
}

const ProposalRecord& Mag::proposal(const std::string& id) const {
    auto it = proposals_.find(id);
    if (it == proposals_.end()) throw std::out_of_range("unknown proposal: " + id);
    return it->second;
}

const PaperRecord& Mag::paper(const std::string& id) const {
    auto it = papers_.find(id);
    if (it == papers_.end()) throw std::out_of_range("unknown paper: " + id);
    return it->second;
}

const std::vector<CitationEdge>& Mag::edges_of(const std::string& proposal_id) const {
    if (!has_proposal(proposal_id)) throw std::out_of_range("unknown proposal: " + proposal_id);
    auto it = edges_.find(proposal_id);
    return it == edges_.end() ? kNoEdges : it->second;
}

const CitationEdge& Mag::edge(const std::string& proposal_id, const std::string& paper_id) const {
    for (const CitationEdge& e : edges_of(proposal_id)) {
        if (e.paper_id == paper_id) return e;
    }
    throw std::out_of_range("no edge " + proposal_id + " -> " + paper_id);
}

const std::vector<std::string>& Mag::citing_proposals(const std::string& paper_id) const {
    if (!has_paper(paper_id)) throw std::out_of_range("unknown paper: " + paper_id);
    auto it = reverse_.find(paper_id);
    return it == reverse_.end() ? kNoProposals : it->second;
}

std::vector<std::string> Mag::mi_papers(const std::string& proposal_id) const {
    std::vector<std::string> out;
    for (const CitationEdge& e : edges_of(proposal_id)) {
        if (is_mi(e)) out.push_back(e.paper_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Mag::cited_papers(const std::string& proposal_id) const {
    std::vector<std::string> out;
    for (const CitationEdge& e : edges_of(proposal_id)) out.push_back(e.paper_id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Mag::proposal_ids(Split split) const {
    std::vector<std::string> out;
    for (const auto& [id, rec] : proposals_) {
        if (rec.split == split) out.push_back(id);
    }
    return out;
}

std::size_t Mag::edge_count() const {
    std::size_t n = 0;
    for (const auto& [id, es] : edges_) n += es.size();
    return n;
}

IngestResult ingest(std::istream& proposals, std::istream& papers, std::istream& citations) {
    IngestResult result;
    Mag& mag = result.mag;

    for_each_jsonl(
        proposals,
        [&](std::size_t line, const json& obj) {
            try {
                ProposalRecord rec;
                rec.id = require_string(obj, "id", "proposal");
                if (rec.id.empty()) throw std::runtime_error("empty proposal id");
                rec.problem = require_string(obj, "problem", "proposal");
                rec.motivation = require_string(obj, "motivation", "proposal");
                if (trim(rec.problem).empty() || trim(rec.motivation).empty()) {
                    throw std::runtime_error("empty problem or motivation");
                }
                rec.split = split_from_string(require_string(obj, "split", "proposal"));
                if (obj.contains("date") && obj["date"].is_string()) rec.date = obj["date"].get<std::string>();
                if (mag.proposals_.count(rec.id)) {
                    throw ValidationError("duplicate proposal id at line " + std::to_string(line) + ": " + rec.id);
                }
                mag.proposals_.emplace(rec.id, std::move(rec));
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                result.rejects.push_back({"proposals", line, e.what()});
            }
        },
        [&](std::size_t line, const std::string& msg) { result.rejects.push_back({"proposals", line, msg}); });

    for_each_jsonl(
        papers,
        [&](std::size_t line, const json& obj) {
            try {
                PaperRecord rec;
                rec.id = require_string(obj, "id", "paper");
                if (rec.id.empty()) throw std::runtime_error("empty paper id");
                rec.title = require_string(obj, "title", "paper");
                rec.abstract_text = require_string(obj, "abstract", "paper");
                if (trim(rec.abstract_text).empty()) throw std::runtime_error("empty abstract");
                if (obj.contains("year") && obj["year"].is_number_integer()) rec.year = obj["year"].get<int>();
                if (obj.contains("full_text") && obj["full_text"].is_string()) {
                    rec.full_text = obj["full_text"].get<std::string>();
                }
                if (obj.contains("source") && obj["source"].is_string()) {
                    const std::string src = obj["source"].get<std::string>();
                    if (src == "weak") rec.source = PaperSource::weak;
                    else if (src == "gold") rec.source = PaperSource::gold;
                    else throw std::runtime_error("unknown source: " + src);
                }
                if (mag.papers_.count(rec.id)) {
                    throw ValidationError("duplicate paper id at line " + std::to_string(line) + ": " + rec.id);
                }
                mag.papers_.emplace(rec.id, std::move(rec));
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                result.rejects.push_back({"papers", line, e.what()});
            }
        },
        [&](std::size_t line, const std::string& msg) { result.rejects.push_back({"papers", line, msg}); });

    for_each_jsonl(
        citations,
        [&](std::size_t line, const json& obj) {
            try {
                CitationEdge edge;
                edge.proposal_id = require_string(obj, "proposal_id", "citation");
                edge.paper_id = require_string(obj, "paper_id", "citation");
                if (!mag.has_proposal(edge.proposal_id)) {
                    throw std::runtime_error("dangling proposal_id: " + edge.proposal_id);
                }
                if (!mag.has_paper(edge.paper_id)) {
                    throw std::runtime_error("dangling paper_id: " + edge.paper_id);
                }
                if (!obj.contains("contexts") || !obj["contexts"].is_array() || obj["contexts"].empty()) {
                    throw std::runtime_error("contexts missing or empty");
                }
                for (const json& c : obj["contexts"]) {
                    CitationContext ctx;
                    ctx.text = require_string(c, "text", "context");
                    ctx.intent = intent_from_string(require_string(c, "intent", "context"));
                    edge.contexts.push_back(std::move(ctx));
                }
                const ProposalRecord& prop = mag.proposal(edge.proposal_id);
                const PaperRecord& pap = mag.paper(edge.paper_id);
                if (pap.source == PaperSource::weak && prop.split != Split::train) {
                    throw std::runtime_error("weak-source paper cited by non-train proposal");
                }
                auto& edges = mag.edges_[edge.proposal_id];
                auto existing = std::find_if(edges.begin(), edges.end(), [&](const CitationEdge& e) {
                    return e.paper_id == edge.paper_id;
                });
                if (existing != edges.end()) {
                    // Contexts for an already-seen (proposal, paper) pair merge
                    // onto the one edge.
                    existing->contexts.insert(existing->contexts.end(), edge.contexts.begin(),
                                              edge.contexts.end());
                } else {
                    mag.reverse_[edge.paper_id].push_back(edge.proposal_id);
                    edges.push_back(std::move(edge));
                }
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                result.rejects.push_back({"citations", line, e.what()});
            }
        },
        [&](std::size_t line, const std::string& msg) { result.rejects.push_back({"citations", line, msg}); });

    // Keep adjacency lists in a canonical order independent of input order.
    for (auto& [pid, edges] : mag.edges_) {
        std::sort(edges.begin(), edges.end(),
                  [](const CitationEdge& a, const CitationEdge& b) { return a.paper_id < b.paper_id; });
    }
    for (auto& [lid, props] : mag.reverse_) std::sort(props.begin(), props.end());
    return result;
}

IngestResult ingest_files(const std::string& proposals_path, const std::string& papers_path,
                          const std::string& citations_path) {
    std::ifstream p(proposals_path), a(papers_path), c(citations_path);
    if (!p) throw std::runtime_error("cannot open " + proposals_path);
    if (!a) throw std::runtime_error("cannot open " + papers_path);
    if (!c) throw std::runtime_error("cannot open " + citations_path);
    return ingest(p, a, c);
}

std::vector<std::string> corpus(const Mag& mag, CorpusSetting setting) {
    std::set<std::string> ids;
    for (const auto& [pid, rec] : mag.proposals()) {
        const bool take = rec.split == Split::test ||
                          (setting == CorpusSetting::extended && rec.split == Split::train);
        if (!take) continue;
        for (const CitationEdge& e : mag.edges_of(pid)) ids.insert(e.paper_id);
    }
    if (ids.empty()) throw std::runtime_error("empty corpus for setting " + to_string(setting));
    return {ids.begin(), ids.end()};
}

std::vector<std::string> train_corpus(const Mag& mag) {
    std::set<std::string> ids;
    for (const auto& [pid, rec] : mag.proposals()) {
        if (rec.split != Split::train) continue;
        for (const CitationEdge& e : mag.edges_of(pid)) ids.insert(e.paper_id);
    }
    return {ids.begin(), ids.end()};
}

MagStats stats(const Mag& mag) {
    MagStats s;
    s.per_split[Split::train] = {};
    s.per_split[Split::dev] = {};
    s.per_split[Split::test] = {};
    std::map<Split, std::set<std::string>> mi_papers, non_mi_papers, all_papers;
    std::set<std::string> g_mi, g_non, g_all;

    for (const auto& [pid, rec] : mag.proposals()) {
        SplitStats& ss = s.per_split[rec.split];
        ++ss.proposals;
        ++s.total.proposals;
        for (const CitationEdge& e : mag.edges_of(pid)) {
            bool any_mi = false, any_non = false;
            for (const CitationContext& c : e.contexts) {
                if (is_mi_intent(c.intent)) {
                    ++ss.mi_citations;
                    ++s.total.mi_citations;
                    any_mi = true;
                } else {
                    ++ss.non_mi_citations;
                    ++s.total.non_mi_citations;
                    any_non = true;
                }
                ++ss.total_citations;
                ++s.total.total_citations;
            }
            if (any_mi) mi_papers[rec.split].insert(e.paper_id), g_mi.insert(e.paper_id);
            if (any_non) non_mi_papers[rec.split].insert(e.paper_id), g_non.insert(e.paper_id);
            all_papers[rec.split].insert(e.paper_id);
            g_all.insert(e.paper_id);
        }
    }
    for (auto& [split, ss] : s.per_split) {
        ss.mi_cited_papers = mi_papers[split].size();
        ss.non_mi_cited_papers = non_mi_papers[split].size();
        ss.total_cited_papers = all_papers[split].size();
    }
    s.total.mi_cited_papers = g_mi.size();
    s.total.non_mi_cited_papers = g_non.size();
    s.total.total_cited_papers = g_all.size();
    return s;
}

namespace {
json split_stats_to_json(const SplitStats& ss) {
    return json{{"proposals", ss.proposals},
                {"mi_citations", ss.mi_citations},
                {"non_mi_citations", ss.non_mi_citations},
                {"total_citations", ss.total_citations},
                {"mi_cited_papers", ss.mi_cited_papers},
                {"non_mi_cited_papers", ss.non_mi_cited_papers},
                {"total_cited_papers", ss.total_cited_papers}};
}
}  // namespace

json stats_to_json(const MagStats& s) {
    json out;
    for (const auto& [split, ss] : s.per_split) out[to_string(split)] = split_stats_to_json(ss);
    out["total"] = split_stats_to_json(s.total);
    return out;
}

std::string stats_to_tsv(const MagStats& s) {
    std::ostringstream out;
    out << "split\tproposals\tmi_citations\tnon_mi_citations\ttotal_citations"
           "\tmi_cited_papers\tnon_mi_cited_papers\ttotal_cited_papers\n";
    auto row = [&](const std::string& name, const SplitStats& ss) {
        out << name << '\t' << ss.proposals << '\t' << ss.mi_citations << '\t' << ss.non_mi_citations << '\t'
            << ss.total_citations << '\t' << ss.mi_cited_papers << '\t' << ss.non_mi_cited_papers << '\t'
            << ss.total_cited_papers << '\n';
    };
    for (const auto& [split, ss] : s.per_split) row(to_string(split), ss);
    row("total", s.total);
    return out.str();
}

}  // namespace mir
