#include "mir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mir {

std::vector<double> EmbeddingStore::row_vector(std::size_t i) const {
    const float* r = row(i);
    return std::vector<double>(r, r + dim);
}

void EmbeddingStore::append(const std::string& id, const std::vector<double>& v) {
    if (dim == 0) dim = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim) {
        throw std::invalid_argument("store row dimension mismatch for " + id);
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite embedding for " + id);
        data.push_back(static_cast<float>(x));
    }
    ids.push_back(id);
}

std::string save_store(const EmbeddingStore& store) {
    std::string out;
    out += "MIRE";
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(store.dim));
    put_u64(out, static_cast<std::uint64_t>(store.ids.size()));
    for (std::size_t i = 0; i < store.ids.size(); ++i) {
        const std::string& id = store.ids[i];
        if (id.size() > 0xffff) throw std::runtime_error("id too long for store: " + id);
        put_u16(out, static_cast<std::uint16_t>(id.size()));
        out += id;
        for (int j = 0; j < store.dim; ++j) put_f32(out, store.row(i)[j]);
    }
    return out;
}

EmbeddingStore load_store(const std::string& bytes) {
    ByteReader r(bytes);
    if (r.bytes(4) != "MIRE") throw std::runtime_error("not an embedding store (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported store version " + std::to_string(version));
    EmbeddingStore store;
    store.dim = static_cast<int>(r.u32());
    const std::uint64_t count = r.u64();
    std::set<std::string> seen;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.u16();
        std::string id = r.bytes(len);
        if (!seen.insert(id).second) throw std::runtime_error("duplicate id in store: " + id);
        store.ids.push_back(std::move(id));
        for (int j = 0; j < store.dim; ++j) store.data.push_back(r.f32());
    }
    if (!r.done()) throw std::runtime_error("trailing bytes in embedding store");
    return store;
}

EmbeddingStore embed_corpus(const TextEmbedder& encoder, const Mag& mag,
                            const std::vector<std::string>& paper_ids,
                            std::vector<EmbedWarning>* warnings) {
    EmbeddingStore store;
    store.dim = encoder.dim();
    for (const std::string& id : paper_ids) {
        const PaperRecord& paper = mag.paper(id);
        if (trim(paper.abstract_text).empty()) {
            if (warnings) warnings->push_back({id, "missing abstract; excluded from store"});
            continue;
        }
        store.append(id, encoder.embed(paper.title + "\n" + paper.abstract_text));
    }
    return store;
}

EmbeddingStore embed_proposals(const TextEmbedder& encoder, const Mag& mag,
                               const std::vector<std::string>& proposal_ids) {
    EmbeddingStore store;
    store.dim = encoder.dim();
    for (const std::string& id : proposal_ids) {
        const ProposalRecord& p = mag.proposal(id);
        store.append(id, encoder.embed(p.problem + "\n" + p.motivation));
    }
    return store;
}

Ranking rank_by_vector(const std::string& proposal_id, const std::vector<double>& query,
                       const EmbeddingStore& store) {
    if (store.ids.empty()) throw std::runtime_error("cannot rank against an empty store");
    if (static_cast<int>(query.size()) != store.dim) {
        throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                    " does not match store dimension " + std::to_string(store.dim));
    }
    Ranking ranking;
    ranking.proposal_id = proposal_id;
    ranking.items.reserve(store.ids.size());
    for (std::size_t i = 0; i < store.ids.size(); ++i) {
        const float* row = store.row(i);
        double sq = 0.0;
        for (int j = 0; j < store.dim; ++j) {
            const double d = query[static_cast<std::size_t>(j)] - static_cast<double>(row[j]);
            sq += d * d;
        }
        ranking.items.push_back({store.ids[i], std::sqrt(sq)});
    }
    std::sort(ranking.items.begin(), ranking.items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.paper_id < b.paper_id;
    });
    return ranking;
}

Ranking rank(const TextEmbedder& encoder, const ProposalRecord& proposal, const EmbeddingStore& store) {
    return rank_by_vector(proposal.id, encoder.embed(proposal.problem + "\n" + proposal.motivation), store);
}

namespace {
std::set<std::string> in_corpus_relevant(const Ranking& ranking, const std::set<std::string>& relevant) {
    std::set<std::string> out;
    for (const RankedItem& item : ranking.items) {
        if (relevant.count(item.paper_id)) out.insert(item.paper_id);
    }
    return out;
}
}  // namespace

double recall_at_k(const Ranking& ranking, const std::set<std::string>& relevant, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const std::set<std::string> in_corpus = in_corpus_relevant(ranking, relevant);
    if (in_corpus.empty()) throw std::runtime_error("no relevant papers in corpus for " + ranking.proposal_id);
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.items.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < top; ++i) {
        if (in_corpus.count(ranking.items[i].paper_id)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(in_corpus.size());
}

double average_precision(const Ranking& ranking, const std::set<std::string>& relevant) {
    const std::set<std::string> in_corpus = in_corpus_relevant(ranking, relevant);
    if (in_corpus.empty()) throw std::runtime_error("no relevant papers in corpus for " + ranking.proposal_id);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.items.size(); ++i) {
        if (in_corpus.count(ranking.items[i].paper_id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(in_corpus.size());
}

EvalReport evaluate_rankings(const std::vector<Ranking>& rankings,
                             const std::map<std::string, std::set<std::string>>& relevant,
                             const std::vector<int>& k_list, const std::string& setting) {
    EvalReport report;
    report.setting = setting;
    report.k_list = k_list;
    for (const Ranking& ranking : rankings) {
        auto it = relevant.find(ranking.proposal_id);
        if (it == relevant.end()) throw std::runtime_error("no relevant set for " + ranking.proposal_id);
        const std::set<std::string> in_corpus = in_corpus_relevant(ranking, it->second);
        ProposalEval row;
        row.proposal_id = ranking.proposal_id;
        row.relevant_in_corpus = in_corpus.size();
        row.relevant_missing = it->second.size() - in_corpus.size();
        report.missing_relevant_total += row.relevant_missing;
        if (in_corpus.empty()) {
            ++report.excluded_proposals;
            continue;
        }
        for (int k : k_list) row.recall[k] = recall_at_k(ranking, it->second, k);
        row.ap = average_precision(ranking, it->second);
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw std::runtime_error("no includable proposals to evaluate");
    for (int k : k_list) {
        double sum = 0.0;
        for (const ProposalEval& row : report.rows) sum += row.recall.at(k);
        report.mean_recall[k] = sum / static_cast<double>(report.rows.size());
    }
    double ap_sum = 0.0;
    for (const ProposalEval& row : report.rows) ap_sum += row.ap;
    report.map_score = ap_sum / static_cast<double>(report.rows.size());
    return report;
}

EvalReport evaluate(const TextEmbedder& encoder, const Mag& mag, CorpusSetting setting,
                    const std::vector<int>& k_list, std::vector<Ranking>* rankings_out) {
    const std::vector<std::string> corpus_ids = corpus(mag, setting);
    const EmbeddingStore store = embed_corpus(encoder, mag, corpus_ids);
    std::vector<Ranking> rankings;
    std::map<std::string, std::set<std::string>> relevant;
    for (const std::string& pid : mag.proposal_ids(Split::test)) {
        rankings.push_back(rank(encoder, mag.proposal(pid), store));
        const std::vector<std::string> mi = mag.mi_papers(pid);
        relevant[pid] = std::set<std::string>(mi.begin(), mi.end());
    }
    if (rankings.empty()) throw std::runtime_error("no test proposals to evaluate");
    EvalReport report = evaluate_rankings(rankings, relevant, k_list, to_string(setting));
    if (rankings_out) *rankings_out = std::move(rankings);
    return report;
}

std::string eval_to_tsv(const EvalReport& report) {
    std::ostringstream out;
    out << "setting";
    for (int k : report.k_list) out << "\tR@" << k;
    out << "\tmAP\n" << report.setting;
    out.setf(std::ios::fixed);
    out.precision(6);
    for (int k : report.k_list) out << '\t' << report.mean_recall.at(k);
    out << '\t' << report.map_score << '\n';
    return out.str();
}

json eval_to_json(const EvalReport& report) {
    json rows = json::array();
    for (const ProposalEval& row : report.rows) {
        json recalls;
        for (const auto& [k, v] : row.recall) recalls["R@" + std::to_string(k)] = v;
        rows.push_back(json{{"proposal_id", row.proposal_id},
                            {"relevant_in_corpus", row.relevant_in_corpus},
                            {"relevant_missing", row.relevant_missing},
                            {"recall", recalls},
                            {"ap", row.ap}});
    }
    json means;
    for (const auto& [k, v] : report.mean_recall) means["R@" + std::to_string(k)] = v;
    return json{{"setting", report.setting},
                {"mean_recall", means},
                {"map", report.map_score},
                {"excluded_proposals", report.excluded_proposals},
                {"missing_relevant_total", report.missing_relevant_total},
                {"proposals", rows}};
}

json ranking_to_json(const Ranking& r) {
    json items = json::array();
    for (const RankedItem& item : r.items) {
        items.push_back(json{{"paper_id", item.paper_id}, {"distance", item.distance}});
    }
    return json{{"proposal_id", r.proposal_id}, {"ranking", items}};
}

Ranking ranking_from_json(const json& obj) {
    Ranking r;
    r.proposal_id = obj.at("proposal_id").get<std::string>();
    for (const json& item : obj.at("ranking")) {
        r.items.push_back({item.at("paper_id").get<std::string>(), item.at("distance").get<double>()});
    }
    return r;
}

std::string rankings_to_jsonl(const std::vector<Ranking>& rankings) {
    std::ostringstream out;
    for (const Ranking& r : rankings) out << ranking_to_json(r).dump() << '\n';
    return out.str();
}

std::vector<Ranking> rankings_from_jsonl(std::istream& in) {
    std::vector<Ranking> out;
    for_each_jsonl(
        in, [&](std::size_t, const json& obj) { out.push_back(ranking_from_json(obj)); },
        [&](std::size_t line, const std::string& msg) {
            throw ValidationError("rankings line " + std::to_string(line) + ": " + msg);
        });
    return out;
}

int elbow(const std::vector<std::pair<int, double>>& curve) {
    if (curve.size() < 3) throw std::invalid_argument("elbow needs at least 3 points");
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].first <= curve[i - 1].first) throw std::invalid_argument("k must be strictly increasing");
        if (curve[i].second < curve[i - 1].second) throw std::invalid_argument("coverage must be non-decreasing");
    }
    const double x0 = curve.front().first, y0 = curve.front().second;
    const double x1 = curve.back().first, y1 = curve.back().second;
    const double chord = std::hypot(x1 - x0, y1 - y0);

    auto smallest_max_coverage = [&] {
        const double max_cov = curve.back().second;
        for (const auto& [k, cov] : curve) {
            if (cov == max_cov) return k;
        }
        return curve.back().first;
    };
    if (chord == 0.0) return smallest_max_coverage();

    int best_k = curve.front().first;
    double best_dist = -1.0;
    for (const auto& [k, cov] : curve) {
        const double dist = std::abs((x1 - x0) * (y0 - cov) - (x0 - k) * (y1 - y0)) / chord;
        if (dist > best_dist) {
            best_dist = dist;
            best_k = k;
        }
    }
    if (best_dist < 1e-12) return smallest_max_coverage();  // collinear
    return best_k;
}

std::vector<std::pair<int, double>> coverage_curve(const std::vector<Ranking>& rankings,
                                                   const std::map<std::string, std::set<std::string>>& relevant,
                                                   int k_max) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    std::vector<std::pair<int, double>> curve;
    for (int k = 1; k <= k_max; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const Ranking& ranking : rankings) {
            const auto it = relevant.find(ranking.proposal_id);
            if (it == relevant.end()) continue;
            if (in_corpus_relevant(ranking, it->second).empty()) continue;
            sum += recall_at_k(ranking, it->second, k);
            ++count;
        }
        if (count == 0) throw std::runtime_error("coverage_curve: no includable proposals");
        curve.emplace_back(k, sum / static_cast<double>(count));
    }
    return curve;
}

}  // namespace mir
