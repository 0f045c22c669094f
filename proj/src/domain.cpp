#include "mir/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mir {

namespace {

// 120 common English function words skipped by the fallback extractor.
const std::vector<std::string> kStopwords = {
    "a",      "about",  "above",   "after",  "again",   "all",    "also",   "an",
    "and",    "any",    "are",     "as",     "at",      "be",     "because", "been",
    "before", "being",  "below",   "between", "both",   "but",    "by",     "can",
    "could",  "did",    "do",      "does",   "down",    "during", "each",   "few",
    "for",    "from",   "further", "had",    "has",     "have",   "having", "he",
    "her",    "here",   "hers",    "him",    "his",     "how",    "i",      "if",
    "in",     "into",   "is",      "it",     "its",     "itself", "just",   "may",
    "me",     "might",  "more",    "most",   "much",    "must",   "my",     "no",
    "nor",    "not",    "of",      "off",    "on",      "once",   "only",   "or",
    "other",  "our",    "ours",    "out",    "over",    "own",    "same",   "she",
    "should", "so",     "some",    "such",   "than",    "that",   "the",    "their",
    "theirs", "them",   "then",    "there",  "these",   "they",   "this",   "those",
    "through", "to",    "too",     "under",  "until",   "up",     "upon",   "very",
    "was",    "we",     "were",    "what",   "when",    "where",  "which",  "while",
    "who",    "whom",   "why",     "will",   "with",    "would",  "you",    "your",
};

bool ci_less(const std::string& a, const std::string& b) {
    const std::string la = to_lower(a), lb = to_lower(b);
    if (la != lb) return la < lb;
    return a < b;
}

std::vector<std::string> read_category(const json& obj, const char* key) {
    std::vector<std::string> out;
    if (!obj.contains(key) || !obj[key].is_array()) return out;
    for (const json& v : obj[key]) {
        if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

const std::vector<std::string>& stopwords() { return kStopwords; }

std::string canonical_text(const EntitySet& entities) {
    std::vector<std::string> all;
    for (const auto* cat : {&entities.task, &entities.method, &entities.metric,
                            &entities.material, &entities.generic}) {
        for (const std::string& e : *cat) {
            std::string t = trim(e);
            if (!t.empty()) all.push_back(std::move(t));
        }
    }
    std::sort(all.begin(), all.end(), ci_less);
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::string out;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i) out.push_back(' ');
        out += all[i];
    }
    return out;
}

HashingEmbedder::HashingEmbedder(int dim) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("embedder dimension must be positive");
}

std::vector<double> HashingEmbedder::embed(const std::string& text) const {
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    for (const std::string& tok : tokenize(text)) {
        const std::uint64_t h = fnv1a64(tok);
        const std::size_t bucket = h % static_cast<std::uint64_t>(dim_);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[bucket] += sign;
    }
    return v;
}

DomainVector domain_vector(const std::string& text, const TextEmbedder& embedder,
                           const std::string& owner_id, OwnerRole role) {
    DomainVector dv;
    dv.owner_id = owner_id;
    dv.owner_role = role;
    if (trim(text).empty()) {
        dv.vector.assign(static_cast<std::size_t>(embedder.dim()), 0.0);
        return dv;
    }
    dv.vector = embedder.embed(text);
    if (static_cast<int>(dv.vector.size()) != embedder.dim()) {
        throw std::runtime_error("embedder returned wrong dimension for owner " + owner_id);
    }
    for (double x : dv.vector) {
        if (!std::isfinite(x)) throw std::runtime_error("non-finite embedding for owner " + owner_id);
    }
    return dv;
}

double sim(const DomainVector& a, const DomainVector& b) {
    if (a.vector.size() != b.vector.size()) {
        throw std::invalid_argument("sim: dimension mismatch (" + std::to_string(a.vector.size()) +
                                    " vs " + std::to_string(b.vector.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.vector.size(); ++i) {
        dot += a.vector[i] * b.vector[i];
        na += a.vector[i] * a.vector[i];
        nb += b.vector[i] * b.vector[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void DomainVectorStore::put(DomainVector v) {
    const std::string id = v.owner_id;
    vectors_[id] = std::move(v);
}

const DomainVector& DomainVectorStore::get(const std::string& owner_id) const {
    auto it = vectors_.find(owner_id);
    if (it == vectors_.end()) throw std::out_of_range("no domain vector for " + owner_id);
    return it->second;
}

std::optional<std::string> hardest_negative(const std::string& proposal_id,
                                            const std::set<std::string>& exclusion,
                                            const std::vector<std::string>& corpus_ids,
                                            const DomainVectorStore& vectors) {
    const DomainVector& anchor = vectors.get(proposal_id);
    std::optional<std::string> best;
    double best_sim = 0.0;
    for (const std::string& candidate : corpus_ids) {
        if (exclusion.count(candidate)) continue;
        const double s = sim(anchor, vectors.get(candidate));
        // Candidates arrive in ascending id order, so a strict improvement
        // keeps the lexicographically smallest id among ties.
        if (!best || s > best_sim) {
            best = candidate;
            best_sim = s;
        }
    }
    return best;
}

EntitySet extract_entities_fallback(const std::string& text) {
    static const std::set<std::string> stop(kStopwords.begin(), kStopwords.end());
    EntitySet out;
    std::set<std::string> seen;
    for (const std::string& tok : tokenize(text)) {
        if (stop.count(tok) || seen.count(tok)) continue;
        seen.insert(tok);
        out.generic.push_back(tok);
    }
    return out;
}

std::map<std::string, EntitySet> load_entities_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, EntitySet> out;
    for_each_jsonl(
        in,
        [&](std::size_t line, const json& obj) {
            if (!obj.contains("owner_id") || !obj["owner_id"].is_string()) {
                throw ValidationError("entities line " + std::to_string(line) + ": missing owner_id");
            }
            const std::string owner = obj["owner_id"].get<std::string>();
            if (obj.contains("owner_role") && obj["owner_role"].is_string()) {
                const std::string role = obj["owner_role"].get<std::string>();
                if (role != "proposal" && role != "paper") {
                    throw ValidationError("entities line " + std::to_string(line) + ": bad owner_role " + role);
                }
            }
            EntitySet es;
            es.task = read_category(obj, "task");
            es.method = read_category(obj, "method");
            es.metric = read_category(obj, "metric");
            es.material = read_category(obj, "material");
            es.generic = read_category(obj, "generic");
            out[owner] = std::move(es);
        },
        [&](std::size_t line, const std::string& msg) {
            throw ValidationError("entities line " + std::to_string(line) + ": " + msg);
        });
    return out;
}

DomainVectorStore build_domain_vectors(const Mag& mag, const std::vector<std::string>& paper_pool,
                                       const std::vector<std::string>& proposal_pool,
                                       const TextEmbedder& embedder,
                                       const std::map<std::string, EntitySet>* entities) {
    DomainVectorStore store;
    auto entity_text = [&](const std::string& id, const std::string& raw_text) {
        if (entities) {
            auto it = entities->find(id);
            if (it != entities->end()) return canonical_text(it->second);
        }
        return canonical_text(extract_entities_fallback(raw_text));
    };
    for (const std::string& pid : proposal_pool) {
        const ProposalRecord& rec = mag.proposal(pid);
        store.put(domain_vector(entity_text(pid, rec.problem + "\n" + rec.motivation), embedder, pid,
                                OwnerRole::proposal));
    }
    for (const std::string& lid : paper_pool) {
        const PaperRecord& rec = mag.paper(lid);
        store.put(domain_vector(entity_text(lid, rec.title + "\n" + rec.abstract_text), embedder, lid,
                                OwnerRole::paper));
    }
    return store;
}

}  // namespace mir
