#include "mir/triplet.hpp"

#include <algorithm>
#include <sstream>

namespace mir {

namespace {

// Context-ref components are joined with '#'; literal '%' and '#' inside
// ids are percent-escaped so the composite stays parseable.
std::string escape_component(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '%') out += "%25";
        else if (c == '#') out += "%23";
        else out.push_back(c);
    }
    return out;
}

std::string unescape_component(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            if (s.compare(i, 3, "%25") == 0) { out.push_back('%'); i += 2; continue; }
            if (s.compare(i, 3, "%23") == 0) { out.push_back('#'); i += 2; continue; }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::vector<std::size_t> mi_context_indices(const CitationEdge& edge) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edge.contexts.size(); ++i) {
        if (is_mi_intent(edge.contexts[i].intent)) out.push_back(i);
    }
    return out;
}

}  // namespace

std::string to_string(TextRole r) {
    switch (r) {
        case TextRole::proposal: return "proposal";
        case TextRole::paper: return "paper";
        case TextRole::context: return "context";
    }
    return "?";
}

TextRole text_role_from_string(const std::string& s) {
    if (s == "proposal") return TextRole::proposal;
    if (s == "paper") return TextRole::paper;
    if (s == "context") return TextRole::context;
    throw std::runtime_error("unknown text role: " + s);
}

TextRef proposal_ref(const std::string& proposal_id) { return {TextRole::proposal, proposal_id}; }
TextRef paper_ref(const std::string& paper_id) { return {TextRole::paper, paper_id}; }

TextRef context_ref(const std::string& proposal_id, const std::string& paper_id, std::size_t index) {
    return {TextRole::context,
            escape_component(proposal_id) + "#" + escape_component(paper_id) + "#" + std::to_string(index)};
}

ContextKey parse_context_ref(const TextRef& ref) {
    if (ref.role != TextRole::context) throw std::runtime_error("not a context ref: " + ref.id);
    const std::size_t a = ref.id.find('#');
    const std::size_t b = ref.id.rfind('#');
    if (a == std::string::npos || b == a) throw std::runtime_error("malformed context ref: " + ref.id);
    ContextKey key;
    key.proposal_id = unescape_component(ref.id.substr(0, a));
    key.paper_id = unescape_component(ref.id.substr(a + 1, b - a - 1));
    key.index = static_cast<std::size_t>(std::stoull(ref.id.substr(b + 1)));
    return key;
}

std::string resolve_text(const Mag& mag, const TextRef& ref) {
    switch (ref.role) {
        case TextRole::proposal: {
            const ProposalRecord& p = mag.proposal(ref.id);
            return p.problem + "\n" + p.motivation;
        }
        case TextRole::paper: {
            const PaperRecord& l = mag.paper(ref.id);
            return l.title + "\n" + l.abstract_text;
        }
        case TextRole::context: {
            const ContextKey key = parse_context_ref(ref);
            const CitationEdge& e = mag.edge(key.proposal_id, key.paper_id);
            if (key.index >= e.contexts.size()) throw std::out_of_range("context index out of range: " + ref.id);
            return e.contexts[key.index].text;
        }
    }
    throw std::logic_error("unreachable");
}

std::string to_string(TripletKind k) {
    switch (k) {
        case TripletKind::t1: return "T1";
        case TripletKind::t2: return "T2";
        case TripletKind::t3: return "T3";
    }
    return "?";
}

std::string to_string(NegativeClass c) { return c == NegativeClass::hard ? "hard" : "soft"; }

TripletKind triplet_kind_from_string(const std::string& s) {
    if (s == "T1") return TripletKind::t1;
    if (s == "T2") return TripletKind::t2;
    if (s == "T3") return TripletKind::t3;
    throw std::runtime_error("unknown triplet kind: " + s);
}

NegativeClass negative_class_from_string(const std::string& s) {
    if (s == "hard") return NegativeClass::hard;
    if (s == "soft") return NegativeClass::soft;
    throw std::runtime_error("unknown negative class: " + s);
}

std::optional<PositiveSelection> select_positive(Rng& rng, const Mag& mag,
                                                 const std::string& proposal_id) {
    const std::vector<std::string> positives = mag.mi_papers(proposal_id);
    if (positives.empty()) return std::nullopt;
    const std::string& paper = positives[uniform_index(rng, positives.size())];
    const std::vector<std::size_t> contexts = mi_context_indices(mag.edge(proposal_id, paper));
    PositiveSelection sel;
    sel.paper_id = paper;
    sel.context_index = contexts[uniform_index(rng, contexts.size())];
    return sel;
}

NegativeClass draw_negative_class(Rng& rng, double alpha) {
    const double r = uniform_unit(rng);
    return r <= alpha ? NegativeClass::hard : NegativeClass::soft;
}

std::optional<std::string> t1_negative(Rng& rng, NegativeClass cls, const std::string& proposal_id,
                                       const Mag& mag, const std::vector<std::string>& corpus_ids,
                                       const DomainVectorStore* vectors) {
    const std::vector<std::string> cited = mag.cited_papers(proposal_id);
    const std::set<std::string> exclusion(cited.begin(), cited.end());
    if (cls == NegativeClass::hard) {
        if (!vectors) throw std::runtime_error("hard T1 negatives need domain vectors");
        return hardest_negative(proposal_id, exclusion, corpus_ids, *vectors);
    }
    std::vector<std::string> pool;
    for (const std::string& id : corpus_ids) {
        if (!exclusion.count(id)) pool.push_back(id);
    }
    if (pool.empty()) return std::nullopt;
    return pool[uniform_index(rng, pool.size())];
}

std::optional<std::string> t2_negative(Rng& rng, NegativeClass& cls, const std::string& proposal_id,
                                       const Mag& mag) {
    std::vector<std::string> train_ids = mag.proposal_ids(Split::train);
    train_ids.erase(std::remove(train_ids.begin(), train_ids.end(), proposal_id), train_ids.end());
    if (train_ids.empty()) return std::nullopt;

    if (cls == NegativeClass::hard) {
        std::set<std::string> sharing;
        for (const CitationEdge& e : mag.edges_of(proposal_id)) {
            for (const std::string& other : mag.citing_proposals(e.paper_id)) {
                if (other != proposal_id && mag.proposal(other).split == Split::train) sharing.insert(other);
            }
        }
        if (!sharing.empty()) {
            std::vector<std::string> pool(sharing.begin(), sharing.end());
            return pool[uniform_index(rng, pool.size())];
        }
        cls = NegativeClass::soft;
    }
    return train_ids[uniform_index(rng, train_ids.size())];
}

std::optional<std::string> t3_negative(Rng& rng, NegativeClass& cls, const std::string& proposal_id,
                                       const Mag& mag, const std::vector<std::string>& corpus_ids) {
    if (cls == NegativeClass::hard) {
        std::vector<std::string> pool;
        for (const CitationEdge& e : mag.edges_of(proposal_id)) {
            if (!is_mi(e)) pool.push_back(e.paper_id);
        }
        std::sort(pool.begin(), pool.end());
        if (!pool.empty()) return pool[uniform_index(rng, pool.size())];
        cls = NegativeClass::soft;
    }
    const std::vector<std::string> cited = mag.cited_papers(proposal_id);
    const std::set<std::string> exclusion(cited.begin(), cited.end());
    std::vector<std::string> pool;
    for (const std::string& id : corpus_ids) {
        if (!exclusion.count(id)) pool.push_back(id);
    }
    if (pool.empty()) return std::nullopt;
    return pool[uniform_index(rng, pool.size())];
}

SynthResult synthesize_epoch(const Mag& mag, const std::vector<std::string>& corpus_ids,
                             const DomainVectorStore* vectors, const SynthConfig& config, int epoch) {
    if (config.alpha < 0.0 || config.alpha > 1.0) throw std::invalid_argument("alpha must be in [0, 1]");
    SynthResult result;
    for (const std::string& pid : mag.proposal_ids(Split::train)) {
        Rng rng(substream_seed(config.seed, "synth#" + pid, static_cast<std::uint64_t>(epoch)));

        const auto positive = select_positive(rng, mag, pid);
        if (!positive) {
            result.skips.push_back({pid, epoch, "no MI citation"});
            continue;
        }
        const TextRef anchor_ctx = context_ref(pid, positive->paper_id, positive->context_index);

        NegativeClass c1 = draw_negative_class(rng, config.alpha);
        NegativeClass c2 = c1, c3 = c1;
        if (config.negative_draw == NegativeDrawMode::per_triplet) {
            c2 = draw_negative_class(rng, config.alpha);
            c3 = draw_negative_class(rng, config.alpha);
        }

        const auto n1 = t1_negative(rng, c1, pid, mag, corpus_ids, vectors);
        if (!n1) {
            result.skips.push_back({pid, epoch, "T1 pool empty (corpus covered by citations)"});
            continue;
        }
        const auto n2 = t2_negative(rng, c2, pid, mag);
        if (!n2) {
            result.skips.push_back({pid, epoch, "T2 pool empty (single train proposal)"});
            continue;
        }
        const auto n3 = t3_negative(rng, c3, pid, mag, corpus_ids);
        if (!n3) {
            result.skips.push_back({pid, epoch, "T3 pools empty"});
            continue;
        }

        TripletGroup group;
        group.sample_id = pid;
        group.epoch = epoch;
        group.t1 = {proposal_ref(pid), paper_ref(positive->paper_id), paper_ref(*n1),
                    TripletKind::t1, c1, pid, epoch};
        group.t2 = {anchor_ctx, proposal_ref(pid), proposal_ref(*n2), TripletKind::t2, c2, pid, epoch};
        group.t3 = {anchor_ctx, paper_ref(positive->paper_id), paper_ref(*n3), TripletKind::t3, c3,
                    pid, epoch};
        result.groups.push_back(std::move(group));
    }
    return result;
}

SynthResult synthesize(const Mag& mag, const std::vector<std::string>& corpus_ids,
                       const DomainVectorStore* vectors, const SynthConfig& config) {
    SynthResult all;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SynthResult r = synthesize_epoch(mag, corpus_ids, vectors, config, epoch);
        std::move(r.groups.begin(), r.groups.end(), std::back_inserter(all.groups));
        std::move(r.skips.begin(), r.skips.end(), std::back_inserter(all.skips));
    }
    return all;
}

namespace {
json ref_to_json(const TextRef& r) { return json{{"role", to_string(r.role)}, {"id", r.id}}; }
TextRef ref_from_json(const json& obj) {
    return {text_role_from_string(obj.at("role").get<std::string>()), obj.at("id").get<std::string>()};
}
}  // namespace

json triplet_to_json(const Triplet& t) {
    return json{{"sample_id", t.sample_id},
                {"epoch", t.epoch},
                {"kind", to_string(t.kind)},
                {"negative_class", to_string(t.negative_class)},
                {"anchor", ref_to_json(t.anchor)},
                {"positive", ref_to_json(t.positive)},
                {"negative", ref_to_json(t.negative)}};
}

Triplet triplet_from_json(const json& obj) {
    Triplet t;
    t.sample_id = obj.at("sample_id").get<std::string>();
    t.epoch = obj.at("epoch").get<int>();
    t.kind = triplet_kind_from_string(obj.at("kind").get<std::string>());
    t.negative_class = negative_class_from_string(obj.at("negative_class").get<std::string>());
    t.anchor = ref_from_json(obj.at("anchor"));
    t.positive = ref_from_json(obj.at("positive"));
    t.negative = ref_from_json(obj.at("negative"));
    return t;
}

std::string groups_to_jsonl(const std::vector<TripletGroup>& groups) {
    std::ostringstream out;
    for (const TripletGroup& g : groups) {
        out << triplet_to_json(g.t1).dump() << '\n'
            << triplet_to_json(g.t2).dump() << '\n'
            << triplet_to_json(g.t3).dump() << '\n';
    }
    return out.str();
}

std::string skips_to_jsonl(const std::vector<SkipRecord>& skips) {
    std::ostringstream out;
    for (const SkipRecord& s : skips) {
        out << json{{"proposal_id", s.proposal_id}, {"epoch", s.epoch}, {"reason", s.reason}}.dump() << '\n';
    }
    return out.str();
}

std::vector<TripletGroup> groups_from_jsonl(std::istream& in) {
    std::vector<TripletGroup> groups;
    std::map<std::pair<std::string, int>, std::size_t> index;
    std::map<std::pair<std::string, int>, unsigned> seen_kinds;
    for_each_jsonl(
        in,
        [&](std::size_t line, const json& obj) {
            Triplet t;
            try {
                t = triplet_from_json(obj);
            } catch (const std::exception& e) {
                throw ValidationError("triplets line " + std::to_string(line) + ": " + e.what());
            }
            const auto key = std::make_pair(t.sample_id, t.epoch);
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, groups.size()).first;
                groups.push_back(TripletGroup{t.sample_id, t.epoch, {}, {}, {}});
            }
            TripletGroup& g = groups[it->second];
            const unsigned bit = 1u << static_cast<unsigned>(t.kind);
            if (seen_kinds[key] & bit) {
                throw ValidationError("duplicate " + to_string(t.kind) + " for sample " + t.sample_id +
                                      " epoch " + std::to_string(t.epoch));
            }
            seen_kinds[key] |= bit;
            if (t.kind == TripletKind::t1) g.t1 = std::move(t);
            else if (t.kind == TripletKind::t2) g.t2 = std::move(t);
            else g.t3 = std::move(t);
        },
        [&](std::size_t line, const std::string& msg) {
            throw ValidationError("triplets line " + std::to_string(line) + ": " + msg);
        });
    for (const auto& [key, idx] : index) {
        if (seen_kinds[key] != 0b111u) {
            throw ValidationError("sample " + key.first + " epoch " + std::to_string(key.second) +
                                  " is missing a triplet kind");
        }
    }
    return groups;
}

}  // namespace mir
