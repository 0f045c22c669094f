#include <doctest.h>

#include <sstream>

#include "mir/corpus.hpp"
#include "test_helpers.hpp"

using namespace mir;
using mir_test::ingest_strings;

TEST_CASE("ingest of empty streams yields an empty graph") {
    const IngestResult r = ingest_strings("", "", "");
    CHECK(r.mag.proposals().empty());
    CHECK(r.mag.papers().empty());
    CHECK(r.mag.edge_count() == 0);
    CHECK(r.rejects.empty());
}

TEST_CASE("ingest builds the expected adjacency on the small fixture") {
    const Mag mag = mir_test::small_mag();
    CHECK(mag.proposals().size() == 2);
    CHECK(mag.papers().size() == 3);
    CHECK(mag.edges_of("P1").size() == 2);
    CHECK(mag.edges_of("P2").size() == 1);
    CHECK(mag.edge("P1", "A").contexts.size() == 2);

    // Reverse adjacency mirrors forward exactly.
    std::size_t mirrored = 0;
    for (const auto& [lid, rec] : mag.papers()) {
        for (const std::string& pid : mag.citing_proposals(lid)) {
            CHECK_NOTHROW(mag.edge(pid, lid));
            ++mirrored;
        }
    }
    CHECK(mirrored == mag.edge_count());
}

TEST_CASE("malformed and dangling records reject at record level") {
    const std::string citations =
        "not json at all\n"
        R"({"proposal_id":"P1","paper_id":"NOPE","contexts":[{"text":"x","intent":"uses"}]})"
        "\n"
        R"({"proposal_id":"P1","paper_id":"A","contexts":[]})"
        "\n";
    const IngestResult r = ingest_strings(mir_test::kProposalsSmall, mir_test::kPapersSmall, citations);
    REQUIRE(r.rejects.size() == 3);
    CHECK(r.rejects[0].line == 1);
    CHECK(r.rejects[1].reason.find("dangling") != std::string::npos);
    CHECK(r.rejects[2].reason.find("contexts") != std::string::npos);
    CHECK(r.mag.edge_count() == 0);
}

TEST_CASE("duplicate ids are fatal") {
    const std::string dup =
        R"({"id":"P1","problem":"x","motivation":"y","split":"train"})" "\n"
        R"({"id":"P1","problem":"x2","motivation":"y2","split":"train"})" "\n";
    CHECK_THROWS_AS(ingest_strings(dup, "", ""), ValidationError);
}

TEST_CASE("contexts for a repeated pair merge onto one edge") {
    const std::string citations =
        R"({"proposal_id":"P1","paper_id":"A","contexts":[{"text":"first","intent":"background"}]})" "\n"
        R"({"proposal_id":"P1","paper_id":"A","contexts":[{"text":"second","intent":"uses"}]})" "\n";
    const IngestResult r = ingest_strings(mir_test::kProposalsSmall, mir_test::kPapersSmall, citations);
    CHECK(r.mag.edges_of("P1").size() == 1);
    CHECK(r.mag.edge("P1", "A").contexts.size() == 2);
    CHECK(is_mi(r.mag.edge("P1", "A")));
}

TEST_CASE("weak-source papers may only be cited from the train split") {
    const std::string papers =
        R"({"id":"A","title":"t","abstract":"a","source":"weak"})" "\n";
    const std::string citations =
        R"({"proposal_id":"P1","paper_id":"A","contexts":[{"text":"x","intent":"uses"}]})" "\n"
        R"({"proposal_id":"P2","paper_id":"A","contexts":[{"text":"x","intent":"uses"}]})" "\n";
    const IngestResult r = ingest_strings(mir_test::kProposalsSmall, papers, citations);
    REQUIRE(r.rejects.size() == 1);  // P1 is test
    CHECK(r.rejects[0].reason.find("weak") != std::string::npos);
    CHECK(r.mag.edges_of("P2").size() == 1);
}

TEST_CASE("ingest is idempotent on identical bytes") {
    const Mag a = mir_test::small_mag();
    const Mag b = mir_test::small_mag();
    CHECK(stats_to_tsv(stats(a)) == stats_to_tsv(stats(b)));
    REQUIRE(a.proposals().size() == b.proposals().size());
    for (const auto& [pid, rec] : a.proposals()) {
        CHECK(b.has_proposal(pid));
        CHECK(a.cited_papers(pid) == b.cited_papers(pid));
    }
}

TEST_CASE("is_mi reflects methodology intents and is monotone under added contexts") {
    CitationEdge edge{"P", "L", {{"ctx", Intent::background}}};
    CHECK_FALSE(is_mi(edge));
    edge.contexts.push_back({"uses it", Intent::uses});
    CHECK(is_mi(edge));
    edge.contexts.push_back({"more", Intent::difference});
    CHECK(is_mi(edge));  // adding contexts never flips true -> false

    CitationEdge ext{"P", "L", {{"builds on", Intent::extension}}};
    CHECK(is_mi(ext));
    CitationEdge unsure{"P", "L", {{"maybe", Intent::unsure}}};
    CHECK_FALSE(is_mi(unsure));
}

TEST_CASE("mi_papers returns exactly the MI-cited papers") {
    const Mag mag = mir_test::small_mag();
    CHECK(mag.mi_papers("P1") == std::vector<std::string>{"A"});
    CHECK(mag.mi_papers("P2") == std::vector<std::string>{"A"});
    CHECK_THROWS_AS(mag.mi_papers("nope"), std::out_of_range);
}

TEST_CASE("corpus settings follow the split unions") {
    // Test proposals cite {A, B}; train proposals cite {B, C}.
    const std::string citations =
        R"({"proposal_id":"P1","paper_id":"A","contexts":[{"text":"x","intent":"uses"}]})" "\n"
        R"({"proposal_id":"P1","paper_id":"B","contexts":[{"text":"x","intent":"background"}]})" "\n"
        R"({"proposal_id":"P2","paper_id":"B","contexts":[{"text":"x","intent":"uses"}]})" "\n"
        R"({"proposal_id":"P2","paper_id":"C","contexts":[{"text":"x","intent":"background"}]})" "\n";
    const Mag mag = ingest_strings(mir_test::kProposalsSmall, mir_test::kPapersSmall, citations).mag;
    CHECK(corpus(mag, CorpusSetting::restricted) == std::vector<std::string>{"A", "B"});
    CHECK(corpus(mag, CorpusSetting::extended) == std::vector<std::string>{"A", "B", "C"});

    // Restricted is always contained in extended.
    for (const std::string& id : corpus(mag, CorpusSetting::restricted)) {
        const auto ext = corpus(mag, CorpusSetting::extended);
        CHECK(std::find(ext.begin(), ext.end(), id) != ext.end());
    }
}

TEST_CASE("extended equals restricted without a train split") {
    const std::string proposals =
        R"({"id":"P1","problem":"x","motivation":"y","split":"test"})" "\n";
    const std::string citations =
        R"({"proposal_id":"P1","paper_id":"A","contexts":[{"text":"x","intent":"uses"}]})" "\n";
    const Mag mag = ingest_strings(proposals, mir_test::kPapersSmall, citations).mag;
    CHECK(corpus(mag, CorpusSetting::restricted) == corpus(mag, CorpusSetting::extended));
}

TEST_CASE("corpus of an empty graph is an error") {
    const IngestResult r = ingest_strings("", "", "");
    CHECK_THROWS(corpus(r.mag, CorpusSetting::restricted));
}

TEST_CASE("stats match a hand tally of the small fixture") {
    const MagStats s = stats(mir_test::small_mag());
    const SplitStats& test = s.per_split.at(Split::test);
    CHECK(test.proposals == 1);
    CHECK(test.mi_citations == 1);      // P1->A uses
    CHECK(test.non_mi_citations == 2);  // P1->A background, P1->B background
    CHECK(test.total_citations == 3);
    CHECK(test.mi_cited_papers == 1);      // A
    CHECK(test.non_mi_cited_papers == 2);  // A and B both have non-MI contexts
    CHECK(test.total_cited_papers == 2);

    const SplitStats& train = s.per_split.at(Split::train);
    CHECK(train.proposals == 1);
    CHECK(train.mi_citations == 1);
    CHECK(train.non_mi_citations == 0);
    CHECK(train.mi_cited_papers == 1);
    CHECK(train.total_cited_papers == 1);

    CHECK(s.total.proposals == 2);
    CHECK(s.total.total_citations == 4);

    const MagStats empty = stats(ingest_strings("", "", "").mag);
    CHECK(empty.total.proposals == 0);
    CHECK(empty.total.total_citations == 0);
}

TEST_CASE("papers without an abstract reject at ingest") {
    const std::string papers = R"({"id":"A","title":"t","abstract":"  "})" "\n";
    const IngestResult r = ingest_strings("", papers, "");
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].reason.find("abstract") != std::string::npos);
}

TEST_CASE("unknown fields are ignored") {
    const std::string proposals =
        R"({"id":"P1","problem":"x","motivation":"y","split":"train","extra":42})" "\n";
    const IngestResult r = ingest_strings(proposals, "", "");
    CHECK(r.rejects.empty());
    CHECK(r.mag.has_proposal("P1"));
}
