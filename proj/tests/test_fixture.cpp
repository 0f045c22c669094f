#include <doctest.h>

#include "mir/fixture.hpp"

using namespace mir;

TEST_CASE("generated fixtures ingest cleanly and pass their self-check") {
    const FixtureConfig config;
    const Mag mag = fixture_mag(config);
    CHECK(mag.proposals().size() == 50);
    CHECK(mag.papers().size() == 150);
    CHECK_FALSE(mag.proposal_ids(Split::train).empty());
    CHECK_FALSE(mag.proposal_ids(Split::dev).empty());
    CHECK_FALSE(mag.proposal_ids(Split::test).empty());

    const FixtureCheck check = check_fixture(mag, config);
    for (const std::string& p : check.problems) MESSAGE(p);
    CHECK(check.ok);
    CHECK(check.mi_edges > 0);
    CHECK(check.non_mi_edges > 0);
    CHECK(check.fooler_papers > 0);
}

TEST_CASE("fixture generation is deterministic in its seed") {
    FixtureConfig config;
    config.seed = 11;
    const FixtureData a = generate_fixture(config);
    const FixtureData b = generate_fixture(config);
    CHECK(a.proposals_jsonl == b.proposals_jsonl);
    CHECK(a.papers_jsonl == b.papers_jsonl);
    CHECK(a.citations_jsonl == b.citations_jsonl);

    config.seed = 12;
    const FixtureData c = generate_fixture(config);
    CHECK(a.citations_jsonl != c.citations_jsonl);
}

TEST_CASE("fixture rejects impossible shapes") {
    FixtureConfig tiny;
    tiny.proposals = 3;
    tiny.topics = 8;
    CHECK_THROWS(generate_fixture(tiny));
}
