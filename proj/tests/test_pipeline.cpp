#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "tdf/metrics.hpp"
#include "tdf/pipeline.hpp"
#include "tdf/report_io.hpp"
#include "tdf/rng.hpp"

#include "support/synthetic.hpp"

using namespace tdf;

namespace {

struct MockStack {
    MockConfidenceClient confidence;
    MockNliClient nli;
    EvaluatorSet evaluators;

    MockStack(double conf_accuracy, double nli_accuracy, std::uint64_t seed)
        : confidence(conf_accuracy, rng::derive_seed(seed, "mock-confidence")),
          nli(nli_accuracy, rng::derive_seed(seed, "mock-nli")) {
        evaluators.confidence = &confidence;
        evaluators.nli = &nli;
    }
};

FilterConfig base_config(std::uint64_t seed) {
    FilterConfig config;
    config.seed = seed;
    config.parallelism = 4;
    return config;
}

void check_conservation(const FilterReport& report, std::size_t input_size) {
    CHECK(report.outcomes.size() == input_size);
    std::int64_t accepted = 0, rejected = 0, deferred = 0;
    std::set<std::string> ids;
    for (const auto& o : report.outcomes) {
        ids.insert(o.id);
        switch (o.verdict) {
            case Verdict::accepted: ++accepted; break;
            case Verdict::rejected: ++rejected; break;
            case Verdict::deferred_final: ++deferred; break;
        }
    }
    CHECK(ids.size() == input_size);
    CHECK(accepted + rejected + deferred == static_cast<std::int64_t>(input_size));
    std::int64_t tally_accepted = 0, tally_rejected = 0;
    for (const auto& t : report.iterations) {
        tally_accepted += t.accepted;
        tally_rejected += t.rejected;
    }
    CHECK(tally_accepted == accepted);
    CHECK(tally_rejected == rejected);
    for (std::size_t i = 1; i < report.kb_size_by_iteration.size(); ++i) {
        CHECK(report.kb_size_by_iteration[i] >= report.kb_size_by_iteration[i - 1]);
    }
}

}  // namespace

TEST_CASE("initialize_kb embeds and inserts every trusted item") {
    HashingEmbedder embedder(3, 64);
    TrustedIndex kb(64, IndexMode::flat);
    const auto corpus = synthetic::make_corpus({50, 5, 1.0, 11});
    initialize_kb(kb, corpus, embedder);
    CHECK(kb.size() == 50);

    SUBCASE("re-initialization is snapshot-identical") {
        TrustedIndex again(64, IndexMode::flat);
        initialize_kb(again, corpus, embedder);
        std::ostringstream a, b;
        kb.save(a);
        again.save(b);
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("build_training_features pairs records with gold labels") {
    HashingEmbedder embedder(3, 64);
    const auto corpus = synthetic::make_corpus({120, 6, 0.5, 21});
    TrustedIndex kb(64, IndexMode::flat);
    initialize_kb(kb, synthetic::correct_items(corpus), embedder);

    MockStack mocks(1.0, 1.0, 5);
    const auto config = base_config(5);
    const auto [records, labels] = build_training_features(corpus, kb, mocks.evaluators, config,
                                                           embedder);
    REQUIRE(records.size() == corpus.size());  // output length = input length
    REQUIRE(labels.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(labels[i] == *corpus[i].gold_flag);
        // Perfect mocks with full topic coverage: y1 = gold, y2 tracks gold.
        CHECK(records[i].y1 == *corpus[i].gold_flag);
        CHECK(records[i].y2 == (*corpus[i].gold_flag == 1 ? 1 : 0));
        CHECK(records[i].c2 >= 0.6);
    }
}

TEST_CASE("unmatched training items carry the (-1, 0) placeholder") {
    HashingEmbedder embedder(3, 64);
    TrustedIndex kb(64, IndexMode::flat);  // empty: nothing can match
    const auto corpus = synthetic::make_corpus({30, 3, 0.5, 22});
    MockStack mocks(1.0, 1.0, 6);
    const auto [records, labels] =
        build_training_features(corpus, kb, mocks.evaluators, base_config(6), embedder);
    for (const auto& r : records) {
        CHECK(r.y2 == -1);
        CHECK(r.c2 == 0.0);
    }
}

TEST_CASE("build_training_features validates gold flags and reports aborts") {
    HashingEmbedder embedder(3, 64);
    TrustedIndex kb(64, IndexMode::flat);
    std::vector<KnowledgeItem> items = {{"a", "topic0 text", 1}, {"b", "topic0 text two", std::nullopt}};
    MockStack mocks(1.0, 1.0, 7);
    try {
        build_training_features(items, kb, mocks.evaluators, base_config(7), embedder);
        FAIL("expected validation error");
    } catch (const TdfError& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("run_basic with a perfect oracle scores accuracy 1.0") {
    const auto corpus = synthetic::make_corpus({200, 8, 0.5, 31});
    MockStack mocks(1.0, 1.0, 8);
    const auto report = run_basic(corpus, mocks.evaluators, base_config(8));
    check_conservation(report, corpus.size());
    CHECK(report.kb_size_by_iteration == std::vector<std::size_t>{0});

    const auto scored = confusion(report.outcomes, corpus);
    CHECK(scored.deferred == 0);
    CHECK(metrics(scored.cm).accuracy == doctest::Approx(1.0));
}

TEST_CASE("run_basic accuracy tracks the mock dial on 5000 items") {
    const auto corpus = synthetic::make_corpus({5000, 40, 0.6, 32});
    MockStack mocks(0.85, 1.0, 9);
    const auto report = run_basic(corpus, mocks.evaluators, base_config(9));
    const auto scored = confusion(report.outcomes, corpus);
    CHECK(metrics(scored.cm).accuracy == doctest::Approx(0.85).epsilon(0.025));
}

TEST_CASE("run_basic verdicts equal the confidence label item-by-item") {
    const auto corpus = synthetic::make_corpus({80, 4, 0.5, 33});
    MockStack mocks(0.7, 1.0, 10);
    const auto report = run_basic(corpus, mocks.evaluators, base_config(10));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto verdict =
            confidence_evaluate(mocks.confidence, corpus[i], mocks.evaluators.prompt);
        CHECK((report.outcomes[i].verdict == Verdict::accepted) == (verdict.y1 == 1));
    }
}

TEST_CASE("run_filter against an empty kb defers everything and stops early") {
    HashingEmbedder embedder(3, 64);
    TrustedIndex kb(64, IndexMode::flat);
    const auto corpus = synthetic::make_corpus({40, 4, 0.5, 41});
    MockStack mocks(1.0, 1.0, 11);

    // Minimal tree so predict never runs anyway.
    const auto tree = DecisionTree::train({EvalRecord{1, 0.9, 1, 0.9}, EvalRecord{0, 0.1, 0, 0.9}},
                                          {1, 0});
    auto config = base_config(11);
    config.mode = FilterMode::self_nli;
    const auto report = run_filter(corpus, kb, tree, mocks.evaluators, config, embedder);
    check_conservation(report, corpus.size());
    CHECK(report.iterations.size() == 1);  // zero-progress round ends the loop
    for (const auto& o : report.outcomes) {
        CHECK(o.verdict == Verdict::deferred_final);
        CHECK_FALSE(o.eval.has_value());
    }
}

TEST_CASE("self_nli with perfect mocks and full coverage is exact") {
    HashingEmbedder embedder(3, 64);
    const auto corpus = synthetic::make_corpus({600, 12, 0.6, 51});
    const auto split = split_dataset(corpus, 51);

    TrustedIndex kb(64, IndexMode::flat);
    initialize_kb(kb, synthetic::correct_items(split.train), embedder);
    const std::size_t seed_size = kb.size();

    MockStack mocks(1.0, 1.0, 12);
    auto config = base_config(12);
    config.mode = FilterMode::self_nli;

    const auto [records, labels] =
        build_training_features(split.train, kb, mocks.evaluators, config, embedder);
    const auto tree = DecisionTree::train(records, labels, config.tree);

    const auto report = run_filter(split.test, kb, tree, mocks.evaluators, config, embedder);
    check_conservation(report, split.test.size());

    const auto scored = confusion(report.outcomes, split.test);
    CHECK(metrics(scored.cm).accuracy == doctest::Approx(1.0));

    // kb grows by exactly the accepted count
    std::int64_t accepted = 0;
    for (const auto& t : report.iterations) accepted += t.accepted;
    CHECK(kb.size() == seed_size + static_cast<std::size_t>(accepted));

    // accepted/rejected outcomes carry eval and matched_id
    for (const auto& o : report.outcomes) {
        if (o.verdict == Verdict::deferred_final) continue;
        CHECK(o.eval.has_value());
        CHECK(o.matched_id.has_value());
        CHECK(o.similarity.has_value());
        CHECK(o.path.has_value());
        CHECK(o.path->verdict == (o.verdict == Verdict::accepted ? 1 : 0));
    }
}

TEST_CASE("fake mode draws distractors and never grows the kb") {
    HashingEmbedder embedder(3, 64);
    const auto corpus = synthetic::make_corpus({200, 8, 0.6, 61});
    const auto split = split_dataset(corpus, 61);
    const auto distractors = synthetic::make_distractors(20, 61);

    TrustedIndex kb(64, IndexMode::flat);
    initialize_kb(kb, synthetic::correct_items(split.train), embedder);
    const std::size_t seed_size = kb.size();

    MockStack mocks(1.0, 1.0, 13);
    auto config = base_config(13);
    config.mode = FilterMode::fake;

    const auto [records, labels] =
        build_training_features(split.train, kb, mocks.evaluators, config, embedder);
    const auto tree = DecisionTree::train(records, labels, config.tree);

    const auto report =
        run_filter(split.test, kb, tree, mocks.evaluators, config, embedder, &distractors);
    check_conservation(report, split.test.size());
    CHECK(kb.size() == seed_size);  // fake accepts do not expand the index
    CHECK(report.iterations.size() == 1);

    std::set<std::string> distractor_ids;
    for (const auto& d : distractors) distractor_ids.insert(d.id);
    for (const auto& o : report.outcomes) {
        REQUIRE(o.matched_id.has_value());
        CHECK(distractor_ids.count(*o.matched_id) == 1);
    }

    SUBCASE("missing pool is a configuration error") {
        TrustedIndex kb2(64, IndexMode::flat);
        CHECK_THROWS_AS(
            run_filter(split.test, kb2, tree, mocks.evaluators, config, embedder, nullptr),
            TdfError);
    }
}

TEST_CASE("fake_match is deterministic and uniform") {
    HashingEmbedder embedder(3, 64);
    const auto pool = synthetic::make_distractors(100, 71);

    SUBCASE("pool of one always matches it") {
        const std::vector<KnowledgeItem> single(pool.begin(), pool.begin() + 1);
        for (int i = 0; i < 20; ++i) {
            const KnowledgeItem item{"x" + std::to_string(i), "topic0 text", 1};
            CHECK(fake_match(item, single, 5, embedder).item.id == single[0].id);
        }
    }
    SUBCASE("same seed pairs identically") {
        const KnowledgeItem item{"x1", "topic0 text", 1};
        CHECK(fake_match(item, pool, 5, embedder).item.id ==
              fake_match(item, pool, 5, embedder).item.id);
    }
    SUBCASE("draw frequencies stay near uniform over 10000 items") {
        std::map<std::string, int> counts;
        for (int i = 0; i < 10000; ++i) {
            const KnowledgeItem item{"u" + std::to_string(i), "text", 1};
            counts[fake_match(item, pool, 1, embedder).item.id] += 1;
        }
        CHECK(counts.size() == 100);
        for (const auto& [id, count] : counts) {
            CHECK(count >= 70);
            CHECK(count <= 130);
        }
    }
    SUBCASE("empty pool is a configuration error") {
        CHECK_THROWS_AS(fake_match({"x", "t", 1}, {}, 5, embedder), TdfError);
    }
}

TEST_CASE("filter runs are deterministic: same seed, byte-identical manifest") {
    HashingEmbedder embedder(3, 64);
    const auto corpus = synthetic::make_corpus({300, 10, 0.6, 81});
    const auto split = split_dataset(corpus, 81);

    auto run_once = [&]() {
        TrustedIndex kb(64, IndexMode::flat);
        initialize_kb(kb, synthetic::correct_items(split.train), embedder);
        MockStack mocks(0.85, 0.95, 14);
        auto config = base_config(14);
        config.mode = FilterMode::self_nli;
        const auto [records, labels] =
            build_training_features(split.train, kb, mocks.evaluators, config, embedder);
        const auto tree = DecisionTree::train(records, labels, config.tree);
        const auto report = run_filter(split.test, kb, tree, mocks.evaluators, config, embedder);
        return manifest_text(report);
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("manifest round-trips through JSON") {
    const auto corpus = synthetic::make_corpus({60, 6, 0.5, 91});
    MockStack mocks(0.9, 1.0, 15);
    const auto report = run_basic(corpus, mocks.evaluators, base_config(15));
    const auto doc = manifest_json(report);
    const auto loaded = manifest_from_json(doc);
    CHECK(manifest_json(loaded) == doc);
    CHECK(loaded.outcomes.size() == report.outcomes.size());
    CHECK(loaded.config.seed == report.config.seed);
}
