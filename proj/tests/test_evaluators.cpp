#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdf/evaluators.hpp"
#include "tdf/rng.hpp"

using namespace tdf;

namespace {

const KnowledgeItem kCorrect{"i1", "topic3 statement that always holds", 1};
const KnowledgeItem kWrong{"i2", "topic3 statement that never holds", 0};

// Client replaying a scripted list of bodies; "!" throws a transport error.
class ScriptedConfidenceClient final : public ConfidenceClient {
public:
    explicit ScriptedConfidenceClient(std::vector<std::string> bodies)
        : bodies_(std::move(bodies)) {}

    std::string request(const std::string&, const KnowledgeItem&) override {
        const std::string body = bodies_[std::min(cursor_, bodies_.size() - 1)];
        ++cursor_;
        if (body == "!") throw TdfError(ErrorKind::transport, "scripted outage");
        return body;
    }

    std::size_t calls() const { return cursor_; }

private:
    std::vector<std::string> bodies_;
    std::size_t cursor_ = 0;
};

class ScriptedNliClient final : public NliClient {
public:
    explicit ScriptedNliClient(std::string body) : body_(std::move(body)) {}
    std::string request(const std::string&, const KnowledgeItem&) override {
        if (body_ == "!") throw TdfError(ErrorKind::transport, "scripted outage");
        return body_;
    }

private:
    std::string body_;
};

TrustedEntry trusted_of(const std::string& text) {
    return TrustedEntry{KnowledgeItem{"t", text, 1}, Embedding{{1.0f}}};
}

NliVerdict eval_probs(double e, double c, double n) {
    nlohmann::ordered_json body;
    body["entailment"] = e;
    body["contradiction"] = c;
    body["neutral"] = n;
    ScriptedNliClient client(body.dump());
    return contradiction_evaluate(client, kCorrect, trusted_of("topic3 premise"));
}

}  // namespace

TEST_CASE("render_prompt substitutes the single placeholder") {
    CHECK(render_prompt({"Judge: {S}", ""}, {"x", "A", 1}) == "Judge: A");
    CHECK_THROWS_AS(render_prompt({"no placeholder", ""}, kCorrect), TdfError);
    CHECK_THROWS_AS(render_prompt({"{S} and {S}", ""}, kCorrect), TdfError);
}

TEST_CASE("rendered prompt contains the statement verbatim once") {
    const auto tpl = default_prompt_template();
    const std::string prompt = render_prompt(tpl, kCorrect);
    const auto pos = prompt.find(kCorrect.text);
    REQUIRE(pos != std::string::npos);
    CHECK(prompt.find(kCorrect.text, pos + 1) == std::string::npos);
}

TEST_CASE("confidence_evaluate parses a structured reply") {
    ScriptedConfidenceClient client({R"({"label":1,"confidence":0.9})"});
    const auto verdict = confidence_evaluate(client, kCorrect, default_prompt_template(), 2);
    CHECK(verdict.y1 == 1);
    CHECK(verdict.c1 == doctest::Approx(0.9));
}

TEST_CASE("confidence_evaluate clamps confidence and validates the label") {
    ScriptedConfidenceClient client({R"({"label":0,"confidence":1.7})"});
    const auto verdict = confidence_evaluate(client, kCorrect, default_prompt_template(), 0);
    CHECK(verdict.y1 == 0);
    CHECK(verdict.c1 == 1.0);
}

TEST_CASE("confidence_evaluate retries and classifies terminal failures") {
    SUBCASE("malformed label three times with retries=2") {
        ScriptedConfidenceClient client({R"({"label":3,"confidence":0.5})"});
        try {
            confidence_evaluate(client, kCorrect, default_prompt_template(), 2);
            FAIL("expected malformed_verdict");
        } catch (const TdfError& e) {
            CHECK(e.kind() == ErrorKind::malformed_verdict);
        }
        CHECK(client.calls() == 3);  // initial try + 2 retries
    }
    SUBCASE("transport outage after retries") {
        ScriptedConfidenceClient client({"!"});
        try {
            confidence_evaluate(client, kCorrect, default_prompt_template(), 2);
            FAIL("expected evaluator_unavailable");
        } catch (const TdfError& e) {
            CHECK(e.kind() == ErrorKind::evaluator_unavailable);
        }
    }
    SUBCASE("recovery within the retry budget") {
        ScriptedConfidenceClient client({"!", "garbage", R"({"label":1,"confidence":0.8})"});
        const auto verdict = confidence_evaluate(client, kCorrect, default_prompt_template(), 2);
        CHECK(verdict.y1 == 1);
    }
}

TEST_CASE("contradiction verdicts follow the argmax with fixed tie-break") {
    SUBCASE("entailment wins") {
        const auto v = eval_probs(0.7, 0.2, 0.1);
        CHECK(v.y2 == 1);
        CHECK(v.c2 == doctest::Approx(0.7));
    }
    SUBCASE("neutral wins") {
        const auto v = eval_probs(0.2, 0.2, 0.6);
        CHECK(v.y2 == -1);
        CHECK(v.c2 == doctest::Approx(0.6));
    }
    SUBCASE("three-way tie goes to entailment") {
        const auto v = eval_probs(1.0 / 3, 1.0 / 3, 1.0 / 3);
        CHECK(v.y2 == 1);
        CHECK(v.c2 == doctest::Approx(1.0 / 3));
    }
    SUBCASE("contradiction beats neutral on a pairwise tie") {
        const auto v = eval_probs(0.1, 0.45, 0.45);
        CHECK(v.y2 == 0);
    }
}

TEST_CASE("contradiction_evaluate renormalizes and rejects bad triples") {
    const auto v = eval_probs(2.0, 1.0, 1.0);  // unnormalized
    CHECK(v.probs.entailment == doctest::Approx(0.5));
    CHECK(v.probs.sum() == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(eval_probs(-0.1, 0.6, 0.5), TdfError);
    CHECK_THROWS_AS(eval_probs(0.0, 0.0, 0.0), TdfError);

    ScriptedNliClient outage("!");
    try {
        contradiction_evaluate(outage, kCorrect, trusted_of("premise text"));
        FAIL("expected evaluator_unavailable");
    } catch (const TdfError& e) {
        CHECK(e.kind() == ErrorKind::evaluator_unavailable);
    }

    ScriptedNliClient garbage("not json");
    CHECK_THROWS_AS(contradiction_evaluate(garbage, kCorrect, trusted_of("premise text")),
                    TdfError);
}

TEST_CASE("argmax is invariant under positive rescaling") {
    rng::Stream stream(2024);
    for (int round = 0; round < 500; ++round) {
        const double e = stream.next_unit();
        const double c = stream.next_unit();
        const double n = stream.next_unit();
        if (e + c + n <= 0.0) continue;
        const double scale = 0.01 + 100.0 * stream.next_unit();
        const auto base = verdict_from_probs(e, c, n);
        const auto scaled = verdict_from_probs(e * scale, c * scale, n * scale);
        CHECK(base.y2 == scaled.y2);
        CHECK(base.c2 == doctest::Approx(scaled.c2).epsilon(1e-9));
    }
}

TEST_CASE("verdict invariants hold on fuzzed triples") {
    rng::Stream stream(909);
    for (int round = 0; round < 2000; ++round) {
        const double e = stream.next_unit() * 10.0;
        const double c = stream.next_unit() * 10.0;
        const double n = stream.next_unit() * 10.0;
        if (e + c + n <= 0.0) continue;
        const auto v = verdict_from_probs(e, c, n);
        CHECK(v.probs.sum() == doctest::Approx(1.0).epsilon(1e-6));
        const double maximum = std::max({v.probs.entailment, v.probs.contradiction, v.probs.neutral});
        CHECK(v.c2 == maximum);
        CHECK(v.c2 >= 1.0 / 3 - 1e-12);
        CHECK((v.y2 == -1 || v.y2 == 0 || v.y2 == 1));
    }
}

TEST_CASE("mock confidence oracle at the degenerate accuracies") {
    MockConfidenceClient perfect(1.0, 5);
    MockConfidenceClient inverted(0.0, 5);
    const auto tpl = default_prompt_template();
    for (const auto& item : {kCorrect, kWrong}) {
        CHECK(confidence_evaluate(perfect, item, tpl).y1 == *item.gold_flag);
        CHECK(confidence_evaluate(inverted, item, tpl).y1 == 1 - *item.gold_flag);
    }
}

TEST_CASE("mock confidence oracle is a pure function of (seed, item id)") {
    MockConfidenceClient a(0.8, 42);
    MockConfidenceClient b(0.8, 42);
    CHECK(a.request("p", kCorrect) == b.request("p", kCorrect));
    CHECK(a.request("p", kCorrect) == a.request("other prompt", kCorrect));

    KnowledgeItem unlabeled{"u", "text", std::nullopt};
    try {
        a.request("p", unlabeled);
        FAIL("expected oracle_misuse");
    } catch (const TdfError& e) {
        CHECK(e.kind() == ErrorKind::oracle_misuse);
    }
}

TEST_CASE("mock confidence empirical agreement tracks the accuracy dial") {
    // 10000 labeled items; binomial concentration keeps the mean within 0.02.
    MockConfidenceClient client(0.85, 1234);
    const auto tpl = default_prompt_template();
    int agree = 0;
    const int total = 10000;
    for (int i = 0; i < total; ++i) {
        KnowledgeItem item{"item" + std::to_string(i), "statement " + std::to_string(i), i % 2};
        const auto v = confidence_evaluate(client, item, tpl);
        if (v.y1 == *item.gold_flag) ++agree;
        CHECK(v.c1 >= 0.5);
        CHECK(v.c1 <= 1.0);
    }
    const double rate = static_cast<double>(agree) / total;
    CHECK(rate == doctest::Approx(0.85).epsilon(0.025));
}

TEST_CASE("mock NLI oracle behavior by topic and flag") {
    MockNliClient perfect(1.0, 7);
    SUBCASE("same topic, correct item -> entailment") {
        const auto v = contradiction_evaluate(perfect, kCorrect, trusted_of("topic3 trusted line"));
        CHECK(v.y2 == 1);
    }
    SUBCASE("same topic, incorrect item -> contradiction") {
        const auto v = contradiction_evaluate(perfect, kWrong, trusted_of("topic3 trusted line"));
        CHECK(v.y2 == 0);
    }
    SUBCASE("unrelated topic -> neutral") {
        const auto v = contradiction_evaluate(perfect, kCorrect, trusted_of("topic9 other line"));
        CHECK(v.y2 == -1);
    }
    SUBCASE("triples always sum to 1 within 1e-6 and lead with the chosen mass") {
        MockNliClient noisy(0.7, 99);
        for (int i = 0; i < 200; ++i) {
            KnowledgeItem item{"n" + std::to_string(i), "topic1 statement " + std::to_string(i),
                               i % 2};
            const auto v = contradiction_evaluate(noisy, item, trusted_of("topic1 base"));
            CHECK(v.probs.sum() == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(v.c2 >= 0.6);
            CHECK(v.c2 <= 0.95);
        }
    }
}

TEST_CASE("confidence batch slots results by input position") {
    std::vector<KnowledgeItem> items;
    for (int i = 0; i < 64; ++i) {
        items.push_back({"b" + std::to_string(i), "statement " + std::to_string(i), i % 2});
    }
    MockConfidenceClient client(1.0, 3);
    const auto tpl = default_prompt_template();
    const auto serial = confidence_evaluate_batch(client, items, tpl, 2, 1);
    const auto parallel = confidence_evaluate_batch(client, items, tpl, 2, 8);
    REQUIRE(serial.size() == items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        REQUIRE(serial[i].verdict.has_value());
        REQUIRE(parallel[i].verdict.has_value());
        CHECK(serial[i].verdict->y1 == *items[i].gold_flag);
        CHECK(parallel[i].verdict->y1 == serial[i].verdict->y1);
        CHECK(parallel[i].verdict->c1 == serial[i].verdict->c1);
    }
}

TEST_CASE("confidence batch records per-item failures") {
    std::vector<KnowledgeItem> items = {kCorrect, {"broken", "text", std::nullopt}, kWrong};
    MockConfidenceClient client(1.0, 3);
    const auto results =
        confidence_evaluate_batch(client, items, default_prompt_template(), 1, 4);
    CHECK(results[0].verdict.has_value());
    CHECK_FALSE(results[1].verdict.has_value());
    CHECK(results[1].error.has_value());
    CHECK(results[2].verdict.has_value());
}
