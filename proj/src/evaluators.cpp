#include "tdf/evaluators.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "tdf/rng.hpp"

namespace tdf {

namespace {

constexpr const char* kPlaceholder = "{S}";

std::size_t count_placeholders(const std::string& text) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(kPlaceholder, pos)) != std::string::npos) {
        ++count;
        pos += 3;
    }
    return count;
}

}  // namespace

PromptTemplate default_prompt_template() {
    // Stand-in filtering prompt; swap in a domain-tuned one via configuration.
    return PromptTemplate{
        "You are auditing a domain knowledge base. Decide whether the following "
        "statement is factually reliable.\nStatement: {S}\nReply with JSON only.",
        R"(reply schema: {"label": 0 or 1, "confidence": number in [0,1]})"};
}

std::string render_prompt(const PromptTemplate& tpl, const KnowledgeItem& item) {
    const std::size_t placeholders = count_placeholders(tpl.template_text);
    if (placeholders != 1) {
        throw TdfError(ErrorKind::bad_template,
                       "template must contain exactly one {S} placeholder, found " +
                           std::to_string(placeholders));
    }
    std::string prompt = tpl.template_text;
    prompt.replace(prompt.find(kPlaceholder), 3, item.text);
    return prompt;
}

NliVerdict verdict_from_probs(double entailment, double contradiction, double neutral) {
    if (std::isnan(entailment) || std::isnan(contradiction) || std::isnan(neutral)) {
        throw TdfError(ErrorKind::malformed_verdict, "NLI probability is NaN");
    }
    if (entailment < 0.0 || contradiction < 0.0 || neutral < 0.0) {
        throw TdfError(ErrorKind::malformed_verdict, "negative NLI probability");
    }
    const double sum = entailment + contradiction + neutral;
    if (sum <= 0.0) {
        throw TdfError(ErrorKind::malformed_verdict, "NLI probabilities sum to zero");
    }
    NliProbs probs{entailment / sum, contradiction / sum, neutral / sum};

    NliVerdict verdict;
    verdict.probs = probs;
    // Tie priority: entailment > contradiction > neutral.
    if (probs.entailment >= probs.contradiction && probs.entailment >= probs.neutral) {
        verdict.y2 = 1;
        verdict.c2 = probs.entailment;
    } else if (probs.contradiction >= probs.neutral) {
        verdict.y2 = 0;
        verdict.c2 = probs.contradiction;
    } else {
        verdict.y2 = -1;
        verdict.c2 = probs.neutral;
    }
    return verdict;
}

namespace {

ConfidenceVerdict parse_confidence_reply(const std::string& body) {
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::malformed_verdict, std::string("unparseable reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("label") || !reply.contains("confidence")) {
        throw TdfError(ErrorKind::malformed_verdict, "reply missing label/confidence");
    }
    if (!reply["label"].is_number_integer()) {
        throw TdfError(ErrorKind::malformed_verdict, "label is not an integer");
    }
    const long long label = reply["label"].get<long long>();
    if (label != 0 && label != 1) {
        throw TdfError(ErrorKind::malformed_verdict,
                       "label outside {0,1}: " + std::to_string(label));
    }
    if (!reply["confidence"].is_number()) {
        throw TdfError(ErrorKind::malformed_verdict, "confidence is not a number");
    }
    const double confidence = reply["confidence"].get<double>();
    if (std::isnan(confidence)) {
        throw TdfError(ErrorKind::malformed_verdict, "confidence is NaN");
    }
    return ConfidenceVerdict{static_cast<int>(label), std::clamp(confidence, 0.0, 1.0)};
}

}  // namespace

ConfidenceVerdict confidence_evaluate(ConfidenceClient& client, const KnowledgeItem& item,
                                      const PromptTemplate& tpl, int retries) {
    const std::string prompt = render_prompt(tpl, item);
    ErrorKind last_kind = ErrorKind::transport;
    std::string last_message;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        std::string body;
        try {
            body = client.request(prompt, item);
        } catch (const TdfError& e) {
            if (e.kind() == ErrorKind::oracle_misuse) throw;
            last_kind = ErrorKind::transport;
            last_message = e.what();
            continue;
        }
        try {
            return parse_confidence_reply(body);
        } catch (const TdfError& e) {
            last_kind = ErrorKind::malformed_verdict;
            last_message = e.what();
        }
    }
    if (last_kind == ErrorKind::transport) {
        throw TdfError(ErrorKind::evaluator_unavailable,
                       "confidence evaluator unreachable: " + last_message);
    }
    throw TdfError(ErrorKind::malformed_verdict,
                   "confidence reply stayed malformed after retries: " + last_message);
}

NliVerdict contradiction_evaluate(NliClient& client, const KnowledgeItem& item,
                                  const TrustedEntry& trusted) {
    if (item.text.empty() || trusted.item.text.empty()) {
        throw TdfError(ErrorKind::validation, "NLI texts must be non-empty");
    }
    std::string body;
    try {
        body = client.request(trusted.item.text, item);
    } catch (const TdfError& e) {
        if (e.kind() == ErrorKind::oracle_misuse) throw;
        throw TdfError(ErrorKind::evaluator_unavailable,
                       std::string("NLI evaluator unreachable: ") + e.what());
    }
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::malformed_verdict, std::string("unparseable NLI reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("entailment") || !reply.contains("contradiction") ||
        !reply.contains("neutral")) {
        throw TdfError(ErrorKind::malformed_verdict, "NLI reply missing probability fields");
    }
    for (const char* field : {"entailment", "contradiction", "neutral"}) {
        if (!reply[field].is_number()) {
            throw TdfError(ErrorKind::malformed_verdict,
                           std::string("NLI field is not a number: ") + field);
        }
    }
    return verdict_from_probs(reply["entailment"].get<double>(),
                              reply["contradiction"].get<double>(),
                              reply["neutral"].get<double>());
}

std::vector<ConfidenceBatchResult> confidence_evaluate_batch(ConfidenceClient& client,
                                                             const std::vector<KnowledgeItem>& items,
                                                             const PromptTemplate& tpl, int retries,
                                                             int parallelism) {
    std::vector<ConfidenceBatchResult> results(items.size());
    if (items.empty()) return results;
    const int workers =
        std::clamp<int>(parallelism, 1, static_cast<int>(items.size()));

    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= items.size()) return;
            try {
                results[i].verdict = confidence_evaluate(client, items[i], tpl, retries);
            } catch (const TdfError& e) {
                results[i].error = e.kind();
            }
        }
    };

    if (workers == 1) {
        work();
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return results;
}

std::string topic_key(const std::string& text) {
    std::string token;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else if (!token.empty()) {
            break;
        }
    }
    return token;
}

namespace mock {

ConfidenceVerdict confidence_draw(double accuracy, std::uint64_t stream_key, int flag) {
    rng::Stream stream(stream_key);
    const int label = stream.next_unit() < accuracy ? flag : 1 - flag;
    const double confidence = 0.5 + 0.5 * stream.next_unit();
    return ConfidenceVerdict{label, confidence};
}

NliProbs nli_draw(double accuracy, std::uint64_t stream_key, int ideal_label) {
    rng::Stream stream(stream_key);
    int chosen = ideal_label;
    if (stream.next_unit() >= accuracy) {
        const int other = stream.next_unit() < 0.5 ? 0 : 1;
        int alternatives[2];
        int k = 0;
        for (int label = 0; label < 3; ++label) {
            if (label != ideal_label) alternatives[k++] = label;
        }
        chosen = alternatives[other];
    }
    const double mass = 0.6 + 0.35 * stream.next_unit();
    const double rest = (1.0 - mass) / 2.0;
    double probs[3] = {rest, rest, rest};
    probs[chosen] = mass;
    return NliProbs{probs[kEntailment], probs[kContradiction], probs[kNeutral]};
}

}  // namespace mock

MockConfidenceClient::MockConfidenceClient(double accuracy, std::uint64_t seed)
    : accuracy_(accuracy), seed_(seed) {}

std::string MockConfidenceClient::request(const std::string&, const KnowledgeItem& item) {
    if (!item.gold_flag) {
        throw TdfError(ErrorKind::oracle_misuse,
                       "mock confidence oracle needs gold_flag on item '" + item.id + "'");
    }
    const ConfidenceVerdict verdict =
        mock::confidence_draw(accuracy_, rng::mix(seed_, rng::fnv1a(item.id)), *item.gold_flag);
    nlohmann::ordered_json reply;
    reply["label"] = verdict.y1;
    reply["confidence"] = verdict.c1;
    return reply.dump();
}

MockNliClient::MockNliClient(double accuracy, std::uint64_t seed)
    : accuracy_(accuracy), seed_(seed) {}

std::string MockNliClient::request(const std::string& premise, const KnowledgeItem& hypothesis) {
    if (!hypothesis.gold_flag) {
        throw TdfError(ErrorKind::oracle_misuse,
                       "mock NLI oracle needs gold_flag on item '" + hypothesis.id + "'");
    }
    int ideal = mock::kNeutral;
    if (topic_key(premise) == topic_key(hypothesis.text)) {
        ideal = *hypothesis.gold_flag == 1 ? mock::kEntailment : mock::kContradiction;
    }
    const NliProbs probs =
        mock::nli_draw(accuracy_, rng::mix(seed_, rng::fnv1a(hypothesis.id)), ideal);

    nlohmann::ordered_json reply;
    reply["entailment"] = probs.entailment;
    reply["contradiction"] = probs.contradiction;
    reply["neutral"] = probs.neutral;
    return reply.dump();
}

}  // namespace tdf
