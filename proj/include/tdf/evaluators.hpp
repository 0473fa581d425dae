#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdf/errors.hpp"
#include "tdf/knowledge.hpp"
#include "tdf/vector_index.hpp"

namespace tdf {

// Prompt with exactly one {S} placeholder for the statement under judgment.
struct PromptTemplate {
    std::string template_text;
    std::string output_schema_note;
};

PromptTemplate default_prompt_template();

// Replaces the single {S} placeholder with the item text; the rest of the
// template is untouched. Throws TdfError{bad_template} on zero or multiple
// placeholders.
std::string render_prompt(const PromptTemplate& tpl, const KnowledgeItem& item);

struct ConfidenceVerdict {
    int y1;     // 0 | 1
    double c1;  // [0, 1]
};

struct NliProbs {
    double entailment;
    double contradiction;
    double neutral;

    double sum() const { return entailment + contradiction + neutral; }
};

// y2 follows the label of the maximum probability: entailment -> 1,
// contradiction -> 0, neutral -> -1; c2 is that maximum.
struct NliVerdict {
    int y2;     // -1 | 0 | 1
    double c2;  // [1/3, 1]
    NliProbs probs;
};

// Core of the contradiction verdict: validates, renormalizes by the sum, and
// applies argmax with the fixed tie priority entailment > contradiction >
// neutral. Throws TdfError{malformed_verdict} on negative or all-zero input.
NliVerdict verdict_from_probs(double entailment, double contradiction, double neutral);

// A language-model endpoint. request() returns the raw wire reply body
// ({label, confidence} as JSON) for a rendered prompt. The item travels along
// so offline mocks can key their deterministic streams; remote clients ignore
// it. Implementations must tolerate concurrent in-flight requests.
class ConfidenceClient {
public:
    virtual ~ConfidenceClient() = default;
    virtual std::string request(const std::string& prompt, const KnowledgeItem& item) = 0;
};

// An NLI endpoint; request() returns the raw {entailment, contradiction,
// neutral} reply body for a (premise, hypothesis) pair.
class NliClient {
public:
    virtual ~NliClient() = default;
    virtual std::string request(const std::string& premise, const KnowledgeItem& hypothesis) = 0;
};

// Sends the rendered prompt and parses the structured reply; on transport or
// parse failure retries with the same prompt up to `retries` extra attempts.
// Exhausted transport failures throw evaluator_unavailable, exhausted parse
// failures malformed_verdict.
ConfidenceVerdict confidence_evaluate(ConfidenceClient& client, const KnowledgeItem& item,
                                      const PromptTemplate& tpl, int retries = 2);

// Premise = trusted text, hypothesis = candidate statement.
NliVerdict contradiction_evaluate(NliClient& client, const KnowledgeItem& item,
                                  const TrustedEntry& trusted);

struct ConfidenceBatchResult {
    std::optional<ConfidenceVerdict> verdict;
    std::optional<ErrorKind> error;
};

// Evaluates many items with a bounded worker pool. Results are slotted by
// input position, never by arrival order.
std::vector<ConfidenceBatchResult> confidence_evaluate_batch(ConfidenceClient& client,
                                                             const std::vector<KnowledgeItem>& items,
                                                             const PromptTemplate& tpl, int retries,
                                                             int parallelism);

// First alphanumeric token, lowercased. The offline mocks treat it as the
// statement's topic key.
std::string topic_key(const std::string& text);

namespace mock {

// NLI mock label indices, in wire order.
inline constexpr int kEntailment = 0;
inline constexpr int kContradiction = 1;
inline constexpr int kNeutral = 2;

// Draw procedures shared by the in-process oracles and the wire mock service;
// stream_key is the fully mixed per-subject key.
ConfidenceVerdict confidence_draw(double accuracy, std::uint64_t stream_key, int flag);
NliProbs nli_draw(double accuracy, std::uint64_t stream_key, int ideal_label);

}  // namespace mock

// Offline confidence oracle: per item, a stream keyed by (seed, item id)
// decides whether to agree with gold_flag (probability = accuracy) and draws
// the reported confidence from [0.5, 1.0]. Items without gold_flag raise
// oracle_misuse.
class MockConfidenceClient final : public ConfidenceClient {
public:
    MockConfidenceClient(double accuracy, std::uint64_t seed);
    std::string request(const std::string& prompt, const KnowledgeItem& item) override;

private:
    double accuracy_;
    std::uint64_t seed_;
};

// Offline NLI oracle. Ideal label: entailment for gold_flag=1 and
// contradiction for gold_flag=0 when premise and hypothesis share a topic
// key, neutral otherwise; with probability 1-accuracy one of the other two
// labels is emitted instead. The triple puts mass drawn from [0.6, 0.95] on
// the chosen label and splits the remainder evenly.
class MockNliClient final : public NliClient {
public:
    MockNliClient(double accuracy, std::uint64_t seed);
    std::string request(const std::string& premise, const KnowledgeItem& hypothesis) override;

private:
    double accuracy_;
    std::uint64_t seed_;
};

}  // namespace tdf
