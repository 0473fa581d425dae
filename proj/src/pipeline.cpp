#include "tdf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <unordered_map>

#include "tdf/rng.hpp"

namespace tdf {

const char* to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::basic: return "basic";
        case FilterMode::self_nli: return "self_nli";
        case FilterMode::fake: return "fake";
    }
    return "?";
}

FilterMode filter_mode_from_string(const std::string& name) {
    if (name == "basic") return FilterMode::basic;
    if (name == "self_nli") return FilterMode::self_nli;
    if (name == "fake") return FilterMode::fake;
    throw TdfError(ErrorKind::config, "unknown filter mode '" + name + "'");
}

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::accepted: return "accepted";
        case Verdict::rejected: return "rejected";
        case Verdict::deferred_final: return "deferred_final";
    }
    return "?";
}

void initialize_kb(TrustedIndex& index, const std::vector<KnowledgeItem>& trusted_items,
                   Embedder& embedder) {
    for (const auto& item : trusted_items) {
        index.insert(TrustedEntry{item, embedder.embed(item.text)});
    }
}

namespace {

void validate_config(const FilterConfig& config) {
    if (config.max_iterations < 1) {
        throw TdfError(ErrorKind::config, "max_iterations must be at least 1");
    }
    if (config.threshold < 0.0 || config.threshold > 1.0) {
        throw TdfError(ErrorKind::config, "threshold must lie in [0, 1]");
    }
    if (config.parallelism < 1) {
        throw TdfError(ErrorKind::config, "parallelism must be at least 1");
    }
}

// Bounded worker pool over an index range; results land in caller-owned slots.
void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const int workers = std::clamp<int>(parallelism, 1, static_cast<int>(count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

}  // namespace

std::pair<std::vector<EvalRecord>, std::vector<int>> build_training_features(
    const std::vector<KnowledgeItem>& train_items, const TrustedIndex& kb,
    const EvaluatorSet& evaluators, const FilterConfig& config, Embedder& embedder) {
    validate_config(config);
    for (const auto& item : train_items) {
        if (!item.gold_flag) {
            throw TdfError(ErrorKind::validation,
                           "training item '" + item.id + "' has no gold flag");
        }
    }

    struct Slot {
        EvalRecord record{};
        std::optional<std::string> error;
    };
    std::vector<Slot> slots(train_items.size());

    // The knowledge base is read-only here, so the whole per-item feature
    // computation fans out safely.
    parallel_for(train_items.size(), config.parallelism, [&](std::size_t i) {
        Slot& slot = slots[i];
        try {
            const ConfidenceVerdict conf =
                confidence_evaluate(*evaluators.confidence, train_items[i], evaluators.prompt,
                                    evaluators.retries);
            const MatchResult match =
                match_trusted(kb, train_items[i], config.threshold, embedder);
            int y2 = -1;
            double c2 = 0.0;
            if (match.is_matched()) {
                const NliVerdict nli =
                    contradiction_evaluate(*evaluators.nli, train_items[i], match.matched->entry);
                y2 = nli.y2;
                c2 = nli.c2;
            }
            slot.record = EvalRecord{conf.y1, conf.c1, y2, c2};
        } catch (const TdfError& e) {
            slot.error = e.what();
        }
    });

    std::vector<EvalRecord> records;
    std::vector<int> labels;
    records.reserve(train_items.size());
    labels.reserve(train_items.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].error) {
            throw TdfError(ErrorKind::evaluator_unavailable,
                           "feature generation aborted at item '" + train_items[i].id + "' (" +
                               std::to_string(records.size()) + "/" +
                               std::to_string(train_items.size()) + " built): " + *slots[i].error);
        }
        records.push_back(slots[i].record);
        labels.push_back(*train_items[i].gold_flag);
    }
    return {std::move(records), std::move(labels)};
}

FilterReport run_basic(const std::vector<KnowledgeItem>& items, const EvaluatorSet& evaluators,
                       const FilterConfig& config) {
    validate_config(config);
    FilterReport report;
    report.config = config;
    report.config.mode = FilterMode::basic;

    const auto batch = confidence_evaluate_batch(*evaluators.confidence, items, evaluators.prompt,
                                                 evaluators.retries, config.parallelism);

    IterationTally tally;
    tally.iteration = 1;
    tally.processed = static_cast<std::int64_t>(items.size());
    report.outcomes.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        ItemOutcome outcome;
        outcome.id = items[i].id;
        outcome.iteration = 1;
        if (batch[i].verdict) {
            outcome.eval = EvalRecord{batch[i].verdict->y1, batch[i].verdict->c1, -1, 0.0};
            outcome.verdict = batch[i].verdict->y1 == 1 ? Verdict::accepted : Verdict::rejected;
            (outcome.verdict == Verdict::accepted ? tally.accepted : tally.rejected) += 1;
        } else {
            outcome.verdict = Verdict::deferred_final;
            tally.deferred += 1;
        }
        report.outcomes.push_back(std::move(outcome));
    }
    report.iterations.push_back(tally);
    report.kb_size_by_iteration.push_back(0);
    return report;
}

TrustedEntry fake_match(const KnowledgeItem& item, const std::vector<KnowledgeItem>& pool,
                        std::uint64_t seed, Embedder& embedder) {
    if (pool.empty()) {
        throw TdfError(ErrorKind::config, "fake matching needs a non-empty distractor pool");
    }
    rng::Stream stream(rng::mix(seed, rng::fnv1a(item.id)));
    const auto pick = static_cast<std::size_t>(stream.next_below(pool.size()));
    return TrustedEntry{pool[pick], embedder.embed(pool[pick].text)};
}

FilterReport run_filter(const std::vector<KnowledgeItem>& items, TrustedIndex& kb,
                        const DecisionTree& tree, const EvaluatorSet& evaluators,
                        const FilterConfig& config, Embedder& embedder,
                        const std::vector<KnowledgeItem>* distractor_pool) {
    validate_config(config);
    if (config.mode == FilterMode::basic) {
        throw TdfError(ErrorKind::config, "run_filter handles self_nli and fake modes only");
    }
    const bool fake = config.mode == FilterMode::fake;
    if (fake && (distractor_pool == nullptr || distractor_pool->empty())) {
        throw TdfError(ErrorKind::config, "fake mode needs a non-empty distractor pool");
    }
    const std::uint64_t fake_seed = rng::derive_seed(config.seed, "fake");

    FilterReport report;
    report.config = config;
    report.outcomes.resize(items.size());

    // Item embeddings are fixed across rounds; compute them once.
    std::vector<Embedding> item_vectors(items.size());
    parallel_for(items.size(), config.parallelism,
                 [&](std::size_t i) { item_vectors[i] = embedder.embed(items[i].text); });

    // Distractor entries are drawn per item but embedded once per distractor.
    std::vector<std::optional<TrustedEntry>> fake_entries(fake ? items.size() : 0);
    if (fake) {
        std::unordered_map<std::string, Embedding> pool_vectors;
        for (std::size_t i = 0; i < items.size(); ++i) {
            rng::Stream stream(rng::mix(fake_seed, rng::fnv1a(items[i].id)));
            const auto pick = static_cast<std::size_t>(stream.next_below(distractor_pool->size()));
            const KnowledgeItem& distractor = (*distractor_pool)[pick];
            auto it = pool_vectors.find(distractor.id);
            if (it == pool_vectors.end()) {
                it = pool_vectors.emplace(distractor.id, embedder.embed(distractor.text)).first;
            }
            fake_entries[i] = TrustedEntry{distractor, it->second};
        }
    }

    std::vector<std::size_t> pending(items.size());
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

    std::vector<std::optional<ConfidenceVerdict>> confidence_cache(items.size());

    int executed_rounds = 0;
    for (int round = 1; round <= config.max_iterations && !pending.empty(); ++round) {
        executed_rounds = round;
        IterationTally tally;
        tally.iteration = round;
        tally.processed = static_cast<std::int64_t>(pending.size());

        // Concurrent evaluator fan-out for the round: confidence verdicts are
        // per-item constants, so they prefetch in parallel. Failures are not
        // cached; a later round retries them.
        std::vector<std::size_t> uncached;
        for (std::size_t idx : pending) {
            if (!confidence_cache[idx]) uncached.push_back(idx);
        }
        parallel_for(uncached.size(), config.parallelism, [&](std::size_t u) {
            const std::size_t idx = uncached[u];
            try {
                confidence_cache[idx] = confidence_evaluate(*evaluators.confidence, items[idx],
                                                            evaluators.prompt, evaluators.retries);
            } catch (const TdfError&) {
                // leave empty; deferral happens during application
            }
        });

        // Outcome application is serialized in item order so that an accept
        // is matchable by every later item of the same round.
        std::vector<std::size_t> next_pending;
        for (std::size_t idx : pending) {
            const KnowledgeItem& item = items[idx];

            std::optional<Matched> premise;
            if (fake) {
                premise = Matched{*fake_entries[idx],
                                  cosine_similarity(item_vectors[idx], fake_entries[idx]->vector)};
            } else {
                auto top = kb.search_top1(item_vectors[idx]);
                if (top && top->similarity >= config.threshold) premise = std::move(top);
            }
            if (!premise) {
                tally.deferred += 1;
                next_pending.push_back(idx);
                continue;
            }
            tally.matched += 1;

            if (!confidence_cache[idx]) {  // confidence evaluator failed this round
                tally.deferred += 1;
                next_pending.push_back(idx);
                continue;
            }
            NliVerdict nli;
            try {
                nli = contradiction_evaluate(*evaluators.nli, item, premise->entry);
            } catch (const TdfError& e) {
                if (e.kind() == ErrorKind::evaluator_unavailable ||
                    e.kind() == ErrorKind::malformed_verdict) {
                    tally.deferred += 1;
                    next_pending.push_back(idx);
                    continue;
                }
                throw;
            }

            const ConfidenceVerdict& conf = *confidence_cache[idx];
            const EvalRecord record{conf.y1, conf.c1, nli.y2, nli.c2};
            const int z = tree.predict(record);

            ItemOutcome& outcome = report.outcomes[idx];
            outcome.id = item.id;
            outcome.iteration = round;
            outcome.eval = record;
            outcome.matched_id = premise->entry.item.id;
            outcome.similarity = premise->similarity;
            outcome.path = tree.explain(record);
            if (z == 1) {
                outcome.verdict = Verdict::accepted;
                tally.accepted += 1;
                if (!fake) {
                    kb.insert(TrustedEntry{item, item_vectors[idx]});
                }
            } else {
                outcome.verdict = Verdict::rejected;
                tally.rejected += 1;
            }
        }

        report.iterations.push_back(tally);
        report.kb_size_by_iteration.push_back(kb.size());

        const bool progressed = next_pending.size() < pending.size();
        pending = std::move(next_pending);
        if (!progressed) break;  // a round that defers everything ends the loop
    }

    for (std::size_t idx : pending) {
        ItemOutcome& outcome = report.outcomes[idx];
        outcome.id = items[idx].id;
        outcome.verdict = Verdict::deferred_final;
        outcome.iteration = executed_rounds;
    }
    return report;
}

}  // namespace tdf
