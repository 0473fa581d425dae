#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace tdf {

// Local evaluator service speaking the production wire contracts, backed by
// the deterministic mock oracles:
//   POST /confidence {prompt}              -> {label, confidence}
//   POST /nli        {premise, hypothesis} -> {entailment, contradiction, neutral}
//   POST /embed      {text}                -> {vector, dim}
//
// The wire carries no ids or gold flags, so the service derives them from the
// text itself: a statement counts as incorrect iff it contains the token
// "never", and its topic key is its first token. The bundled synthetic corpus
// generator emits statements following exactly this convention.
class MockEvaluatorServer {
public:
    struct Options {
        double confidence_accuracy = 0.85;
        double nli_accuracy = 0.95;
        std::uint64_t seed = 0;
        std::size_t embed_dim = 64;
        bool log_requests = false;
    };

    explicit MockEvaluatorServer(Options options);
    ~MockEvaluatorServer();

    MockEvaluatorServer(const MockEvaluatorServer&) = delete;
    MockEvaluatorServer& operator=(const MockEvaluatorServer&) = delete;

    // Binds (port 0 picks a free one) and serves on a background thread.
    // Returns the bound port. Throws TdfError{config} when the port is busy.
    int start(const std::string& host, int port);

    // Binds and serves on the calling thread; returns when stop() is called
    // or the socket fails. Throws TdfError{config} when the port is busy.
    void serve_blocking(const std::string& host, int port);

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tdf
