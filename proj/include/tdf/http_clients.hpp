#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tdf/embedding.hpp"
#include "tdf/evaluators.hpp"

namespace tdf {

namespace detail {

// Keep-alive connection pool so concurrent in-flight requests don't fight
// over one socket. post() blocks until a connection is free.
class HttpPool {
public:
    HttpPool(std::string base_url, int connections);
    ~HttpPool();

    // POSTs a JSON body; returns the reply body or throws TdfError{transport}.
    std::string post(const std::string& path, const std::string& body);

private:
    struct Conn;
    std::string base_url_;
    std::vector<std::unique_ptr<Conn>> conns_;
    std::vector<std::size_t> free_list_;
    std::mutex mutex_;
    std::condition_variable available_;
};

}  // namespace detail

// Language-model endpoint over HTTP: POST /confidence {prompt} ->
// {label, confidence}.
class HttpConfidenceClient final : public ConfidenceClient {
public:
    explicit HttpConfidenceClient(const std::string& base_url, int connections = 8);
    std::string request(const std::string& prompt, const KnowledgeItem& item) override;

private:
    detail::HttpPool pool_;
};

// NLI endpoint over HTTP: POST /nli {premise, hypothesis} ->
// {entailment, contradiction, neutral}.
class HttpNliClient final : public NliClient {
public:
    explicit HttpNliClient(const std::string& base_url, int connections = 8);
    std::string request(const std::string& premise, const KnowledgeItem& hypothesis) override;

private:
    detail::HttpPool pool_;
};

// Embedding provider over HTTP: POST /embed {text} -> {vector, dim}.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(const std::string& base_url, int connections = 8);

    std::size_t dim() const override;
    Embedding embed(const std::string& text) override;

private:
    mutable detail::HttpPool pool_;
    mutable std::size_t dim_ = 0;  // discovered from the first reply
    mutable std::mutex dim_mutex_;
};

}  // namespace tdf
