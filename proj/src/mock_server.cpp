#include "tdf/mock_server.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tdf/embedding.hpp"
#include "tdf/errors.hpp"
#include "tdf/evaluators.hpp"
#include "tdf/rng.hpp"

namespace tdf {

namespace {

// Text conventions for the wire mocks (no ids or flags travel on the wire):
// a statement is incorrect iff it carries the token "never".
bool has_falsehood_marker(const std::string& text) {
    std::string token;
    auto is_marker = [&] { return token == "never"; };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            if (is_marker()) return true;
            token.clear();
        }
    }
    return is_marker();
}

nlohmann::json parse_body(const std::string& body) {
    return nlohmann::json::parse(body);
}

void reply_error(httplib::Response& res, const std::string& message) {
    nlohmann::ordered_json err;
    err["error"] = message;
    res.status = 400;
    res.set_content(err.dump(), "application/json");
}

}  // namespace

struct MockEvaluatorServer::Impl {
    Options options;
    httplib::Server server;
    std::thread thread;
    std::atomic<std::uint64_t> request_counter{0};
    HashingEmbedder embedder;

    explicit Impl(Options opts)
        : options(opts),
          embedder(rng::derive_seed(opts.seed, "embedder"), opts.embed_dim) {
        setup_routes();
    }

    void log(const char* route) {
        const std::uint64_t id = ++request_counter;
        if (options.log_requests) {
            std::fprintf(stderr, "[mock-server] request %llu %s\n",
                         static_cast<unsigned long long>(id), route);
        }
    }

    void setup_routes() {
        server.Post("/confidence", [this](const httplib::Request& req, httplib::Response& res) {
            log("/confidence");
            nlohmann::json body;
            try {
                body = parse_body(req.body);
            } catch (const nlohmann::json::exception& e) {
                reply_error(res, std::string("bad request body: ") + e.what());
                return;
            }
            if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string()) {
                reply_error(res, "expected {prompt}");
                return;
            }
            const std::string prompt = body["prompt"].get<std::string>();
            const int flag = has_falsehood_marker(prompt) ? 0 : 1;
            const ConfidenceVerdict verdict = mock::confidence_draw(
                options.confidence_accuracy,
                rng::mix(rng::derive_seed(options.seed, "mock-confidence"), rng::fnv1a(prompt)),
                flag);
            nlohmann::ordered_json reply;
            reply["label"] = verdict.y1;
            reply["confidence"] = verdict.c1;
            res.set_content(reply.dump(), "application/json");
        });

        server.Post("/nli", [this](const httplib::Request& req, httplib::Response& res) {
            log("/nli");
            nlohmann::json body;
            try {
                body = parse_body(req.body);
            } catch (const nlohmann::json::exception& e) {
                reply_error(res, std::string("bad request body: ") + e.what());
                return;
            }
            if (!body.is_object() || !body.contains("premise") || !body.contains("hypothesis") ||
                !body["premise"].is_string() || !body["hypothesis"].is_string()) {
                reply_error(res, "expected {premise, hypothesis}");
                return;
            }
            const std::string premise = body["premise"].get<std::string>();
            const std::string hypothesis = body["hypothesis"].get<std::string>();
            int ideal = mock::kNeutral;
            if (topic_key(premise) == topic_key(hypothesis)) {
                ideal = has_falsehood_marker(hypothesis) ? mock::kContradiction
                                                         : mock::kEntailment;
            }
            const NliProbs probs = mock::nli_draw(
                options.nli_accuracy,
                rng::mix(rng::derive_seed(options.seed, "mock-nli"), rng::fnv1a(hypothesis)),
                ideal);
            nlohmann::ordered_json reply;
            reply["entailment"] = probs.entailment;
            reply["contradiction"] = probs.contradiction;
            reply["neutral"] = probs.neutral;
            res.set_content(reply.dump(), "application/json");
        });

        server.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            log("/embed");
            nlohmann::json body;
            try {
                body = parse_body(req.body);
            } catch (const nlohmann::json::exception& e) {
                reply_error(res, std::string("bad request body: ") + e.what());
                return;
            }
            if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
                reply_error(res, "expected {text}");
                return;
            }
            Embedding vector;
            try {
                vector = embedder.embed(body["text"].get<std::string>());
            } catch (const TdfError& e) {
                reply_error(res, e.what());
                return;
            }
            nlohmann::ordered_json reply;
            reply["vector"] = vector.values;
            reply["dim"] = vector.dim();
            res.set_content(reply.dump(), "application/json");
        });
    }
};

MockEvaluatorServer::MockEvaluatorServer(Options options)
    : impl_(std::make_unique<Impl>(options)) {}

MockEvaluatorServer::~MockEvaluatorServer() { stop(); }

int MockEvaluatorServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) {
            throw TdfError(ErrorKind::config, "mock server could not bind on " + host);
        }
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw TdfError(ErrorKind::config,
                           "mock server could not bind " + host + ":" + std::to_string(port));
        }
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void MockEvaluatorServer::serve_blocking(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port)) {
        throw TdfError(ErrorKind::config,
                       "mock server could not bind " + host + ":" + std::to_string(port));
    }
    impl_->server.listen_after_bind();
}

void MockEvaluatorServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tdf
