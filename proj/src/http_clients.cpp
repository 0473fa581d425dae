#include "tdf/http_clients.hpp"

#include <httplib.h>
#include <json.hpp>

#include "tdf/errors.hpp"

namespace tdf {

namespace detail {

struct HttpPool::Conn {
    explicit Conn(const std::string& base_url) : client(base_url) {
        client.set_keep_alive(true);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
    }
    httplib::Client client;
};

HttpPool::HttpPool(std::string base_url, int connections) : base_url_(std::move(base_url)) {
    const int count = connections < 1 ? 1 : connections;
    conns_.reserve(count);
    free_list_.reserve(count);
    for (int i = 0; i < count; ++i) {
        conns_.push_back(std::make_unique<Conn>(base_url_));
        free_list_.push_back(static_cast<std::size_t>(i));
    }
}

HttpPool::~HttpPool() = default;

std::string HttpPool::post(const std::string& path, const std::string& body) {
    std::size_t slot;
    {
        std::unique_lock lock(mutex_);
        available_.wait(lock, [&] { return !free_list_.empty(); });
        slot = free_list_.back();
        free_list_.pop_back();
    }
    httplib::Result result = conns_[slot]->client.Post(path, body, "application/json");
    {
        std::lock_guard lock(mutex_);
        free_list_.push_back(slot);
    }
    available_.notify_one();

    if (!result) {
        throw TdfError(ErrorKind::transport, "POST " + base_url_ + path + " failed: " +
                                                 httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw TdfError(ErrorKind::transport, "POST " + base_url_ + path + " returned status " +
                                                 std::to_string(result->status));
    }
    return result->body;
}

}  // namespace detail

HttpConfidenceClient::HttpConfidenceClient(const std::string& base_url, int connections)
    : pool_(base_url, connections) {}

std::string HttpConfidenceClient::request(const std::string& prompt, const KnowledgeItem&) {
    nlohmann::ordered_json body;
    body["prompt"] = prompt;
    return pool_.post("/confidence", body.dump());
}

HttpNliClient::HttpNliClient(const std::string& base_url, int connections)
    : pool_(base_url, connections) {}

std::string HttpNliClient::request(const std::string& premise, const KnowledgeItem& hypothesis) {
    nlohmann::ordered_json body;
    body["premise"] = premise;
    body["hypothesis"] = hypothesis.text;
    return pool_.post("/nli", body.dump());
}

HttpEmbedder::HttpEmbedder(const std::string& base_url, int connections)
    : pool_(base_url, connections) {}

std::size_t HttpEmbedder::dim() const {
    {
        std::lock_guard lock(dim_mutex_);
        if (dim_ != 0) return dim_;
    }
    nlohmann::ordered_json body;
    body["text"] = "dimension probe";
    const std::string reply = pool_.post("/embed", body.dump());
    const auto parsed = nlohmann::json::parse(reply);
    std::lock_guard lock(dim_mutex_);
    dim_ = parsed.at("dim").get<std::size_t>();
    return dim_;
}

Embedding HttpEmbedder::embed(const std::string& text) {
    nlohmann::ordered_json body;
    body["text"] = text;
    const std::string reply = pool_.post("/embed", body.dump());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::transport, std::string("bad embed reply: ") + e.what());
    }
    auto values = parsed.at("vector").get<std::vector<float>>();
    {
        std::lock_guard lock(dim_mutex_);
        if (dim_ == 0) dim_ = values.size();
    }
    return normalize(std::move(values));
}

}  // namespace tdf
