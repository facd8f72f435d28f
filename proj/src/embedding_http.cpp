#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "trialrank/embedding.hpp"
#include "trialrank/error.hpp"

namespace trialrank {

HttpEmbeddingProvider::HttpEmbeddingProvider(const std::string& url, std::chrono::milliseconds timeout)
    : timeout_(timeout)
{
    static const std::regex pattern(R"(^(http://[^/\s]+)(/\S*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, pattern)) {
        throw Error(ErrorCode::invalid_config, "embedding endpoint must look like http://host[:port]/path, got '" +
                                                   url + "'");
    }
    origin_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
}

EmbeddingVector HttpEmbeddingProvider::embed(std::string_view text)
{
    httplib::Client client(origin_);
    auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    nlohmann::json body{{"text", std::string(text)}};
    auto response = client.Post(path_, body.dump(), "application/json");
    if (!response) {
        throw Error(ErrorCode::provider_unavailable,
                    origin_ + path_ + ": " + httplib::to_string(response.error()));
    }
    if (response->status != 200) {
        throw Error(ErrorCode::provider_unavailable, origin_ + path_ + ": HTTP " + std::to_string(response->status));
    }
    auto reply = nlohmann::json::parse(response->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("vector") || !reply["vector"].is_array()) {
        throw Error(ErrorCode::provider_unavailable, origin_ + path_ + ": response lacks a \"vector\" array");
    }
    EmbeddingVector v;
    for (const auto& x : reply["vector"]) {
        if (!x.is_number()) {
            throw Error(ErrorCode::provider_unavailable, origin_ + path_ + ": non-numeric vector entry");
        }
        v.values.push_back(x.get<double>());
    }
    return v;
}

}  // namespace trialrank
