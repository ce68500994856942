#include <httplib.h>

#include <json.hpp>

#include "bmet/common/error.hpp"
#include "bmet/common/url.hpp"
#include "bmet/embedding/embedder.hpp"

namespace bmet::embedding {

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec, RemoteEmbedderConfig config)
    : spec_(spec), config_(std::move(config)) {
    spec_.validate();
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    auto url = split_url(config_.endpoint);
    if (!url) throw Error(Errc::ProviderUnavailable, "no embedding endpoint configured");

    httplib::Client client(url->origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.credential.empty()) headers.emplace("Authorization", "Bearer " + config_.credential);

    nlohmann::json body{{"input", std::string(text)}};
    auto res = client.Post(url->path, headers, body.dump(), "application/json");
    if (!res) throw Error(Errc::ProviderUnavailable, httplib::to_string(res.error()));
    if (res->status != 200) throw Error(Errc::ProviderUnavailable, "HTTP " + std::to_string(res->status));

    EmbeddingVector out;
    try {
        auto payload = nlohmann::json::parse(res->body);
        out.values = payload.at("embedding").get<std::vector<float>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ProviderUnavailable, std::string("bad embedding payload: ") + e.what());
    }
    if (out.values.size() != spec_.dimension)
        throw Error(Errc::DimensionMismatch, "remote embedder returned " + std::to_string(out.values.size()));
    const double norm = l2_norm(out.values);
    if (norm == 0.0) {
        out.is_zero = true;
    } else {
        for (auto& v : out.values) v = static_cast<float>(v / norm);
    }
    return out;
}

}  // namespace bmet::embedding
