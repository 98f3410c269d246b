#include "kgrank/http_providers.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "kgrank/errors.hpp"

namespace kgrank {

namespace {

using nlohmann::json;

HttpHeaders auth_headers(const HttpProviderOptions& options) {
    HttpHeaders headers;
    if (!options.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options.api_key);
    return headers;
}

json post(const HttpClient& client, const HttpProviderOptions& options, std::string_view route,
          const json& body) {
    const std::string payload = body.dump();
    HttpResponse response = send_with_retry(options.retry, [&] {
        return client.post_json(route, payload, auth_headers(options));
    });
    if (response.status != 200) {
        throw ProviderError(fmt::format("{}{} answered HTTP {}: {}", client.base_url(), route,
                                        response.status, response.body.substr(0, 200)));
    }
    try {
        return json::parse(response.body);
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("{}{} returned invalid JSON: {}", client.base_url(), route,
                                        e.what()));
    }
}

}  // namespace

HttpEmbedder::HttpEmbedder(HttpProviderOptions options)
    : options_(std::move(options)), client_(options_.base_url) {}

std::vector<Vector> HttpEmbedder::do_embed(std::span<const std::string> texts) {
    json body = {{"model", options_.model}, {"texts", json(std::vector<std::string>(texts.begin(), texts.end()))}};
    json reply = post(client_, options_, "/v1/embed", body);
    try {
        auto dim = reply.at("dim").get<std::size_t>();
        std::vector<Vector> vectors;
        for (const auto& row : reply.at("vectors")) {
            auto components = row.get<std::vector<double>>();
            if (components.size() != dim) {
                throw ProtocolError(fmt::format("/v1/embed: vector of dim {} in a dim {} reply",
                                                components.size(), dim));
            }
            vectors.emplace_back(std::move(components));
        }
        return vectors;
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("/v1/embed: malformed reply: {}", e.what()));
    } catch (const ValidationError& e) {
        throw ProtocolError(fmt::format("/v1/embed: bad vector: {}", e.what()));
    }
}

HttpCrossScorer::HttpCrossScorer(HttpProviderOptions options)
    : options_(std::move(options)), client_(options_.base_url) {}

std::vector<double> HttpCrossScorer::do_cross_score(std::string_view query,
                                                    std::span<const std::string> passages) {
    json body = {{"model", options_.model},
                 {"query", std::string(query)},
                 {"passages", json(std::vector<std::string>(passages.begin(), passages.end()))}};
    json reply = post(client_, options_, "/v1/cross_score", body);
    try {
        return reply.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("/v1/cross_score: malformed reply: {}", e.what()));
    }
}

HttpCompleter::HttpCompleter(HttpProviderOptions options)
    : options_(std::move(options)), client_(options_.base_url) {}

std::string HttpCompleter::do_complete(const CompletionRequest& request) {
    json body = {{"model", request.model_id.empty() ? options_.model : request.model_id},
                 {"prompt", request.prompt},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    json reply = post(client_, options_, "/v1/complete", body);
    try {
        return reply.at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("/v1/complete: malformed reply: {}", e.what()));
    }
}

}  // namespace kgrank
