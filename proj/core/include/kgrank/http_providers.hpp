#pragma once

#include <string>

#include "kgrank/http_transport.hpp"
#include "kgrank/providers.hpp"

namespace kgrank {

/// Endpoint settings shared by the HTTP providers. `base_url` is the server
/// root; the /v1/... route is appended.
struct HttpProviderOptions {
    std::string base_url;
    std::string model;
    std::string api_key;  ///< sent as "Authorization: Bearer <key>" when set
    RetryPolicy retry;
};

/// POST /v1/embed {"model", "texts"} -> {"dim", "vectors"}
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpProviderOptions options);
    std::string model_id() const override { return options_.model; }

protected:
    std::vector<Vector> do_embed(std::span<const std::string> texts) override;

private:
    HttpProviderOptions options_;
    HttpClient client_;
};

/// POST /v1/cross_score {"model", "query", "passages"} -> {"scores"}
class HttpCrossScorer final : public CrossScorer {
public:
    explicit HttpCrossScorer(HttpProviderOptions options);
    std::string model_id() const override { return options_.model; }

protected:
    std::vector<double> do_cross_score(std::string_view query,
                                       std::span<const std::string> passages) override;

private:
    HttpProviderOptions options_;
    HttpClient client_;
};

/// POST /v1/complete {"model", "prompt", "temperature", "max_tokens"} -> {"text"}
/// An empty request model_id falls back to the configured model.
class HttpCompleter final : public Completer {
public:
    explicit HttpCompleter(HttpProviderOptions options);

protected:
    std::string do_complete(const CompletionRequest& request) override;

private:
    HttpProviderOptions options_;
    HttpClient client_;
};

}  // namespace kgrank
