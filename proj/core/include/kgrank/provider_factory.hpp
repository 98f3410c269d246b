#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "kgrank/http_transport.hpp"
#include "kgrank/providers.hpp"

namespace kgrank {

enum class ProviderMode { live, record, replay };

std::string_view to_string(ProviderMode mode);
ProviderMode provider_mode_from_string(std::string_view name);

/// `url` is an http(s) base URL or one of the offline schemes:
///   mock:hash?dim=N       HashingEmbedder
///   mock:overlap          OverlapCrossScorer
///   mock:rules=<path>     RuleCompleter loaded from a JSON file
struct EndpointConfig {
    std::string url;
    std::string model;
    std::string api_key;
};

struct ProviderSet {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<CrossScorer> scorer;
    std::shared_ptr<Completer> completer;
};

struct ProviderSetOptions {
    ProviderMode mode = ProviderMode::live;
    std::filesystem::path cassette_dir;
    EndpointConfig embed;
    EndpointConfig cross;
    EndpointConfig llm;
    RetryPolicy retry;
};

std::shared_ptr<Embedder> make_live_embedder(const EndpointConfig& endpoint, const RetryPolicy& retry);
std::shared_ptr<CrossScorer> make_live_scorer(const EndpointConfig& endpoint, const RetryPolicy& retry);
std::shared_ptr<Completer> make_live_completer(const EndpointConfig& endpoint, const RetryPolicy& retry);

/// Wires live, recording or replaying providers for the given mode.
/// In live and record mode an endpoint without a URL leaves its slot null.
/// Replay requires the cassette directory to exist; ConfigError otherwise.
ProviderSet make_providers(const ProviderSetOptions& options);

}  // namespace kgrank
