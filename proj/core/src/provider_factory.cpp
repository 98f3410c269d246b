#include "kgrank/provider_factory.hpp"

#include <fmt/format.h>

#include "kgrank/cassette.hpp"
#include "kgrank/errors.hpp"
#include "kgrank/http_providers.hpp"
#include "kgrank/mock_providers.hpp"

namespace kgrank {

namespace {

constexpr std::string_view kMockPrefix = "mock:";

bool is_mock(const EndpointConfig& e) {
    return std::string_view(e.url).starts_with(kMockPrefix);
}

std::string_view mock_spec(const EndpointConfig& e) {
    return std::string_view(e.url).substr(kMockPrefix.size());
}

HttpProviderOptions http_options(const EndpointConfig& e, const RetryPolicy& retry,
                                 std::string_view role) {
    if (e.url.empty()) {
        throw ConfigError(fmt::format("no endpoint URL configured for the {} provider", role));
    }
    return HttpProviderOptions{e.url, e.model, e.api_key, retry};
}

std::string model_or(const EndpointConfig& e, std::string fallback) {
    return e.model.empty() ? std::move(fallback) : e.model;
}

}  // namespace

std::string_view to_string(ProviderMode mode) {
    switch (mode) {
        case ProviderMode::live: return "live";
        case ProviderMode::record: return "record";
        case ProviderMode::replay: return "replay";
    }
    return "unknown";
}

ProviderMode provider_mode_from_string(std::string_view name) {
    if (name == "live") return ProviderMode::live;
    if (name == "record") return ProviderMode::record;
    if (name == "replay") return ProviderMode::replay;
    throw ConfigError(fmt::format("unknown mode '{}' (expected live, record or replay)", name));
}

std::shared_ptr<Embedder> make_live_embedder(const EndpointConfig& endpoint,
                                             const RetryPolicy& retry) {
    if (is_mock(endpoint)) {
        auto spec = mock_spec(endpoint);
        if (spec == "hash") return std::make_shared<HashingEmbedder>(32, model_or(endpoint, "mock-hash"));
        if (spec.starts_with("hash?dim=")) {
            std::size_t dim = std::stoul(std::string(spec.substr(9)));
            return std::make_shared<HashingEmbedder>(dim, model_or(endpoint, "mock-hash"));
        }
        throw ConfigError(fmt::format("unknown mock embedder '{}'", endpoint.url));
    }
    return std::make_shared<HttpEmbedder>(http_options(endpoint, retry, "embedding"));
}

std::shared_ptr<CrossScorer> make_live_scorer(const EndpointConfig& endpoint,
                                              const RetryPolicy& retry) {
    if (is_mock(endpoint)) {
        if (mock_spec(endpoint) == "overlap") {
            return std::make_shared<OverlapCrossScorer>(model_or(endpoint, "mock-overlap"));
        }
        throw ConfigError(fmt::format("unknown mock cross scorer '{}'", endpoint.url));
    }
    return std::make_shared<HttpCrossScorer>(http_options(endpoint, retry, "cross-encoder"));
}

std::shared_ptr<Completer> make_live_completer(const EndpointConfig& endpoint,
                                               const RetryPolicy& retry) {
    if (is_mock(endpoint)) {
        auto spec = mock_spec(endpoint);
        if (spec.starts_with("rules=")) {
            return std::make_shared<RuleCompleter>(RuleCompleter::from_file(std::string(spec.substr(6))));
        }
        throw ConfigError(fmt::format("unknown mock completer '{}'", endpoint.url));
    }
    return std::make_shared<HttpCompleter>(http_options(endpoint, retry, "LLM"));
}

ProviderSet make_providers(const ProviderSetOptions& options) {
    const auto& dir = options.cassette_dir;
    switch (options.mode) {
        case ProviderMode::live:
            return ProviderSet{
                options.embed.url.empty() ? nullptr : make_live_embedder(options.embed, options.retry),
                options.cross.url.empty() ? nullptr : make_live_scorer(options.cross, options.retry),
                options.llm.url.empty() ? nullptr : make_live_completer(options.llm, options.retry)};
        case ProviderMode::record: {
            if (dir.empty()) throw ConfigError("record mode needs a cassette directory");
            std::filesystem::create_directories(dir);
            ProviderSet set;
            if (!options.embed.url.empty()) {
                set.embedder = std::make_shared<RecordingEmbedder>(
                    make_live_embedder(options.embed, options.retry),
                    Cassette::open_or_create(ProviderKind::embed, cassette_path(dir, ProviderKind::embed)));
            }
            if (!options.cross.url.empty()) {
                set.scorer = std::make_shared<RecordingCrossScorer>(
                    make_live_scorer(options.cross, options.retry),
                    Cassette::open_or_create(ProviderKind::cross_score,
                                             cassette_path(dir, ProviderKind::cross_score)));
            }
            if (!options.llm.url.empty()) {
                set.completer = std::make_shared<RecordingCompleter>(
                    make_live_completer(options.llm, options.retry),
                    Cassette::open_or_create(ProviderKind::complete,
                                             cassette_path(dir, ProviderKind::complete)));
            }
            return set;
        }
        case ProviderMode::replay: {
            if (dir.empty()) throw ConfigError("replay mode needs a cassette directory");
            if (!std::filesystem::is_directory(dir)) {
                throw ConfigError(fmt::format("cassette directory {} does not exist", dir.string()));
            }
            // Missing kinds replay as empty cassettes: every lookup misses.
            auto open = [&](ProviderKind kind) -> std::shared_ptr<const Cassette> {
                auto path = cassette_path(dir, kind);
                if (std::filesystem::exists(path)) return Cassette::open(kind, path);
                return std::make_shared<Cassette>(kind);
            };
            return ProviderSet{
                std::make_shared<ReplayEmbedder>(open(ProviderKind::embed), options.embed.model),
                std::make_shared<ReplayCrossScorer>(open(ProviderKind::cross_score), options.cross.model),
                std::make_shared<ReplayCompleter>(open(ProviderKind::complete))};
        }
    }
    throw ConfigError("unknown provider mode");
}

}  // namespace kgrank
