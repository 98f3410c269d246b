#include "kgrank/providers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

Vector::Vector(std::vector<double> components) : components_(std::move(components)) {
    if (components_.empty()) throw ValidationError("vector must have dim >= 1");
    for (double c : components_) {
        if (!std::isfinite(c)) throw ValidationError("vector component is not finite");
    }
}

void CompletionRequest::validate() const {
    if (trim(prompt).empty()) throw ValidationError("completion prompt is empty");
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw ValidationError(fmt::format("temperature must be >= 0, got {}", temperature));
    }
    if (max_tokens < 1) throw ValidationError("max_tokens must be positive");
}

CompletionRequest CompletionSettings::request(std::string prompt) const {
    return CompletionRequest{std::move(prompt), temperature, max_tokens, model};
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::embed: return "embed";
        case ProviderKind::cross_score: return "cross_score";
        case ProviderKind::complete: return "complete";
    }
    return "unknown";
}

ProviderKind provider_kind_from_string(std::string_view name) {
    if (name == "embed") return ProviderKind::embed;
    if (name == "cross_score") return ProviderKind::cross_score;
    if (name == "complete") return ProviderKind::complete;
    throw ValidationError(fmt::format("unknown provider kind '{}'", name));
}

std::vector<Vector> Embedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) throw ValidationError("embed: no texts given");
    for (const auto& text : texts) {
        if (trim(text).empty()) throw ValidationError("embed: blank text");
    }
    auto vectors = do_embed(texts);
    if (vectors.size() != texts.size()) {
        throw ProtocolError(fmt::format("embed: asked for {} vectors, got {}", texts.size(),
                                        vectors.size()));
    }
    for (const auto& v : vectors) {
        if (v.dim() != vectors.front().dim()) {
            throw ProtocolError("embed: vectors in one batch differ in dim");
        }
    }
    return vectors;
}

std::vector<double> CrossScorer::cross_score(std::string_view query,
                                             std::span<const std::string> passages) {
    if (passages.empty()) throw ValidationError("cross_score: no passages given");
    auto scores = do_cross_score(query, passages);
    if (scores.size() != passages.size()) {
        throw ProtocolError(fmt::format("cross_score: asked for {} scores, got {}",
                                        passages.size(), scores.size()));
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw ProtocolError("cross_score: non-finite score");
    }
    return scores;
}

std::string Completer::complete(const CompletionRequest& request) {
    request.validate();
    std::string text = do_complete(request);
    if (trim(text).empty()) throw EmptyCompletionError();
    return text;
}

}  // namespace kgrank
