#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgrank/providers.hpp"

namespace kgrank {

// Deterministic stand-ins for the model providers. They are pure functions
// of their input, which is what the offline fixtures and tests rely on.

/// Feature-hashing bag of words, L2-normalised. Weights are positive so the
/// vector is never zero.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dim = 32, std::string model = "mock-hash");
    std::string model_id() const override { return model_; }

protected:
    std::vector<Vector> do_embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
    std::string model_;
};

/// Shared-token count between query and passage, damped by passage length.
class OverlapCrossScorer final : public CrossScorer {
public:
    explicit OverlapCrossScorer(std::string model = "mock-overlap");
    std::string model_id() const override { return model_; }

protected:
    std::vector<double> do_cross_score(std::string_view query,
                                       std::span<const std::string> passages) override;

private:
    std::string model_;
};

/// Scripted LLM. The first rule whose `all` substrings occur in the prompt
/// answers; otherwise `fallback` answers, or ProviderError when unset.
///
/// Responses may contain `{facts:N}`, replaced by the first N "- " bullet
/// lines of the prompt joined with "; " (or "no facts" when there are none).
class RuleCompleter final : public Completer {
public:
    struct Rule {
        std::vector<std::string> all;
        std::string response;
    };

    RuleCompleter(std::vector<Rule> rules, std::optional<std::string> fallback);

    /// {"rules": [{"all": [str], "response": str}], "fallback": str?}
    static RuleCompleter from_file(const std::filesystem::path& path);

protected:
    std::string do_complete(const CompletionRequest& request) override;

private:
    std::vector<Rule> rules_;
    std::optional<std::string> fallback_;
};

}  // namespace kgrank
