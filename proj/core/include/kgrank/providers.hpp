#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrank {

/// Dense embedding. Always non-empty and finite.
class Vector {
public:
    explicit Vector(std::vector<double> components);

    std::size_t dim() const noexcept { return components_.size(); }
    std::span<const double> components() const noexcept { return components_; }
    double operator[](std::size_t i) const { return components_[i]; }

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> components_;
};

/// Temperature defaults to zero so generation is reproducible.
struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_id;

    /// Throws ValidationError on an empty prompt, negative temperature
    /// or non-positive max_tokens.
    void validate() const;
};

/// Model and decoding knobs for one kind of LLM call.
struct CompletionSettings {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;

    CompletionRequest request(std::string prompt) const;
};

enum class ProviderKind { embed, cross_score, complete };

std::string_view to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view name);

// The public entry points check the shared contract (input preconditions,
// one output per input, order preserved) and forward to the do_* hooks.
// Implementations must be safe to call from several threads at once.

class Embedder {
public:
    virtual ~Embedder() = default;

    /// One vector per text, all of the same dim. ProtocolError on a
    /// count or dim mismatch coming back from the implementation.
    std::vector<Vector> embed(std::span<const std::string> texts);

    virtual std::string model_id() const = 0;

protected:
    virtual std::vector<Vector> do_embed(std::span<const std::string> texts) = 0;
};

class CrossScorer {
public:
    virtual ~CrossScorer() = default;

    /// One finite relevance score per passage; higher is more relevant.
    std::vector<double> cross_score(std::string_view query,
                                    std::span<const std::string> passages);

    virtual std::string model_id() const = 0;

protected:
    virtual std::vector<double> do_cross_score(std::string_view query,
                                               std::span<const std::string> passages) = 0;
};

class Completer {
public:
    virtual ~Completer() = default;

    /// Throws EmptyCompletionError when the model produces no text.
    std::string complete(const CompletionRequest& request);

protected:
    virtual std::string do_complete(const CompletionRequest& request) = 0;
};

}  // namespace kgrank
