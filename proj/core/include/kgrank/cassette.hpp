#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "kgrank/providers.hpp"

namespace kgrank {

/// Canonical form used for hashing: strings are whitespace-collapsed,
/// object keys are sorted.
nlohmann::json canonicalize(const nlohmann::json& value);

/// Stable across processes: sha256 over the canonical request.
std::string fingerprint(ProviderKind kind, const nlohmann::json& request);

/// Recorded request -> response map for one provider kind, persisted as a
/// single JSON file. Lookups may run concurrently with each other; writes
/// are serialized.
class Cassette {
public:
    explicit Cassette(ProviderKind kind, std::filesystem::path file = {});

    /// The file must exist and hold a cassette of the given kind.
    static std::shared_ptr<Cassette> open(ProviderKind kind, const std::filesystem::path& file);
    /// Starts empty when the file is absent.
    static std::shared_ptr<Cassette> open_or_create(ProviderKind kind,
                                                    const std::filesystem::path& file);

    ProviderKind kind() const noexcept { return kind_; }
    std::size_t size() const;

    std::optional<nlohmann::json> find(const std::string& fingerprint) const;
    void put(const std::string& fingerprint, nlohmann::json request, nlohmann::json response);

    /// Rewrites the backing file atomically. No-op without a path.
    void save() const;

    nlohmann::json to_json() const;

private:
    struct Entry {
        nlohmann::json request;
        nlohmann::json response;
    };

    ProviderKind kind_;
    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    mutable std::mutex save_mutex_;
    std::map<std::string, Entry> entries_;
};

/// File name for a provider kind inside a cassette directory.
std::filesystem::path cassette_path(const std::filesystem::path& dir, ProviderKind kind);

// Replay wrappers serve strictly from the cassette and throw CassetteMiss on
// anything unrecorded. Recording wrappers read through: hits come from the
// cassette, misses go to the live provider and are stored.
// Embeddings are keyed per text and cross scores per (query, passage), so a
// replay does not depend on how the original calls were batched.

class ReplayEmbedder final : public Embedder {
public:
    ReplayEmbedder(std::shared_ptr<const Cassette> cassette, std::string model);
    std::string model_id() const override { return model_; }

protected:
    std::vector<Vector> do_embed(std::span<const std::string> texts) override;

private:
    std::shared_ptr<const Cassette> cassette_;
    std::string model_;
};

class RecordingEmbedder final : public Embedder {
public:
    RecordingEmbedder(std::shared_ptr<Embedder> live, std::shared_ptr<Cassette> cassette);
    std::string model_id() const override { return live_->model_id(); }

protected:
    std::vector<Vector> do_embed(std::span<const std::string> texts) override;

private:
    std::shared_ptr<Embedder> live_;
    std::shared_ptr<Cassette> cassette_;
};

class ReplayCrossScorer final : public CrossScorer {
public:
    ReplayCrossScorer(std::shared_ptr<const Cassette> cassette, std::string model);
    std::string model_id() const override { return model_; }

protected:
    std::vector<double> do_cross_score(std::string_view query,
                                       std::span<const std::string> passages) override;

private:
    std::shared_ptr<const Cassette> cassette_;
    std::string model_;
};

class RecordingCrossScorer final : public CrossScorer {
public:
    RecordingCrossScorer(std::shared_ptr<CrossScorer> live, std::shared_ptr<Cassette> cassette);
    std::string model_id() const override { return live_->model_id(); }

protected:
    std::vector<double> do_cross_score(std::string_view query,
                                       std::span<const std::string> passages) override;

private:
    std::shared_ptr<CrossScorer> live_;
    std::shared_ptr<Cassette> cassette_;
};

class ReplayCompleter final : public Completer {
public:
    explicit ReplayCompleter(std::shared_ptr<const Cassette> cassette);

protected:
    std::string do_complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<const Cassette> cassette_;
};

class RecordingCompleter final : public Completer {
public:
    RecordingCompleter(std::shared_ptr<Completer> live, std::shared_ptr<Cassette> cassette);

protected:
    std::string do_complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<Completer> live_;
    std::shared_ptr<Cassette> cassette_;
};

}  // namespace kgrank
