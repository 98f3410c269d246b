#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgrank/http_transport.hpp"
#include "kgrank/kg_types.hpp"

namespace kgrank {

struct SearchHit {
    ConceptRef entity;
    std::optional<double> score;
};

/// One knowledge graph behind a uniform search + one-hop interface.
class KgBackend {
public:
    virtual ~KgBackend() = default;

    virtual KgSource source() const = 0;
    /// Hits in the backend's own ranking order. Empty when nothing matches.
    virtual std::vector<SearchHit> search(std::string_view mention) = 0;
    /// Up to `limit` triples touching `entity`, in backend order.
    /// NotFoundError when the backend does not know the entity.
    virtual std::vector<Triple> relations(const ConceptRef& entity, std::size_t limit) = 0;
};

/// UMLS Terminology Services REST API (search + CUI relations).
class UmlsBackend final : public KgBackend {
public:
    struct Options {
        std::string api_key;
        std::string base_url = "https://uts-ws.nlm.nih.gov";
        std::string version = "current";
        std::size_t page_size = 200;
        RetryPolicy retry;
    };

    explicit UmlsBackend(Options options);

    KgSource source() const override { return KgSource::umls; }
    std::vector<SearchHit> search(std::string_view mention) override;
    std::vector<Triple> relations(const ConceptRef& entity, std::size_t limit) override;

private:
    Options options_;
    HttpClient client_;
};

/// DBpedia Lookup for search and the public SPARQL endpoint for relations.
/// SPARQL rows carry no order, so relations are sorted by
/// (relation, other endpoint name, other endpoint id).
class DbpediaBackend final : public KgBackend {
public:
    struct Options {
        std::string lookup_url = "https://lookup.dbpedia.org";
        std::string sparql_url = "https://dbpedia.org";
        std::size_t max_hits = 10;
        RetryPolicy retry;
    };

    explicit DbpediaBackend(Options options);

    KgSource source() const override { return KgSource::dbpedia; }
    std::vector<SearchHit> search(std::string_view mention) override;
    std::vector<Triple> relations(const ConceptRef& entity, std::size_t limit) override;

    /// Query text sent for one-hop relations of `resource_iri`.
    static std::string relations_query(std::string_view resource_iri, std::size_t limit);

private:
    Options options_;
    HttpClient lookup_;
    HttpClient sparql_;
};

/// Small in-memory graph, loaded from {"source": str, "concepts": [{"id",
/// "name", "aliases"?}], "triples": [[head_id, relation, tail_id]]}.
/// Serves tests and offline fixture generation.
class MemoryGraphBackend final : public KgBackend {
public:
    static MemoryGraphBackend from_json(const nlohmann::json& graph);
    static MemoryGraphBackend from_file(const std::filesystem::path& path);

    KgSource source() const override { return source_; }
    std::vector<SearchHit> search(std::string_view mention) override;
    std::vector<Triple> relations(const ConceptRef& entity, std::size_t limit) override;

    std::size_t search_calls() const noexcept { return search_calls_->load(); }
    std::size_t relation_calls() const noexcept { return relation_calls_->load(); }

private:
    struct Node {
        ConceptRef entity;
        std::vector<std::string> aliases;
    };

    explicit MemoryGraphBackend(KgSource source) : source_(source) {}

    KgSource source_;
    std::vector<Node> nodes_;
    std::vector<Triple> triples_;
    std::shared_ptr<std::atomic<std::size_t>> search_calls_ =
        std::make_shared<std::atomic<std::size_t>>(0);
    std::shared_ptr<std::atomic<std::size_t>> relation_calls_ =
        std::make_shared<std::atomic<std::size_t>>(0);
};

/// Everything that identifies a backend request.
struct RequestDescriptor {
    KgSource source;
    std::string operation;  ///< "search" or "one_hop"
    nlohmann::json params;
};

/// sha256 of the canonical descriptor; whitespace inside string params is
/// collapsed first.
std::string cache_key(const RequestDescriptor& descriptor);

/// Chooses the mapping target from search hits: highest score wins, ties
/// by smallest id; hits without a score rank after scored ones and keep
/// backend order.
std::optional<ConceptRef> pick_top_hit(std::span<const SearchHit> hits);

struct KgClientOptions {
    /// <cache_dir>/<source>/<key>.json. Empty disables the cache.
    std::filesystem::path cache_dir;
    /// Serve only from cache_dir; a miss is a NotFoundError.
    bool fixtures_only = false;
};

/// Read-through cached access to one KG source. Concurrent requests for the
/// same key share a single backend call.
class KgClient {
public:
    /// `backend` may be null in fixtures-only mode.
    KgClient(std::shared_ptr<KgBackend> backend, KgSource source, KgClientOptions options);

    KgSource source() const noexcept { return source_; }

    std::optional<ConceptRef> map_entity(std::string_view mention);

    /// Triples with `entity` as exactly one endpoint, at most `limit`,
    /// same-source only, duplicates removed, backend order kept.
    std::vector<Triple> fetch_one_hop(const ConceptRef& entity, std::size_t limit);

    std::filesystem::path cache_file(const std::string& key) const;

private:
    nlohmann::json cached(const RequestDescriptor& descriptor,
                          const std::function<nlohmann::json()>& fetch);

    std::shared_ptr<KgBackend> backend_;
    KgSource source_;
    KgClientOptions options_;
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<nlohmann::json>> inflight_;
};

}  // namespace kgrank
