#include "kgrank/kg_client.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "kgrank/cassette.hpp"
#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

namespace {

json descriptor_json(const RequestDescriptor& d) {
    return {{"source", std::string(to_string(d.source))},
            {"operation", d.operation},
            {"params", d.params}};
}

std::vector<Triple> one_hop_only(const ConceptRef& entity, KgSource source,
                                 std::vector<Triple> triples, std::size_t limit) {
    std::vector<Triple> out;
    for (auto& t : triples) {
        if (out.size() >= limit) break;
        if (t.source() != source) continue;
        bool as_head = t.head().id() == entity.id();
        bool as_tail = t.tail().id() == entity.id();
        if (as_head == as_tail) continue;  // unrelated, or a self loop
        bool seen = std::any_of(out.begin(), out.end(),
                                [&](const Triple& o) { return o.same_fact(t); });
        if (!seen) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

std::string cache_key(const RequestDescriptor& descriptor) {
    return sha256_hex(canonicalize(descriptor_json(descriptor)).dump());
}

std::optional<ConceptRef> pick_top_hit(std::span<const SearchHit> hits) {
    const SearchHit* best = nullptr;
    for (const auto& hit : hits) {
        if (!hit.score) continue;
        if (best == nullptr || *hit.score > *best->score ||
            (*hit.score == *best->score && hit.entity.id() < best->entity.id())) {
            best = &hit;
        }
    }
    if (best != nullptr) return best->entity;
    if (!hits.empty()) return hits.front().entity;
    return std::nullopt;
}

KgClient::KgClient(std::shared_ptr<KgBackend> backend, KgSource source, KgClientOptions options)
    : backend_(std::move(backend)), source_(source), options_(std::move(options)) {
    if (options_.fixtures_only && options_.cache_dir.empty()) {
        throw ConfigError("fixture mode needs a fixture directory");
    }
    if (!options_.fixtures_only && !backend_) {
        throw ConfigError("a KG backend is required outside fixture mode");
    }
    if (backend_ && backend_->source() != source_) {
        throw ConfigError(fmt::format("backend serves {}, client configured for {}",
                                      to_string(backend_->source()), to_string(source_)));
    }
}

std::filesystem::path KgClient::cache_file(const std::string& key) const {
    return options_.cache_dir / std::string(to_string(source_)) / (key + ".json");
}

json KgClient::cached(const RequestDescriptor& descriptor, const std::function<json()>& fetch) {
    const std::string key = cache_key(descriptor);
    const bool use_cache = !options_.cache_dir.empty();
    const auto path = use_cache ? cache_file(key) : std::filesystem::path{};

    if (use_cache && std::filesystem::exists(path)) {
        try {
            return json::parse(read_file(path)).at("response");
        } catch (const json::exception& e) {
            throw ProtocolError(fmt::format("corrupt KG cache file {}: {}", path.string(), e.what()));
        }
    }
    if (options_.fixtures_only) {
        throw NotFoundError(fmt::format("KG fixture miss: {} {} (expected {})",
                                        descriptor.operation, descriptor.params.dump(),
                                        path.string()));
    }

    std::promise<json> promise;
    std::shared_future<json> future;
    bool leader = false;
    {
        std::lock_guard lock(inflight_mutex_);
        auto it = inflight_.find(key);
        if (it != inflight_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            inflight_.emplace(key, future);
            leader = true;
        }
    }
    if (!leader) return future.get();

    try {
        json response = fetch();
        if (use_cache) {
            json doc = {{"request", descriptor_json(descriptor)},
                        {"response", response},
                        {"fetched_at", iso8601_now()}};
            write_file_atomic(path, doc.dump(2) + "\n");
        }
        promise.set_value(response);
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(key);
    }
    return future.get();
}

std::optional<ConceptRef> KgClient::map_entity(std::string_view mention) {
    const std::string clean = collapse_whitespace(mention);
    if (clean.empty()) throw ValidationError("map_entity: empty mention");

    RequestDescriptor descriptor{source_, "search", {{"mention", clean}}};
    json response = cached(descriptor, [&] {
        json hits = json::array();
        for (const auto& hit : backend_->search(clean)) {
            json h = {{"id", hit.entity.id()}, {"name", hit.entity.preferred_name()}};
            if (hit.score) h["score"] = *hit.score;
            hits.push_back(std::move(h));
        }
        return json{{"hits", std::move(hits)}};
    });

    std::vector<SearchHit> hits;
    try {
        for (const auto& h : response.at("hits")) {
            std::optional<double> score;
            if (h.contains("score")) score = h.at("score").get<double>();
            hits.push_back(SearchHit{
                ConceptRef(h.at("id").get<std::string>(), h.at("name").get<std::string>(), source_),
                score});
        }
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("malformed search payload: {}", e.what()));
    }
    return pick_top_hit(hits);
}

std::vector<Triple> KgClient::fetch_one_hop(const ConceptRef& entity, std::size_t limit) {
    if (limit == 0) throw ValidationError("fetch_one_hop: limit must be >= 1");
    if (entity.source() != source_) {
        throw ValidationError(fmt::format("concept {} is from {}, client serves {}", entity.id(),
                                          to_string(entity.source()), to_string(source_)));
    }
    RequestDescriptor descriptor{source_, "one_hop", {{"id", entity.id()}, {"limit", limit}}};
    json response = cached(descriptor, [&] {
        auto triples = one_hop_only(entity, source_, backend_->relations(entity, limit), limit);
        return json{{"triples", triples}};
    });

    std::vector<Triple> triples;
    try {
        for (const auto& t : response.at("triples")) triples.push_back(triple_from_json(t));
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("malformed one-hop payload: {}", e.what()));
    }
    return one_hop_only(entity, source_, std::move(triples), limit);
}

}  // namespace kgrank
