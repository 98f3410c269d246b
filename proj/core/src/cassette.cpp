#include "kgrank/cassette.hpp"

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

namespace {

std::string preview(std::string_view text) {
    constexpr std::size_t kMax = 60;
    std::string flat = collapse_whitespace(text);
    if (flat.size() > kMax) flat = flat.substr(0, kMax) + "...";
    return flat;
}

json embed_request(const std::string& model, const std::string& text) {
    return {{"model", model}, {"text", text}};
}

json cross_request(const std::string& model, std::string_view query, const std::string& passage) {
    return {{"model", model}, {"query", std::string(query)}, {"passage", passage}};
}

json complete_request(const CompletionRequest& r) {
    return {{"model", r.model_id},
            {"prompt", r.prompt},
            {"temperature", r.temperature},
            {"max_tokens", r.max_tokens}};
}

}  // namespace

json canonicalize(const json& value) {
    switch (value.type()) {
        case json::value_t::string:
            return collapse_whitespace(value.get_ref<const std::string&>());
        case json::value_t::array: {
            json out = json::array();
            for (const auto& item : value) out.push_back(canonicalize(item));
            return out;
        }
        case json::value_t::object: {
            // nlohmann's default object is a std::map, so keys come out sorted.
            json out = json::object();
            for (const auto& [k, v] : value.items()) out[k] = canonicalize(v);
            return out;
        }
        default:
            return value;
    }
}

std::string fingerprint(ProviderKind kind, const json& request) {
    json doc = {{"kind", std::string(to_string(kind))}, {"request", canonicalize(request)}};
    return sha256_hex(doc.dump());
}

Cassette::Cassette(ProviderKind kind, std::filesystem::path file)
    : kind_(kind), file_(std::move(file)) {}

std::shared_ptr<Cassette> Cassette::open(ProviderKind kind, const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) {
        throw ConfigError(fmt::format("cassette {} does not exist", file.string()));
    }
    json doc;
    try {
        doc = json::parse(read_file(file));
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("cassette {}: {}", file.string(), e.what()));
    }
    auto stored_kind = doc.value("provider_kind", std::string());
    if (stored_kind != to_string(kind)) {
        throw ConfigError(fmt::format("cassette {} holds '{}', expected '{}'", file.string(),
                                      stored_kind, to_string(kind)));
    }
    auto cassette = std::make_shared<Cassette>(kind, file);
    const json entries = doc.value("entries", json::object());
    for (const auto& [fp, entry] : entries.items()) {
        cassette->entries_[fp] = Entry{entry.at("request"), entry.at("response")};
    }
    return cassette;
}

std::shared_ptr<Cassette> Cassette::open_or_create(ProviderKind kind,
                                                   const std::filesystem::path& file) {
    if (std::filesystem::exists(file)) return open(kind, file);
    return std::make_shared<Cassette>(kind, file);
}

std::size_t Cassette::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::optional<json> Cassette::find(const std::string& fp) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(fp);
    if (it == entries_.end()) return std::nullopt;
    return it->second.response;
}

void Cassette::put(const std::string& fp, json request, json response) {
    std::unique_lock lock(mutex_);
    entries_[fp] = Entry{std::move(request), std::move(response)};
}

json Cassette::to_json() const {
    std::shared_lock lock(mutex_);
    json entries = json::object();
    for (const auto& [fp, entry] : entries_) {
        entries[fp] = {{"request", entry.request}, {"response", entry.response}};
    }
    return {{"provider_kind", std::string(to_string(kind_))}, {"entries", std::move(entries)}};
}

void Cassette::save() const {
    if (file_.empty()) return;
    std::lock_guard lock(save_mutex_);
    write_file_atomic(file_, to_json().dump(2) + "\n");
}

std::filesystem::path cassette_path(const std::filesystem::path& dir, ProviderKind kind) {
    return dir / (std::string(to_string(kind)) + ".json");
}

ReplayEmbedder::ReplayEmbedder(std::shared_ptr<const Cassette> cassette, std::string model)
    : cassette_(std::move(cassette)), model_(std::move(model)) {}

std::vector<Vector> ReplayEmbedder::do_embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto hit = cassette_->find(fingerprint(ProviderKind::embed, embed_request(model_, text)));
        if (!hit) {
            throw CassetteMiss(fmt::format("cassette miss: embed '{}' (model '{}')", preview(text),
                                           model_));
        }
        out.emplace_back(hit->at("vector").get<std::vector<double>>());
    }
    return out;
}

RecordingEmbedder::RecordingEmbedder(std::shared_ptr<Embedder> live,
                                     std::shared_ptr<Cassette> cassette)
    : live_(std::move(live)), cassette_(std::move(cassette)) {}

std::vector<Vector> RecordingEmbedder::do_embed(std::span<const std::string> texts) {
    const std::string model = live_->model_id();
    std::vector<std::optional<Vector>> slots(texts.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_index;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto hit = cassette_->find(fingerprint(ProviderKind::embed, embed_request(model, texts[i])))) {
            slots[i].emplace(hit->at("vector").get<std::vector<double>>());
        } else {
            missing.push_back(texts[i]);
            missing_index.push_back(i);
        }
    }
    if (!missing.empty()) {
        auto fresh = live_->embed(missing);
        for (std::size_t j = 0; j < fresh.size(); ++j) {
            json request = embed_request(model, missing[j]);
            std::vector<double> comps(fresh[j].components().begin(), fresh[j].components().end());
            cassette_->put(fingerprint(ProviderKind::embed, request), request, {{"vector", comps}});
            slots[missing_index[j]].emplace(std::move(fresh[j]));
        }
        cassette_->save();
    }
    std::vector<Vector> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

ReplayCrossScorer::ReplayCrossScorer(std::shared_ptr<const Cassette> cassette, std::string model)
    : cassette_(std::move(cassette)), model_(std::move(model)) {}

std::vector<double> ReplayCrossScorer::do_cross_score(std::string_view query,
                                                      std::span<const std::string> passages) {
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& passage : passages) {
        auto hit = cassette_->find(
            fingerprint(ProviderKind::cross_score, cross_request(model_, query, passage)));
        if (!hit) {
            throw CassetteMiss(fmt::format("cassette miss: cross_score '{}' / '{}'",
                                           preview(query), preview(passage)));
        }
        out.push_back(hit->at("score").get<double>());
    }
    return out;
}

RecordingCrossScorer::RecordingCrossScorer(std::shared_ptr<CrossScorer> live,
                                           std::shared_ptr<Cassette> cassette)
    : live_(std::move(live)), cassette_(std::move(cassette)) {}

std::vector<double> RecordingCrossScorer::do_cross_score(std::string_view query,
                                                         std::span<const std::string> passages) {
    const std::string model = live_->model_id();
    std::vector<std::optional<double>> slots(passages.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_index;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        auto fp = fingerprint(ProviderKind::cross_score, cross_request(model, query, passages[i]));
        if (auto hit = cassette_->find(fp)) {
            slots[i] = hit->at("score").get<double>();
        } else {
            missing.push_back(passages[i]);
            missing_index.push_back(i);
        }
    }
    if (!missing.empty()) {
        auto fresh = live_->cross_score(query, missing);
        for (std::size_t j = 0; j < fresh.size(); ++j) {
            json request = cross_request(model, query, missing[j]);
            cassette_->put(fingerprint(ProviderKind::cross_score, request), request,
                           {{"score", fresh[j]}});
            slots[missing_index[j]] = fresh[j];
        }
        cassette_->save();
    }
    std::vector<double> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(*slot);
    return out;
}

ReplayCompleter::ReplayCompleter(std::shared_ptr<const Cassette> cassette)
    : cassette_(std::move(cassette)) {}

std::string ReplayCompleter::do_complete(const CompletionRequest& request) {
    auto hit = cassette_->find(fingerprint(ProviderKind::complete, complete_request(request)));
    if (!hit) {
        throw CassetteMiss(fmt::format("cassette miss: complete '{}' (model '{}')",
                                       preview(request.prompt), request.model_id));
    }
    return hit->at("text").get<std::string>();
}

RecordingCompleter::RecordingCompleter(std::shared_ptr<Completer> live,
                                       std::shared_ptr<Cassette> cassette)
    : live_(std::move(live)), cassette_(std::move(cassette)) {}

std::string RecordingCompleter::do_complete(const CompletionRequest& request) {
    json req = complete_request(request);
    auto fp = fingerprint(ProviderKind::complete, req);
    if (auto hit = cassette_->find(fp)) return hit->at("text").get<std::string>();

    // Empty completions are recorded too, so a replay fails the same way.
    std::string text;
    try {
        text = live_->complete(request);
    } catch (const EmptyCompletionError&) {
        text.clear();
    }
    cassette_->put(fp, std::move(req), {{"text", text}});
    cassette_->save();
    return text;
}

}  // namespace kgrank
