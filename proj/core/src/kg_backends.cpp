#include <algorithm>
#include <regex>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/kg_client.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

namespace {

json parse_payload(const HttpResponse& response, std::string_view what) {
    try {
        return json::parse(response.body);
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("{}: invalid JSON: {}", what, e.what()));
    }
}

std::string last_segment(std::string_view iri) {
    auto cut = iri.find_last_of("/#");
    return std::string(cut == std::string_view::npos ? iri : iri.substr(cut + 1));
}

std::string name_from_iri(std::string_view iri) {
    std::string name = last_segment(iri);
    std::replace(name.begin(), name.end(), '_', ' ');
    return name;
}

std::string strip_tags(std::string_view text) {
    static const std::regex tag("<[^>]*>");
    return std::regex_replace(std::string(text), tag, "");
}

/// Lookup fields arrive either as a string or as a one-element array.
std::string first_string(const json& field) {
    if (field.is_array()) return field.empty() ? std::string() : first_string(field.front());
    if (field.is_string()) return field.get<std::string>();
    if (field.is_number()) return field.dump();
    return {};
}

}  // namespace

UmlsBackend::UmlsBackend(Options options)
    : options_(std::move(options)), client_(options_.base_url) {
    if (options_.api_key.empty()) throw ConfigError("UMLS access needs an API key");
}

std::vector<SearchHit> UmlsBackend::search(std::string_view mention) {
    auto path = fmt::format("/rest/search/{}?string={}&pageSize=25&apiKey={}", options_.version,
                            url_encode(mention), url_encode(options_.api_key));
    auto response = send_with_retry(options_.retry, [&] { return client_.get(path); });
    if (response.status != 200) {
        throw ProviderError(fmt::format("UMLS search answered HTTP {}", response.status));
    }
    json doc = parse_payload(response, "UMLS search");
    std::vector<SearchHit> hits;
    try {
        for (const auto& r : doc.at("result").at("results")) {
            auto ui = r.at("ui").get<std::string>();
            if (ui == "NONE") continue;
            hits.push_back(SearchHit{ConceptRef(ui, r.value("name", ui), KgSource::umls), std::nullopt});
        }
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("UMLS search: unexpected payload: {}", e.what()));
    }
    return hits;
}

std::vector<Triple> UmlsBackend::relations(const ConceptRef& entity, std::size_t limit) {
    std::vector<Triple> triples;
    const std::size_t page_size = std::min(limit, std::max<std::size_t>(options_.page_size, 1));
    for (std::size_t page = 1; triples.size() < limit; ++page) {
        auto path = fmt::format("/rest/content/{}/CUI/{}/relations?pageSize={}&pageNumber={}&apiKey={}",
                                options_.version, url_encode(entity.id()), page_size, page,
                                url_encode(options_.api_key));
        auto response = send_with_retry(options_.retry, [&] { return client_.get(path); });
        if (response.status == 404) {
            if (page == 1) throw NotFoundError(fmt::format("UMLS has no concept {}", entity.id()));
            break;  // ran past the last page
        }
        if (response.status != 200) {
            throw ProviderError(fmt::format("UMLS relations answered HTTP {}", response.status));
        }
        json doc = parse_payload(response, "UMLS relations");
        std::size_t page_count = 1;
        try {
            page_count = doc.value("pageCount", std::size_t{1});
            for (const auto& r : doc.at("result")) {
                if (triples.size() >= limit) break;
                std::string label = r.value("additionalRelationLabel", std::string());
                if (label.empty()) label = r.at("relationLabel").get<std::string>();
                std::string related_id = last_segment(r.at("relatedId").get<std::string>());
                std::string related_name = r.value("relatedIdName", related_id);
                triples.emplace_back(entity, std::move(label),
                                     ConceptRef(std::move(related_id), std::move(related_name),
                                                KgSource::umls));
            }
        } catch (const json::exception& e) {
            throw ProtocolError(fmt::format("UMLS relations: unexpected payload: {}", e.what()));
        }
        if (page >= page_count) break;
    }
    return triples;
}

DbpediaBackend::DbpediaBackend(Options options)
    : options_(std::move(options)), lookup_(options_.lookup_url), sparql_(options_.sparql_url) {}

std::vector<SearchHit> DbpediaBackend::search(std::string_view mention) {
    auto path = fmt::format("/api/search?query={}&format=json&maxResults={}", url_encode(mention),
                            options_.max_hits);
    auto response = send_with_retry(options_.retry, [&] {
        return lookup_.get(path, {{"Accept", "application/json"}});
    });
    if (response.status != 200) {
        throw ProviderError(fmt::format("DBpedia lookup answered HTTP {}", response.status));
    }
    json doc = parse_payload(response, "DBpedia lookup");
    std::vector<SearchHit> hits;
    try {
        for (const auto& d : doc.at("docs")) {
            std::string iri = first_string(d.at("resource"));
            if (iri.empty()) continue;
            std::string label = strip_tags(first_string(d.value("label", json())));
            if (label.empty()) label = name_from_iri(iri);
            std::optional<double> score;
            std::string raw_score = first_string(d.value("score", json()));
            if (!raw_score.empty()) {
                try {
                    score = std::stod(raw_score);
                } catch (const std::exception&) {
                    score.reset();
                }
            }
            hits.push_back(SearchHit{ConceptRef(iri, label, KgSource::dbpedia), score});
        }
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("DBpedia lookup: unexpected payload: {}", e.what()));
    }
    return hits;
}

std::string DbpediaBackend::relations_query(std::string_view resource_iri, std::size_t limit) {
    return fmt::format(
        "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n"
        "SELECT DISTINCT ?p ?o ?oLabel ?dir WHERE {{\n"
        "  {{ <{0}> ?p ?o . BIND(\"out\" AS ?dir) }}\n"
        "  UNION\n"
        "  {{ ?o ?p <{0}> . BIND(\"in\" AS ?dir) }}\n"
        "  FILTER(STRSTARTS(STR(?o), \"http://dbpedia.org/resource/\"))\n"
        "  FILTER(?p != <http://dbpedia.org/ontology/wikiPageWikiLink>)\n"
        "  OPTIONAL {{ ?o rdfs:label ?oLabel . FILTER(LANG(?oLabel) = \"en\") }}\n"
        "}} LIMIT {1}",
        resource_iri, limit);
}

std::vector<Triple> DbpediaBackend::relations(const ConceptRef& entity, std::size_t limit) {
    auto path = fmt::format("/sparql?query={}&format={}", url_encode(relations_query(entity.id(), limit)),
                            url_encode("application/sparql-results+json"));
    auto response = send_with_retry(options_.retry, [&] {
        return sparql_.get(path, {{"Accept", "application/sparql-results+json"}});
    });
    if (response.status == 404) throw NotFoundError(fmt::format("DBpedia has no {}", entity.id()));
    if (response.status != 200) {
        throw ProviderError(fmt::format("DBpedia SPARQL answered HTTP {}", response.status));
    }
    json doc = parse_payload(response, "DBpedia SPARQL");

    struct Row {
        std::string relation;
        ConceptRef other;
        bool outgoing;
    };
    std::vector<Row> rows;
    try {
        for (const auto& b : doc.at("results").at("bindings")) {
            std::string other_iri = b.at("o").at("value").get<std::string>();
            std::string other_name = b.contains("oLabel")
                                         ? b.at("oLabel").at("value").get<std::string>()
                                         : name_from_iri(other_iri);
            rows.push_back(Row{last_segment(b.at("p").at("value").get<std::string>()),
                               ConceptRef(other_iri, other_name, KgSource::dbpedia),
                               b.at("dir").at("value").get<std::string>() == "out"});
        }
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("DBpedia SPARQL: unexpected payload: {}", e.what()));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.relation, a.other.preferred_name(), a.other.id(), b.outgoing) <
               std::tie(b.relation, b.other.preferred_name(), b.other.id(), a.outgoing);
    });

    std::vector<Triple> triples;
    for (auto& row : rows) {
        if (triples.size() >= limit) break;
        if (row.outgoing) {
            triples.emplace_back(entity, row.relation, row.other);
        } else {
            triples.emplace_back(row.other, row.relation, entity);
        }
    }
    return triples;
}

MemoryGraphBackend MemoryGraphBackend::from_json(const json& graph) {
    MemoryGraphBackend backend(kg_source_from_string(graph.value("source", std::string("umls"))));
    try {
        for (const auto& c : graph.at("concepts")) {
            backend.nodes_.push_back(
                Node{ConceptRef(c.at("id").get<std::string>(), c.at("name").get<std::string>(),
                                backend.source_),
                     c.value("aliases", std::vector<std::string>{})});
        }
        auto lookup = [&](const std::string& id) -> const ConceptRef& {
            for (const auto& n : backend.nodes_) {
                if (n.entity.id() == id) return n.entity;
            }
            throw ValidationError(fmt::format("graph triple references unknown concept {}", id));
        };
        for (const auto& t : graph.at("triples")) {
            backend.triples_.emplace_back(lookup(t.at(0).get<std::string>()), t.at(1).get<std::string>(),
                                          lookup(t.at(2).get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("malformed graph: {}", e.what()));
    }
    return backend;
}

MemoryGraphBackend MemoryGraphBackend::from_file(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<SearchHit> MemoryGraphBackend::search(std::string_view mention) {
    ++*search_calls_;
    const std::string needle = to_lower(collapse_whitespace(mention));
    std::vector<SearchHit> hits;
    for (const auto& node : nodes_) {
        double score = 0.0;
        std::vector<std::string> names = node.aliases;
        names.push_back(node.entity.preferred_name());
        for (const auto& name : names) {
            std::string hay = to_lower(name);
            if (hay == needle) {
                score = std::max(score, 1.0);
            } else if (!needle.empty() && hay.find(needle) != std::string::npos) {
                score = std::max(score, 0.5);
            }
        }
        if (score > 0.0) hits.push_back(SearchHit{node.entity, score});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (*a.score != *b.score) return *a.score > *b.score;
        return a.entity.id() < b.entity.id();
    });
    return hits;
}

std::vector<Triple> MemoryGraphBackend::relations(const ConceptRef& entity, std::size_t limit) {
    ++*relation_calls_;
    bool known = std::any_of(nodes_.begin(), nodes_.end(),
                             [&](const Node& n) { return n.entity.id() == entity.id(); });
    if (!known) throw NotFoundError(fmt::format("graph has no concept {}", entity.id()));
    std::vector<Triple> out;
    for (const auto& t : triples_) {
        if (out.size() >= limit) break;
        if (t.head().id() == entity.id() || t.tail().id() == entity.id()) out.push_back(t);
    }
    return out;
}

}  // namespace kgrank
