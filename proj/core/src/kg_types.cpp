#include "kgrank/kg_types.hpp"

#include <fmt/format.h>

#include "kgrank/errors.hpp"

namespace kgrank {

std::string_view to_string(KgSource source) {
    switch (source) {
        case KgSource::umls: return "umls";
        case KgSource::dbpedia: return "dbpedia";
    }
    return "unknown";
}

KgSource kg_source_from_string(std::string_view name) {
    if (name == "umls") return KgSource::umls;
    if (name == "dbpedia") return KgSource::dbpedia;
    throw ValidationError(fmt::format("unknown KG source '{}' (expected umls or dbpedia)", name));
}

ConceptRef::ConceptRef(std::string id, std::string preferred_name, KgSource source)
    : id_(std::move(id)), preferred_name_(std::move(preferred_name)), source_(source) {
    if (id_.empty()) throw ValidationError("concept id is empty");
}

Triple::Triple(ConceptRef head, std::string relation, ConceptRef tail)
    : head_(std::move(head)), relation_(std::move(relation)), tail_(std::move(tail)) {
    if (relation_.empty()) throw ValidationError("triple relation is empty");
    if (head_.source() != tail_.source()) {
        throw ValidationError(fmt::format("triple mixes sources ({} head, {} tail)",
                                          to_string(head_.source()), to_string(tail_.source())));
    }
}

bool Triple::same_fact(const Triple& other) const noexcept {
    return head_.id() == other.head_.id() && relation_ == other.relation_ &&
           tail_.id() == other.tail_.id();
}

void to_json(nlohmann::json& j, const ConceptRef& c) {
    j = {{"id", c.id()}, {"name", c.preferred_name()}, {"source", std::string(to_string(c.source()))}};
}

ConceptRef concept_from_json(const nlohmann::json& j) {
    return ConceptRef(j.at("id").get<std::string>(), j.at("name").get<std::string>(),
                      kg_source_from_string(j.at("source").get<std::string>()));
}

void to_json(nlohmann::json& j, const Triple& t) {
    j = {{"head", t.head()},
         {"relation", t.relation()},
         {"tail", t.tail()},
         {"source", std::string(to_string(t.source()))}};
}

Triple triple_from_json(const nlohmann::json& j) {
    return Triple(concept_from_json(j.at("head")), j.at("relation").get<std::string>(),
                  concept_from_json(j.at("tail")));
}

}  // namespace kgrank
