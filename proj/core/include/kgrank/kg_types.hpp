#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace kgrank {

enum class KgSource { umls, dbpedia };

std::string_view to_string(KgSource source);
KgSource kg_source_from_string(std::string_view name);

/// A resolved KG entity: a UMLS CUI or a DBpedia resource IRI.
class ConceptRef {
public:
    ConceptRef(std::string id, std::string preferred_name, KgSource source);

    const std::string& id() const noexcept { return id_; }
    const std::string& preferred_name() const noexcept { return preferred_name_; }
    KgSource source() const noexcept { return source_; }

    friend bool operator==(const ConceptRef&, const ConceptRef&) = default;

private:
    std::string id_;
    std::string preferred_name_;
    KgSource source_;
};

/// (head, relation, tail). Both endpoints come from the same source.
class Triple {
public:
    Triple(ConceptRef head, std::string relation, ConceptRef tail);

    const ConceptRef& head() const noexcept { return head_; }
    const std::string& relation() const noexcept { return relation_; }
    const ConceptRef& tail() const noexcept { return tail_; }
    KgSource source() const noexcept { return head_.source(); }

    /// Same head id, relation and tail id.
    bool same_fact(const Triple& other) const noexcept;

    friend bool operator==(const Triple&, const Triple&) = default;

private:
    ConceptRef head_;
    std::string relation_;
    ConceptRef tail_;
};

void to_json(nlohmann::json& j, const ConceptRef& c);
ConceptRef concept_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Triple& t);
Triple triple_from_json(const nlohmann::json& j);

}  // namespace kgrank
