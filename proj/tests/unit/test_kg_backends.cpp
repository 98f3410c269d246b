#include <gtest/gtest.h>

#include <atomic>

#include "kgrank/errors.hpp"
#include "kgrank/kg_client.hpp"
#include "test_support.hpp"

using namespace kgrank;
using kgrank::testing::LocalServer;
using kgrank::testing::umls;
using nlohmann::json;

namespace {

json relation(const std::string& label, const std::string& extra, const std::string& cui, const std::string& name) {
    return {{"relationLabel", label},
            {"additionalRelationLabel", extra},
            {"relatedId", "https://uts-ws.nlm.nih.gov/rest/content/2024AA/CUI/" + cui},
            {"relatedIdName", name}};
}

class UmlsFake : public ::testing::Test {
protected:
    void SetUp() override {
        auto& s = server_.server();
        s.Get("/rest/search/current", [this](const httplib::Request& req, httplib::Response& res) {
            last_key_ = req.get_param_value("apiKey");
            const auto term = req.get_param_value("string");
            json results = json::array();
            if (term == "Myopia") {
                results.push_back({{"ui", "C0027092"}, {"name", "Myopia"}});
                results.push_back({{"ui", "C0271183"}, {"name", "Degenerative myopia"}});
            } else {
                results.push_back({{"ui", "NONE"}, {"name", "NO RESULTS"}});
            }
            res.set_content(json{{"result", {{"results", results}}}}.dump(), "application/json");
        });
        s.Get(R"(/rest/content/current/CUI/(\w+)/relations)",
              [this](const httplib::Request& req, httplib::Response& res) {
                  ++relation_calls_;
                  if (req.matches[1] != "C0027092") {
                      res.status = 404;
                      return;
                  }
                  const int page = std::stoi(req.get_param_value("pageNumber"));
                  json result = json::array();
                  if (page == 1) {
                      result.push_back(relation("RO", "clinically_associated_with", "C0020456", "HYPERGLYCEMIA"));
                      result.push_back(relation("PAR", "", "C0015397", "Eye Diseases"));
                  } else if (page == 2) {
                      result.push_back(relation("RO", "has_manifestation", "C0042789", "Vision"));
                  } else {
                      res.status = 404;
                      return;
                  }
                  res.set_content(json{{"pageCount", 2}, {"result", result}}.dump(), "application/json");
              });
        server_.start();
    }

    UmlsBackend backend() {
        UmlsBackend::Options o;
        o.api_key = "umls-key";
        o.base_url = server_.url();
        o.page_size = 2;
        o.retry.sleep = [](std::chrono::milliseconds) {};
        return UmlsBackend(o);
    }

    LocalServer server_;
    std::string last_key_;
    std::atomic<int> relation_calls_{0};
};

class DbpediaFake : public ::testing::Test {
protected:
    void SetUp() override {
        auto& s = server_.server();
        s.Get("/api/search", [](const httplib::Request& req, httplib::Response& res) {
            json docs = json::array();
            if (req.get_param_value("query") == "Berlin") {
                docs.push_back({{"resource", {"http://dbpedia.org/resource/Berlin_(band)"}},
                                {"label", {"<B>Berlin</B> (band)"}},
                                {"score", {"120.5"}}});
                docs.push_back({{"resource", {"http://dbpedia.org/resource/Berlin"}},
                                {"label", {"<B>Berlin</B>"}},
                                {"score", {"9001.0"}}});
            }
            res.set_content(json{{"docs", docs}}.dump(), "application/json");
        });
        s.Get("/sparql", [this](const httplib::Request& req, httplib::Response& res) {
            last_query_ = req.get_param_value("query");
            auto b = [](const std::string& p, const std::string& o, const std::string& dir, const char* label) {
                json row = {{"p", {{"type", "uri"}, {"value", p}}},
                            {"o", {{"type", "uri"}, {"value", o}}},
                            {"dir", {{"type", "literal"}, {"value", dir}}}};
                if (label != nullptr) row["oLabel"] = {{"type", "literal"}, {"value", label}};
                return row;
            };
            json bindings = json::array({
                b("http://dbpedia.org/ontology/country", "http://dbpedia.org/resource/Germany", "out", "Germany"),
                b("http://dbpedia.org/ontology/birthPlace", "http://dbpedia.org/resource/Marlene_Dietrich", "in",
                  nullptr),
                b("http://dbpedia.org/ontology/birthPlace", "http://dbpedia.org/resource/Alexander_von_Humboldt",
                  "in", "Alexander von Humboldt"),
            });
            res.set_content(json{{"results", {{"bindings", bindings}}}}.dump(), "application/sparql-results+json");
        });
        server_.start();
    }

    DbpediaBackend backend() {
        DbpediaBackend::Options o;
        o.lookup_url = server_.url();
        o.sparql_url = server_.url();
        o.retry.sleep = [](std::chrono::milliseconds) {};
        return DbpediaBackend(o);
    }

    LocalServer server_;
    std::string last_query_;
};

}  // namespace

TEST_F(UmlsFake, SearchSkipsNoneAndSendsKey) {
    auto b = backend();
    auto hits = b.search("Myopia");
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].entity.id(), "C0027092");
    EXPECT_FALSE(hits[0].score);
    EXPECT_EQ(last_key_, "umls-key");
    EXPECT_TRUE(b.search("zzqx-nonsense-token").empty());
}

TEST_F(UmlsFake, RelationsFollowPages) {
    auto b = backend();
    auto triples = b.relations(umls("C0027092", "Myopia"), 100);
    ASSERT_EQ(triples.size(), 3u);
    EXPECT_EQ(triples[0].relation(), "clinically_associated_with");
    EXPECT_EQ(triples[0].tail().id(), "C0020456");
    EXPECT_EQ(triples[0].tail().preferred_name(), "HYPERGLYCEMIA");
    EXPECT_EQ(triples[1].relation(), "PAR");  // falls back to the base label
    EXPECT_EQ(triples[2].tail().preferred_name(), "Vision");
    EXPECT_EQ(relation_calls_.load(), 2);
}

TEST_F(UmlsFake, RelationsRespectLimit) {
    auto b = backend();
    EXPECT_EQ(b.relations(umls("C0027092", "Myopia"), 1).size(), 1u);
    EXPECT_EQ(relation_calls_.load(), 1);
}

TEST_F(UmlsFake, UnknownConceptIsNotFound) {
    auto b = backend();
    EXPECT_THROW(b.relations(umls("C9999999", "x"), 10), NotFoundError);
}

TEST_F(UmlsFake, ThroughClientMapsFirstHit) {
    KgClient client(std::make_shared<UmlsBackend>(backend()), KgSource::umls, {});
    auto c = client.map_entity("Myopia");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->preferred_name(), "Myopia");
    EXPECT_FALSE(client.map_entity("zzqx-nonsense-token"));
}

TEST(UmlsBackend, NeedsApiKey) {
    EXPECT_THROW(UmlsBackend(UmlsBackend::Options{}), ConfigError);
}

TEST_F(DbpediaFake, SearchParsesScoresAndStripsMarkup) {
    auto b = backend();
    auto hits = b.search("Berlin");
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].entity.preferred_name(), "Berlin (band)");
    EXPECT_DOUBLE_EQ(*hits[1].score, 9001.0);
    EXPECT_EQ(pick_top_hit(hits)->id(), "http://dbpedia.org/resource/Berlin");
}

TEST_F(DbpediaFake, RelationsSortedWithDirection) {
    auto b = backend();
    ConceptRef berlin("http://dbpedia.org/resource/Berlin", "Berlin", KgSource::dbpedia);
    auto triples = b.relations(berlin, 10);
    ASSERT_EQ(triples.size(), 3u);
    // (relation, other name) order: birthPlace < country; Alexander < Marlene
    EXPECT_EQ(triples[0].relation(), "birthPlace");
    EXPECT_EQ(triples[0].head().preferred_name(), "Alexander von Humboldt");
    EXPECT_EQ(triples[0].tail(), berlin);
    EXPECT_EQ(triples[1].head().preferred_name(), "Marlene Dietrich");  // name from the IRI
    EXPECT_EQ(triples[2].relation(), "country");
    EXPECT_EQ(triples[2].head(), berlin);
    EXPECT_NE(last_query_.find("wikiPageWikiLink"), std::string::npos);
    EXPECT_NE(last_query_.find("LIMIT 10"), std::string::npos);
}

TEST(DbpediaBackend, QueryExcludesWikiLinks) {
    auto q = DbpediaBackend::relations_query("http://dbpedia.org/resource/Berlin", 5);
    EXPECT_NE(q.find("<http://dbpedia.org/resource/Berlin> ?p ?o"), std::string::npos);
    EXPECT_NE(q.find("FILTER(?p != <http://dbpedia.org/ontology/wikiPageWikiLink>)"), std::string::npos);
}
