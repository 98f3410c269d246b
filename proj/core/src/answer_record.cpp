#include "kgrank/pipeline.hpp"

namespace kgrank {

using nlohmann::json;

namespace {

json ranked_to_json(const std::vector<RankedTriple>& ranked) {
    json out = json::array();
    for (const auto& r : ranked) {
        out.push_back({{"triple", r.triple}, {"score", r.score}, {"rank", r.rank}});
    }
    return out;
}

std::vector<RankedTriple> ranked_from_json(const json& j) {
    std::vector<RankedTriple> out;
    for (const auto& r : j) {
        out.push_back(RankedTriple{triple_from_json(r.at("triple")), r.at("score").get<double>(),
                                   r.at("rank").get<std::size_t>()});
    }
    return out;
}

}  // namespace

json to_json(const AnswerRecord& record, bool include_timings) {
    json j = {{"question_id", record.question_id},
              {"question", record.question},
              {"mentions", record.mentions},
              {"concepts", record.concepts},
              {"retrieved_count", record.retrieved_count},
              {"ranked", ranked_to_json(record.ranked)},
              {"selected", ranked_to_json(record.selected)},
              {"expansion", record.expansion},
              {"prompt", record.prompt},
              {"answer", record.answer},
              {"flags", record.flags},
              {"warnings", record.warnings},
              {"config_snapshot", record.config_snapshot}};
    if (include_timings) {
        json timings = json::array();
        for (const auto& t : record.timings) timings.push_back({{"stage", t.stage}, {"millis", t.millis}});
        j["timings"] = std::move(timings);
    }
    return j;
}

AnswerRecord answer_record_from_json(const json& j) {
    AnswerRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.mentions = j.at("mentions").get<std::vector<std::string>>();
    for (const auto& c : j.at("concepts")) r.concepts.push_back(concept_from_json(c));
    r.retrieved_count = j.at("retrieved_count").get<std::size_t>();
    r.ranked = ranked_from_json(j.at("ranked"));
    r.selected = ranked_from_json(j.at("selected"));
    r.expansion = j.value("expansion", std::string());
    r.prompt = j.at("prompt").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.flags = j.value("flags", std::vector<std::string>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.config_snapshot = j.value("config_snapshot", json::object());
    if (j.contains("timings")) {
        for (const auto& t : j.at("timings")) {
            r.timings.push_back(StageTiming{t.at("stage").get<std::string>(), t.at("millis").get<double>()});
        }
    }
    return r;
}

std::string serialize_record(const AnswerRecord& record) {
    return to_json(record).dump(2) + "\n";
}

}  // namespace kgrank
