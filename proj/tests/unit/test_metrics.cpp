#include <gtest/gtest.h>

#include <random>

#include "kgrank/errors.hpp"
#include "kgrank/metrics.hpp"
#include "oracles.hpp"

using namespace kgrank;

namespace {

AnswerRecord answer(std::string id, std::string text) {
    AnswerRecord r;
    r.question_id = std::move(id);
    r.answer = std::move(text);
    return r;
}

QAPair pair(std::string id, std::vector<std::string> refs) {
    QAPair p;
    p.id = std::move(id);
    p.question = "q";
    p.references = std::move(refs);
    return p;
}

}  // namespace

TEST(Rouge, Tokens) {
    EXPECT_EQ(rouge_tokens("The CAT,  sat"), (std::vector<std::string>{"the", "cat,", "sat"}));
}

TEST(RougeL, HandExamples) {
    auto s = rouge_l("a b", "a b c");
    EXPECT_DOUBLE_EQ(s.precision, 1.0);
    EXPECT_NEAR(s.recall, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(s.f1, 0.8, 1e-12);

    EXPECT_DOUBLE_EQ(rouge_l("same words here", "Same words HERE").f1, 1.0);
    EXPECT_DOUBLE_EQ(rouge_l("x y", "z w").f1, 0.0);
    EXPECT_DOUBLE_EQ(rouge_l("", "a").f1, 0.0);
    EXPECT_DOUBLE_EQ(rouge_l("a", "").f1, 0.0);

    // LCS "the cat on mat" = 4 of 6 and 4 of 5.
    auto t = rouge_l("the cat sat on the mat", "the cat lay on mat");
    EXPECT_NEAR(t.precision, 4.0 / 6.0, 1e-12);
    EXPECT_NEAR(t.recall, 4.0 / 5.0, 1e-12);
}

TEST(Lcs, MatchesBruteForce) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(0, 10), sym(0, 2);
    const std::vector<std::string> alphabet{"a", "b", "c"};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
        for (auto& x : a) x = alphabet[static_cast<std::size_t>(sym(rng))];
        for (auto& x : b) x = alphabet[static_cast<std::size_t>(sym(rng))];
        EXPECT_EQ(lcs_length(a, b), oracle::lcs_bruteforce(a, b));
        EXPECT_EQ(lcs_length(a, b), lcs_length(b, a));
    }
}

TEST(RougeN, ClippedCounts) {
    auto u = rouge_n("the the the", "the cat", 1);
    EXPECT_NEAR(u.precision, 1.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(u.recall, 0.5);
    auto b = rouge_n("a b c d", "a b x c d", 2);
    EXPECT_NEAR(b.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(b.recall, 2.0 / 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_n("a", "a", 2).f1, 0.0);
    EXPECT_THROW(rouge_n("a", "a", 3), ValidationError);
}

TEST(Prf, ZeroSumGivesZeroF1) {
    EXPECT_DOUBLE_EQ(Prf::from(0.0, 0.0).f1, 0.0);
    EXPECT_DOUBLE_EQ(Prf::from(0.5, 0.5).f1, 0.5);
}

TEST(EvaluateRun, MaxOverReferencesAndMeans) {
    std::vector<AnswerRecord> answers{answer("1", "a b"), answer("2", "x y")};
    std::vector<QAPair> pairs{pair("1", {"z", "a b c"}), pair("2", {"x y"}), pair("3", {"unused"})};
    std::vector<Metric> metrics{Metric::rouge_l};
    auto report = evaluate_run(answers, pairs, metrics);
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_NEAR(report.rows[0].prf.at(Metric::rouge_l).f1, 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(report.rows[1].prf.at(Metric::rouge_l).f1, 1.0);
    EXPECT_NEAR(report.mean_prf.at(Metric::rouge_l).f1, 0.9, 1e-12);
}

TEST(EvaluateRun, Accuracy) {
    std::vector<AnswerRecord> answers{answer("1", "It is Paris."), answer("2", "Rome")};
    std::vector<QAPair> pairs{pair("1", {"London", "Paris"}), pair("2", {"Paris"})};
    std::vector<Metric> metrics{Metric::accuracy};
    auto report = evaluate_run(answers, pairs, metrics);
    EXPECT_DOUBLE_EQ(report.rows[0].accuracy, 1.0);
    EXPECT_DOUBLE_EQ(report.rows[1].accuracy, 0.0);
    EXPECT_DOUBLE_EQ(report.mean_accuracy, 0.5);
}

TEST(EvaluateRun, Errors) {
    std::vector<Metric> metrics{Metric::rouge_l};
    std::vector<QAPair> pairs{pair("1", {"a"}), pair("2", {})};
    std::vector<AnswerRecord> stray{answer("9", "a")};
    try {
        evaluate_run(stray, pairs, metrics);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
    }
    std::vector<AnswerRecord> unlabeled{answer("2", "a")};
    EXPECT_THROW(evaluate_run(unlabeled, pairs, metrics), ValidationError);
    EXPECT_THROW(evaluate_run(std::vector<AnswerRecord>{}, pairs, metrics), ValidationError);
    std::vector<AnswerRecord> ok{answer("1", "a")};
    EXPECT_THROW(evaluate_run(ok, pairs, std::vector<Metric>{}), ValidationError);
}

TEST(Report, CsvWithOnlyRougeL) {
    std::vector<AnswerRecord> answers{answer("1", "a b"), answer("q,2", "c")};
    std::vector<QAPair> pairs{pair("1", {"a b c"}), pair("q,2", {"c"})};
    std::vector<Metric> metrics{Metric::rouge_l};
    auto csv = report_csv(evaluate_run(answers, pairs, metrics));
    EXPECT_EQ(csv,
              "id,rouge_l_precision,rouge_l_recall,rouge_l_f1\n"
              "1,1.000000,0.666667,0.800000\n"
              "\"q,2\",1.000000,1.000000,1.000000\n"
              "__mean__,1.000000,0.833333,0.900000\n");
}

TEST(Report, JsonAndExport) {
    std::vector<AnswerRecord> answers{answer("1", "a b")};
    std::vector<QAPair> pairs{pair("1", {"a b c", "d"})};
    std::vector<Metric> metrics{Metric::rouge1, Metric::accuracy};
    auto j = report_json(evaluate_run(answers, pairs, metrics));
    EXPECT_EQ(j.at("metrics"), (nlohmann::json{"rouge1", "accuracy"}));
    EXPECT_EQ(j.at("count"), 1);
    EXPECT_NEAR(j.at("corpus_mean").at("rouge1").at("f1").get<double>(), 0.8, 1e-12);
    EXPECT_EQ(j.at("per_question")[0].at("id"), "1");

    EXPECT_EQ(export_for_external_scorers(answers, pairs),
              "{\"candidate\":\"a b\",\"id\":\"1\",\"references\":[\"a b c\",\"d\"]}\n");
}

TEST(Metric, Names) {
    EXPECT_EQ(metric_from_string("rougeL"), Metric::rouge_l);
    EXPECT_EQ(metric_from_string(to_string(Metric::rouge2)), Metric::rouge2);
    EXPECT_THROW(metric_from_string("bleu"), ValidationError);
}
