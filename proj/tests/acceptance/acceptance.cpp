// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "kgrank/cassette.hpp"
#include "kgrank/cli/commands.hpp"
#include "kgrank/cli/run_config.hpp"
#include "kgrank/metrics.hpp"
#include "kgrank/ranker.hpp"
#include "kgrank/util.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace kgrank;
using kgrank::testing::fixture_dir;
using kgrank::testing::random_candidates;
using kgrank::testing::random_vector;
using kgrank::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t index_of(const Triple& t) { return std::stoul(t.relation().substr(4)); }

std::vector<double> raw(const Vector& v) { return {v.components().begin(), v.components().end()}; }

std::vector<std::vector<double>> raw(const std::vector<Candidate>& cs) {
    std::vector<std::vector<double>> out;
    for (const auto& c : cs) out.push_back(raw(c.embedding));
    return out;
}

Check ranking_oracle() {
    Check c;
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<std::size_t> n_dist(1, 20), dim_dist(1, 8);
    std::uniform_real_distribution<double> w_dist(0.0, 1.0), d_dist(0.0, 0.1);
    const auto start = Clock::now();
    int instances = 0;
    for (int i = 0; i < 600; ++i) {
        const std::size_t n = n_dist(rng), dim = dim_dist(rng);
        auto cands = random_candidates(rng, n, dim, i % 3 == 0);
        auto q = random_vector(rng, dim);

        auto sim = rank_similarity(q, cands);
        auto sim_oracle = oracle::similarity_order(raw(q), raw(cands));
        for (std::size_t k = 0; k < n; ++k) {
            if (index_of(sim[k].triple) != sim_oracle[k]) c.fail(fmt::format("similarity instance {}", i));
        }

        std::uniform_int_distribution<std::size_t> k_dist(1, n);
        MmrParams p{w_dist(rng), d_dist(rng), k_dist(rng)};
        auto mmr = rank_mmr(q, cands, p);
        auto mmr_oracle = oracle::mmr(raw(q), raw(cands), p.w_base, p.delta, p.k);
        if (mmr.size() != mmr_oracle.size()) c.fail(fmt::format("mmr size, instance {}", i));
        for (std::size_t k = 0; k < std::min(mmr.size(), mmr_oracle.size()); ++k) {
            if (index_of(mmr[k].triple) != mmr_oracle[k].index) c.fail(fmt::format("mmr instance {}", i));
        }
        ++instances;
    }
    const double secs = seconds_since(start);
    if (secs >= 10.0) c.fail(fmt::format("took {:.2f}s", secs));
    if (c.ok) c.detail = fmt::format("{} instances, {:.2f}s", instances, secs);
    return c;
}

Check mmr_reduction() {
    Check c;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> n_dist(1, 20), dim_dist(1, 8);
    const int instances = 300;
    for (int i = 0; i < instances; ++i) {
        const std::size_t n = n_dist(rng), dim = dim_dist(rng);
        auto cands = random_candidates(rng, n, dim, i % 2 == 0);
        auto q = random_vector(rng, dim);
        auto a = rank_mmr(q, cands, MmrParams{0.0, 0.0, n});
        auto b = rank_similarity(q, cands);
        for (std::size_t k = 0; k < n; ++k) {
            if (!(a[k].triple == b[k].triple)) c.fail(fmt::format("instance {} position {}", i, k));
        }
    }
    if (c.ok) c.detail = fmt::format("{} instances", instances);
    return c;
}

Check mmr_hand_case() {
    Check c;
    std::vector<Candidate> cands{{testing::numbered_triple(0), Vector({1.0, 0.0})},
                                 {testing::numbered_triple(1), Vector({1.0, 0.0})},
                                 {testing::numbered_triple(2), Vector({0.0, 1.0})}};
    auto out = rank_mmr(Vector({1.0, 0.0}), cands, MmrParams{0.1, 0.01, 3});
    const double want[] = {1.0, 0.89, 0.0};
    if (out.size() != 3) {
        c.fail("wrong size");
        return c;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (index_of(out[i].triple) != i) c.fail(fmt::format("position {} holds r{}", i, index_of(out[i].triple) + 1));
        if (std::abs(out[i].score - want[i]) > 1e-9) c.fail(fmt::format("score {} = {:.12f}", i, out[i].score));
    }
    if (c.ok) c.detail = fmt::format("scores [{:.12f}, {:.12f}, {:.12f}]", out[0].score, out[1].score, out[2].score);
    return c;
}

/// The string of length `len` over {a, b, c} whose base-3 digits are `code`.
std::vector<std::string> decode(std::size_t len, std::size_t code) {
    static const char* alphabet[] = {"a", "b", "c"};
    std::vector<std::string> out(len);
    for (std::size_t i = 0; i < len; ++i, code /= 3) out[i] = alphabet[code % 3];
    return out;
}

std::size_t pow3(std::size_t n) { return n == 0 ? 1 : 3 * pow3(n - 1); }

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
    return out;
}

// rouge_l against P = LCS/|x|, R = LCS/|y| with the subsequence-enumeration LCS.
bool rouge_matches(const std::vector<std::string>& x, const std::string& xs,
                   const std::vector<std::string>& y, const std::string& ys) {
    Prf got = rouge_l(xs, ys);
    if (x.empty() || y.empty()) return got.precision == 0.0 && got.recall == 0.0 && got.f1 == 0.0;
    const double lcs = static_cast<double>(oracle::lcs_bruteforce(x, y));
    const double p = lcs / static_cast<double>(x.size());
    const double r = lcs / static_cast<double>(y.size());
    const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    return std::abs(got.precision - p) < 1e-12 && std::abs(got.recall - r) < 1e-12 && std::abs(got.f1 - f) < 1e-12;
}

Check rouge_oracle() {
    Check c;
    std::vector<std::vector<std::string>> shorts;
    std::vector<std::string> short_texts;
    for (std::size_t len = 0; len <= 6; ++len) {
        for (std::size_t code = 0; code < pow3(len); ++code) {
            shorts.push_back(decode(len, code));
            short_texts.push_back(join(shorts.back()));
        }
    }

    // Every pair with both sides of length <= 6.
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < shorts.size() && c.ok; ++i) {
        for (std::size_t j = 0; j < shorts.size(); ++j) {
            ++pairs;
            if (!rouge_matches(shorts[i], short_texts[i], shorts[j], short_texts[j])) {
                c.fail(fmt::format("'{}' vs '{}'", short_texts[i], short_texts[j]));
                break;
            }
        }
    }

    // Every string of length <= 12, in both roles, against a random short
    // partner; every one also against itself.
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> short_pick(0, shorts.size() - 1);
    std::size_t strings = 0;
    for (std::size_t len = 0; len <= 12 && c.ok; ++len) {
        for (std::size_t code = 0; code < pow3(len) && c.ok; ++code) {
            ++strings;
            auto x = decode(len, code);
            auto xs = join(x);
            std::size_t j = short_pick(rng);
            pairs += 2;
            if (!rouge_matches(x, xs, shorts[j], short_texts[j]) || !rouge_matches(shorts[j], short_texts[j], x, xs)) {
                c.fail(fmt::format("'{}' vs '{}'", xs, short_texts[j]));
            }
            if (len > 0 && rouge_l(xs, xs).f1 != 1.0) c.fail(fmt::format("f1(x, x) != 1 for '{}'", xs));
        }
    }

    // Random pairs where both sides are long.
    std::uniform_int_distribution<std::size_t> long_len(7, 12);
    for (int k = 0; k < 3000 && c.ok; ++k) {
        std::size_t la = long_len(rng), lb = long_len(rng);
        auto a = decode(la, std::uniform_int_distribution<std::size_t>(0, pow3(la) - 1)(rng));
        auto b = decode(lb, std::uniform_int_distribution<std::size_t>(0, pow3(lb) - 1)(rng));
        ++pairs;
        if (!rouge_matches(a, join(a), b, join(b))) c.fail(fmt::format("'{}' vs '{}'", join(a), join(b)));
    }

    if (rouge_l("the cat sat", "the cat").f1 != 0.8) c.fail("'the cat sat' vs 'the cat' is not 0.8");
    if (c.ok) c.detail = fmt::format("{} strings, {} pairs", strings, pairs);
    return c;
}

Check deterministic_end_to_end() {
    Check c;
    const auto start = Clock::now();
    TempDir first, second;
    const std::vector<std::pair<std::string, bool>> configs{
        {"zs", false}, {"sim", false}, {"ae", false}, {"mmr", false}, {"sim", true}};
    auto answers_of = [](const fs::path& dir) {
        std::map<std::string, std::string> files;
        for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read(e.path());
        return files;
    };
    std::set<std::string> distinct_answer_sets;
    for (const auto& [strategy, rerank] : configs) {
        const std::string id = strategy + (rerank ? "-rr" : "");
        for (const fs::path& out : {first.path(), second.path()}) {
            cli::RunFlags f;
            f.config = fixture_dir() / "demo/config.json";
            f.strategy = strategy;
            if (rerank) f.rerank = true;
            f.out = out;
            std::ostringstream o, e;
            auto config = cli::resolve_run_config(f, [](const std::string&) { return std::nullopt; });
            if (cli::cmd_run(config, o, e) != cli::kExitOk) c.fail(fmt::format("{} run failed: {}", id, e.str()));
            cli::EvalOptions eval;
            eval.run_dir = out / id;
            if (cli::cmd_eval(eval, o, e) != cli::kExitOk) c.fail(fmt::format("{} eval failed: {}", id, e.str()));
        }
        if (!c.ok) return c;
        auto a = answers_of(first / id / "answers");
        auto b = answers_of(second / id / "answers");
        auto golden = answers_of(fixture_dir() / "demo/golden" / id / "answers");
        if (a.size() != 5) c.fail(fmt::format("{}: {} answers", id, a.size()));
        if (a != b) c.fail(fmt::format("{}: answers differ between runs", id));
        if (a != golden) c.fail(fmt::format("{}: answers differ from golden", id));
        for (const char* report : {"report.csv", "report.json", "export_for_external_scorers.jsonl"}) {
            if (read(first / id / report) != read(second / id / report)) {
                c.fail(fmt::format("{}: {} differs between runs", id, report));
            }
        }
        if (read(first / id / "report.csv") != read(fixture_dir() / "demo/golden" / id / "report.csv")) {
            c.fail(fmt::format("{}: report.csv differs from golden", id));
        }
        std::string all;
        for (const auto& [name, text] : a) all += nlohmann::json::parse(text).at("answer").get<std::string>();
        distinct_answer_sets.insert(all);
    }
    const double secs = seconds_since(start);
    if (secs >= 30.0) c.fail(fmt::format("took {:.2f}s", secs));
    if (c.ok) {
        c.detail = fmt::format("5 strategies x 2 runs, {} distinct answer sets, {:.2f}s",
                               distinct_answer_sets.size(), secs);
    }
    return c;
}

Check permutation_invariants() {
    Check c;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::size_t> n_dist(1, 30), dim_dist(1, 8), coarse(0, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto permutation_of = [](const std::vector<RankedTriple>& out, const std::vector<Candidate>& in,
                             std::size_t expected_size) {
        if (out.size() != expected_size) return false;
        std::set<std::size_t> seen;
        for (std::size_t k = 0; k < out.size(); ++k) {
            std::size_t idx = index_of(out[k].triple);
            if (idx >= in.size() || !(in[idx].triple == out[k].triple) || !seen.insert(idx).second) return false;
            if (out[k].rank != k) return false;
        }
        return true;
    };
    const int inputs = 1000;
    for (int i = 0; i < inputs; ++i) {
        const std::size_t n = n_dist(rng), dim = dim_dist(rng);
        auto cands = random_candidates(rng, n, dim, i % 2 == 0);
        auto q = random_vector(rng, dim);

        auto sim = rank_similarity(q, cands);
        if (!permutation_of(sim, cands, n)) c.fail(fmt::format("similarity input {}", i));

        std::uniform_int_distribution<std::size_t> k_dist(1, n + 5);
        MmrParams mp{unit(rng), unit(rng) * 0.1, k_dist(rng)};
        auto mmr = rank_mmr(q, cands, mp);
        if (!permutation_of(mmr, cands, std::min(mp.k, n))) c.fail(fmt::format("mmr input {}", i));

        std::uniform_int_distribution<std::size_t> p_dist(1, n + 3);
        std::size_t p = p_dist(rng);
        std::size_t p_pre = p + coarse(rng) * 3;
        // Coarse scores force ties.
        testing::FnScorer scorer([&](std::string_view, const std::string&) {
            return static_cast<double>(coarse(rng));
        });
        auto rr = rerank_top_p("q", sim, RerankParams{p, p_pre}, scorer);
        const std::size_t pool = std::min(p_pre, n);
        if (rr.size() != std::min(p, pool)) c.fail(fmt::format("rerank size, input {}", i));
        std::set<std::size_t> pool_ids, seen;
        for (std::size_t k = 0; k < pool; ++k) pool_ids.insert(index_of(sim[k].triple));
        for (std::size_t k = 0; k < rr.size(); ++k) {
            std::size_t idx = index_of(rr[k].triple);
            if (!pool_ids.count(idx) || !seen.insert(idx).second || rr[k].rank != k) {
                c.fail(fmt::format("rerank input {}", i));
            }
        }
    }
    if (c.ok) c.detail = fmt::format("{} inputs", inputs);
    return c;
}

Check stats_fixture() {
    Check c;
    TempDir dir;
    // Hand counts:
    //   questions: 1 sentence / 3 words, 2 / 6, 1 / 1  -> 4/3 sentences, 10/3 words
    //   answers:   2 / 4, 1 / 5, 3 / 6                 -> 2 sentences, 5 words
    std::ofstream(dir / "three.jsonl")
        << R"({"id":"1","question":"Is it safe?","references":["Yes it is. Mostly."]})" << "\n"
        << R"({"id":"2","question":"I take aspirin. Is that ok?","references":["Talk to your doctor first."]})" << "\n"
        << R"({"id":"3","question":"Dosage","references":["One. Two daily. Not any more!"]})" << "\n";
    cli::StatsOptions opts;
    opts.dataset = dir / "three.jsonl";
    opts.json_out = dir / "stats.json";
    std::ostringstream o, e;
    if (cli::cmd_stats(opts, o, e) != cli::kExitOk) {
        c.fail(e.str());
        return c;
    }
    auto j = nlohmann::json::parse(read(opts.json_out));
    auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    if (!near(j.at("avg_sentences_q").get<double>(), 4.0 / 3.0)) c.fail("avg_sentences_q");
    if (!near(j.at("avg_words_q").get<double>(), 10.0 / 3.0)) c.fail("avg_words_q");
    if (!near(j.at("avg_sentences_a").get<double>(), 2.0)) c.fail("avg_sentences_a");
    if (!near(j.at("avg_words_a").get<double>(), 5.0)) c.fail("avg_words_a");
    if (!c.ok) return c;
    c.detail = "hand-built fixture exact";

    const char* liveqa = std::getenv("KGRANK_LIVEQA_PATH");
    if (liveqa == nullptr || *liveqa == '\0') {
        c.detail += "; LiveQA comparison skipped (KGRANK_LIVEQA_PATH unset)";
        return c;
    }
    auto s = compute_stats(load_dataset(liveqa));
    const double got[] = {s.avg_sentences_q, s.avg_words_q, s.avg_sentences_a, s.avg_words_a};
    const double want[] = {1.15, 14.76, 6.96, 141.02};
    for (int k = 0; k < 4; ++k) {
        if (std::abs(got[k] - want[k]) > 0.05 * want[k]) {
            c.fail(fmt::format("LiveQA column {}: {:.2f} vs {:.2f}", k, got[k], want[k]));
        }
    }
    if (c.ok) {
        c.detail += fmt::format("; LiveQA ({:.2f}, {:.2f}, {:.2f}, {:.2f}) within 5%", got[0], got[1], got[2], got[3]);
    }
    return c;
}

Check judge_symmetry() {
    Check c;
    const auto templates = TemplateSet::builtin();
    const auto& judge_template = templates.get(TemplateName::judge);
    JudgeOptions opts;

    testing::FnCompleter never([](const CompletionRequest&) -> std::string {
        throw ProviderError("judge called for identical answers");
    });
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> letter('a', 'z'), len(1, 40);
    for (int i = 0; i < 200; ++i) {
        std::string a;
        for (int k = len(rng); k > 0; --k) a.push_back(static_cast<char>(k % 6 == 0 ? ' ' : letter(rng)));
        if (trim(a).empty()) a = "x";
        if (judge_pairwise("q", a, a, never, judge_template, opts).winner != Winner::tie) c.fail("a vs a not tie");
    }

    // Record a position-biased judge, then replay it: the two orders disagree.
    TempDir dir;
    auto file = cassette_path(dir.path(), ProviderKind::complete);
    {
        auto cassette = Cassette::open_or_create(ProviderKind::complete, file);
        auto biased = std::make_shared<testing::FnCompleter>(
            [](const CompletionRequest&) { return std::string("The first is better.\nVerdict: 1"); });
        RecordingCompleter recorder(biased, cassette);
        judge_pairwise("q", "answer one", "answer two", recorder, judge_template, opts);
        cassette->save();
    }
    ReplayCompleter replay(Cassette::open(ProviderKind::complete, file));
    auto v = judge_pairwise("q", "answer one", "answer two", replay, judge_template, opts);
    if (v.winner != Winner::tie) c.fail(fmt::format("disagreement gave {}", to_string(v.winner)));
    if (c.ok) c.detail = "200 identical pairs tie; replayed order-swap disagreement ties";
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"ranking-oracle", ranking_oracle},
        {"mmr-reduction-law", mmr_reduction},
        {"mmr-hand-case", mmr_hand_case},
        {"rouge-oracle", rouge_oracle},
        {"deterministic-end-to-end", deterministic_end_to_end},
        {"permutation-invariants", permutation_invariants},
        {"stats-fixture", stats_fixture},
        {"judge-symmetry", judge_symmetry},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Check result;
        try {
            result = run();
        } catch (const std::exception& e) {
            result.fail(std::string("exception: ") + e.what());
        }
        if (!result.ok) ++failed;
        std::cout << (result.ok ? "PASS " : "FAIL ") << name << " (" << result.detail << ")" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
