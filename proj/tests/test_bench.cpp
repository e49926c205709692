#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "navagent/bench.hpp"
#include "navagent/oracle.hpp"
#include "test_support.hpp"

using namespace navagent;
using nlohmann::json;
namespace nt = navagent::testing;

namespace {

EpisodeResult make_result(Outcome outcome, std::optional<InconclusiveCause> cause,
                          double path_m, long long tokens) {
    EpisodeResult r;
    r.outcome = outcome;
    r.cause = cause;
    if (outcome != Outcome::Inconclusive) r.answer = outcome == Outcome::Success ? "A" : "B";
    r.path_length_m = path_m;
    r.prompt_tokens = tokens / 2;
    r.completion_tokens = tokens - tokens / 2;
    return r;
}

// the synthetic multiset behind the published-style row: 77 correct,
// 14 incorrect, 9 inconclusive (0 time / 3 cost / 6 function-call)
std::vector<EpisodeResult> synthetic_100() {
    std::vector<EpisodeResult> results;
    for (int i = 0; i < 77; ++i)
        results.push_back(make_result(Outcome::Success, std::nullopt, 16.55, 673110));
    for (int i = 0; i < 14; ++i)
        results.push_back(make_result(Outcome::Failure, std::nullopt, 16.55, 673110));
    for (int i = 0; i < 3; ++i)
        results.push_back(
            make_result(Outcome::Inconclusive, InconclusiveCause::CostLimit, 16.55, 673110));
    for (int i = 0; i < 6; ++i)
        results.push_back(make_result(Outcome::Inconclusive,
                                      InconclusiveCause::FunctionCallError, 16.55, 673110));
    return results;
}

SuiteReport report_of(const std::vector<EpisodeResult>& results, const std::string& method) {
    SuiteReport report;
    report.method = method;
    report.token_counting = "approximate";
    for (size_t i = 0; i < results.size(); ++i) {
        EpisodeRecord rec;
        rec.task.id = "t" + std::to_string(i);
        rec.task.answer_key = "A";
        rec.result = results[i];
        report.records.push_back(std::move(rec));
    }
    report.metrics = compute_metrics(results);
    return report;
}

}  // namespace

TEST_CASE("single-episode metrics") {
    const auto m = compute_metrics({make_result(Outcome::Success, std::nullopt, 2.0, 1000)});
    CHECK(m.correct_pct == 100);
    CHECK(m.incorrect_pct == 0);
    CHECK(m.inconclusive_pct == 0);
    CHECK(m.mean_path_m == doctest::Approx(2.0));
    CHECK(m.se_path_m == 0.0);
}

TEST_CASE("standard error over two episodes") {
    const auto m =
        compute_metrics({make_result(Outcome::Success, std::nullopt, 1.0, 1000),
                         make_result(Outcome::Failure, std::nullopt, 3.0, 3000)});
    CHECK(m.mean_tokens_k == doctest::Approx(2.0));
    CHECK(m.se_tokens_k == doctest::Approx(1.0));
    CHECK(m.mean_path_m == doctest::Approx(2.0));
    CHECK(m.se_path_m == doctest::Approx(1.0));
}

TEST_CASE("synthetic 77/14/9 renders the published-style rows") {
    const auto m = compute_metrics(synthetic_100());
    CHECK(m.correct_pct == 77);
    CHECK(m.incorrect_pct == 14);
    CHECK(m.inconclusive_pct == 9);
    CHECK(m.time_limit_pct == 0);
    CHECK(m.cost_limit_pct == 3);
    CHECK(m.function_call_error_pct == 6);
    CHECK(m.mean_path_m == doctest::Approx(16.55));
    CHECK(m.se_path_m == doctest::Approx(0.0));
    CHECK(m.mean_tokens_k == doctest::Approx(673.11));

    const std::string table = render_report(report_of(synthetic_100(), "synthetic"),
                                            ReportFormat::Table);
    CHECK(nt::contains(table, "77 / 14"));
    CHECK(nt::contains(table, "16.55 ± 0.00"));
    CHECK(nt::contains(table, "673.11 ± 0.00"));
    CHECK(nt::contains(table, "time limit 0 / cost limit 3 / function call error 6"));
}

TEST_CASE("report table matches the golden file byte for byte") {
    const std::string table =
        render_report(report_of(synthetic_100(), "synthetic"), ReportFormat::Table);
    CHECK(table == nt::read_file(nt::fixture_path("golden/report_table.txt")));
    // byte-stable on repeat
    CHECK(table == render_report(report_of(synthetic_100(), "synthetic"), ReportFormat::Table));
}

TEST_CASE("json report carries the documented schema") {
    const std::string text =
        render_report(report_of(synthetic_100(), "synthetic"), ReportFormat::Json);
    const json j = json::parse(text);
    CHECK(j.at("format") == 1);
    CHECK(j.at("accuracy").at("correct_pct") == 77);
    CHECK(j.at("accuracy").at("incorrect_pct") == 14);
    CHECK(j.at("accuracy").at("inconclusive_pct") == 9);
    CHECK(j.at("mean_path_length_m").at("mean") == doctest::Approx(16.55));
    CHECK(j.at("mean_token_usage_k").at("se") == doctest::Approx(0.0));
    CHECK(j.at("inconclusive_breakdown_pct").at("cost_limit") == 3);
    CHECK(j.at("episodes_detail").size() == 100);
    CHECK(j.at("notes").is_array());
}

TEST_CASE("percentage partition holds for arbitrary multisets") {
    Rng rng(12321);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EpisodeResult> results;
        const int n = rng.next_int(1, 50);
        for (int i = 0; i < n; ++i) {
            const auto roll = rng.next_below(5);
            if (roll < 2)
                results.push_back(make_result(Outcome::Success, std::nullopt, 1.0, 100));
            else if (roll < 3)
                results.push_back(make_result(Outcome::Failure, std::nullopt, 1.0, 100));
            else
                results.push_back(make_result(
                    Outcome::Inconclusive,
                    std::vector<InconclusiveCause>{
                        InconclusiveCause::TimeLimit, InconclusiveCause::CostLimit,
                        InconclusiveCause::FunctionCallError}[rng.next_below(3)],
                    1.0, 100));
        }
        const Metrics m = compute_metrics(results);
        CHECK(m.correct_pct + m.incorrect_pct + m.inconclusive_pct == 100);
        CHECK(m.time_limit_pct + m.cost_limit_pct + m.function_call_error_pct ==
              m.inconclusive_pct);
    }
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_WITH_AS(compute_metrics({}), "empty suite", BenchError);
    SuiteReport empty;
    CHECK_THROWS_AS(render_report(empty, ReportFormat::Table), BenchError);
}

TEST_CASE("aggregation is order-independent") {
    auto results = synthetic_100();
    const Metrics base = compute_metrics(results);
    Rng rng(5);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
        for (size_t i = results.size() - 1; i > 0; --i)
            std::swap(results[i], results[rng.next_below(i + 1)]);
        const Metrics m = compute_metrics(results);
        CHECK(m.correct_pct == base.correct_pct);
        CHECK(m.mean_path_m == doctest::Approx(base.mean_path_m));
        CHECK(m.se_tokens_k == doctest::Approx(base.se_tokens_k));
    }
}

TEST_CASE("task files validate structure, choices, and keys") {
    const std::string good = R"({"format":1,"tasks":[
        {"id":"t1","question":"q?","choices":[{"letter":"A","text":"yes"},
         {"letter":"B","text":"no"}],"answer_key":"A","world":"w.json"}]})";
    const auto tasks = load_tasks(good);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].id == "t1");
    CHECK(tasks[0].choices.size() == 2);

    CHECK_THROWS_AS(load_tasks("[]"), BenchError);  // bare array: no format field
    CHECK_THROWS_WITH_AS(load_tasks(R"({"format":2,"tasks":[]})"),
                         doctest::Contains("unsupported format"), BenchError);
    CHECK_THROWS_WITH_AS(load_tasks(R"({"format":1,"tasks":[
        {"id":"t","question":"q","choices":[{"letter":"A","text":"y"}],
         "answer_key":"A","world":"w"}]})"),
                         doctest::Contains("at least 2 choices"), BenchError);
    CHECK_THROWS_WITH_AS(load_tasks(R"({"format":1,"tasks":[
        {"id":"t","question":"q","choices":[{"letter":"A","text":"y"},
         {"letter":"B","text":"n"}],"answer_key":"C","world":"w"}]})"),
                         doctest::Contains("answer key"), BenchError);

    // round-trip
    const auto again = load_tasks(serialize_tasks(tasks));
    CHECK(again.size() == 1);
    CHECK(again[0].question == tasks[0].question);
}

TEST_CASE("generated find-tasks are deterministic and well-formed") {
    const GeneratedTask a = generate_find_task(11);
    const GeneratedTask b = generate_find_task(11);
    CHECK(serialize_world(a.world) == serialize_world(b.world));
    CHECK(a.task.question == b.task.question);
    CHECK(a.task.answer_key == "A");
    CHECK(nt::contains(a.task.question, "\""));

    const GeneratedTask absent = generate_find_task(11, {}, 1.0);
    CHECK(absent.task.answer_key == "B");
    // the absent label really is absent
    const auto quoted_at = absent.task.question.find('"');
    const auto quoted_end = absent.task.question.find('"', quoted_at + 1);
    const std::string label =
        absent.task.question.substr(quoted_at + 1, quoted_end - quoted_at - 1);
    for (const auto& obj : absent.world.objects) CHECK(obj.label != label);
}

TEST_CASE("oracle suite: five tasks, partition invariant, dumps replay") {
    std::vector<TaskSpec> tasks;
    std::map<std::string, GridWorld> worlds;
    for (std::uint64_t seed = 50; seed < 55; ++seed) {
        GeneratedTask gen = generate_find_task(seed, {}, seed % 2 == 0 ? 0.0 : 0.4);
        worlds[gen.task.world_ref] = gen.world;
        tasks.push_back(gen.task);
    }
    const WorldLoader loader = [&worlds](const std::string& ref) { return worlds.at(ref); };

    OracleBackend oracle;
    EpisodeConfig cfg;
    cfg.sensor.fov_deg = 360.0;
    cfg.sensor.range_m = 5.0;

    const SuiteReport report = run_suite(tasks, oracle, loader, cfg, 1, "oracle");
    REQUIRE(report.records.size() == 5);
    CHECK(report.metrics.correct_pct + report.metrics.incorrect_pct +
              report.metrics.inconclusive_pct ==
          100);
    CHECK(report.metrics.episodes == 5);
    CHECK(std::is_sorted(report.records.begin(), report.records.end(),
                         [](const EpisodeRecord& a, const EpisodeRecord& b) {
                             return a.task.id < b.task.id;
                         }));

    // every dump replays to the identical result
    for (const auto& rec : report.records) {
        const Transcript dump = Transcript::from_jsonl(rec.result.transcript.to_jsonl());
        const EpisodeResult replayed = replay_transcript(dump);
        CHECK(replayed.to_json().dump() == rec.result.to_json().dump());
    }

    // parallel execution aggregates to the same report
    const SuiteReport parallel = run_suite(tasks, oracle, loader, cfg, 3, "oracle");
    CHECK(parallel.metrics.correct_pct == report.metrics.correct_pct);
    CHECK(parallel.metrics.mean_path_m == doctest::Approx(report.metrics.mean_path_m));
    for (size_t i = 0; i < report.records.size(); ++i)
        CHECK(parallel.records[i].result.to_json().dump() ==
              report.records[i].result.to_json().dump());
}

TEST_CASE("suite failures surface as outcomes, not aborts") {
    GeneratedTask gen = generate_find_task(77);
    const GridWorld world = gen.world;
    const WorldLoader loader = [&world](const std::string&) { return world; };

    // a backend that always breaks transport mid-episode
    class Dead : public LlmBackend {
    public:
        BackendReply complete(const std::vector<ChatTurn>&, const json&) override {
            throw TransportError("wire cut");
        }
        std::string name() const override { return "dead"; }
    } dead;

    EpisodeConfig cfg;
    const SuiteReport report = run_suite({gen.task}, dead, loader, cfg, 1, "dead");
    REQUIRE(report.records.size() == 1);
    CHECK(report.records[0].result.outcome == Outcome::Inconclusive);
    CHECK(report.metrics.inconclusive_pct == 100);
}
