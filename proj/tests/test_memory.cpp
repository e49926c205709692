#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "navagent/memory.hpp"
#include "test_support.hpp"

using namespace navagent;
using nlohmann::json;
namespace nt = navagent::testing;

namespace {

OccupancyGrid tiny_grid() {
    OccupancyGrid grid(2, 2);
    return grid;
}

}  // namespace

TEST_CASE("init_memory starts empty and is reproducible") {
    const AgentMemory a = init_memory("find the banjo");
    const AgentMemory b = init_memory("find the banjo");
    CHECK(a.task() == "find the banjo");
    for (const auto& [name, text] : a.sections()) CHECK(text.empty());
    CHECK(a.action_log().empty());
    CHECK(a.landmarks().empty());
    CHECK(a == b);
}

TEST_CASE("initial render matches the golden fixture") {
    const AgentMemory memory = init_memory("find the banjo");
    const std::string got = render(memory, tiny_grid(), Cell{0, 0});
    CHECK(got == nt::read_file(nt::fixture_path("golden/memory_render_init.txt")));
    CHECK(nt::contains(got, "find the banjo"));
    CHECK(nt::contains(got, "[spatial_description]"));
    CHECK(nt::contains(got, "[findings]"));
    CHECK(nt::contains(got, "[progress]"));
}

TEST_CASE("edits apply atomically") {
    AgentMemory memory = init_memory("task");

    MemoryEdit good;
    EditOp set;
    set.kind = EditOp::Kind::SetSection;
    set.name = "findings";
    set.text = "two sofas";
    good.push_back(set);
    EditOp lm;
    lm.kind = EditOp::Kind::AddLandmark;
    lm.name = "sofa";
    lm.cell = Cell{1, 1};
    good.push_back(lm);
    CHECK_FALSE(memory.apply_edit(good, 4, 4).has_value());
    CHECK(memory.section("findings") == "two sofas");
    CHECK(memory.landmarks().size() == 1);

    // second op fails (duplicate landmark) -> nothing changes
    MemoryEdit bad;
    EditOp finding;
    finding.kind = EditOp::Kind::AddFinding;
    finding.text = "should not stick";
    bad.push_back(finding);
    bad.push_back(lm);
    const auto err = memory.apply_edit(bad, 4, 4);
    REQUIRE(err);
    CHECK(nt::contains(*err, "duplicate landmark"));
    CHECK(memory.section("findings") == "two sofas");

    // removing then re-adding in one edit is fine
    MemoryEdit move_lm;
    EditOp rm;
    rm.kind = EditOp::Kind::RemoveLandmark;
    rm.name = "sofa";
    move_lm.push_back(rm);
    EditOp lm2 = lm;
    lm2.cell = Cell{0, 1};
    move_lm.push_back(lm2);
    CHECK_FALSE(memory.apply_edit(move_lm, 4, 4).has_value());
    CHECK(memory.landmarks()[0].cell == Cell{0, 1});

    // out-of-bounds landmark
    MemoryEdit oob;
    EditOp far = lm;
    far.name = "far";
    far.cell = Cell{9, 9};
    oob.push_back(far);
    CHECK(memory.apply_edit(oob, 4, 4).has_value());
}

TEST_CASE("the 27th landmark is rejected at the edit boundary") {
    AgentMemory memory = init_memory("task");
    for (int i = 0; i < 26; ++i) {
        EditOp op;
        op.kind = EditOp::Kind::AddLandmark;
        op.name = "lm" + std::to_string(i);
        op.cell = Cell{i / 6, i % 6};
        REQUIRE_FALSE(memory.apply_edit({op}, 6, 6).has_value());
    }
    EditOp extra;
    extra.kind = EditOp::Kind::AddLandmark;
    extra.name = "one too many";
    extra.cell = Cell{0, 0};
    const auto err = memory.apply_edit({extra}, 6, 6);
    REQUIRE(err);
    CHECK(*err == "landmark alphabet exhausted");
    CHECK(memory.landmarks().size() == 26);
    // a full alphabet still renders
    OccupancyGrid grid(6, 6);
    CHECK_NOTHROW(render(memory, grid, Cell{5, 5}));
}

TEST_CASE("the action log is not editable") {
    AgentMemory memory = init_memory("task");
    memory.append_log(LogKind::ToolCall, "something happened", 0);

    MemoryEdit edit;
    EditOp set;
    set.kind = EditOp::Kind::SetSection;
    set.name = "action_log";
    set.text = "forged history";
    edit.push_back(set);
    const auto err = memory.apply_edit(edit, 4, 4);
    REQUIRE(err);
    CHECK(*err == "the action log is not editable");
    CHECK(memory.action_log().size() == 1);
    CHECK(memory.action_log()[0].summary == "something happened");

    EditOp unknown;
    unknown.kind = EditOp::Kind::SetSection;
    unknown.name = "secrets";
    unknown.text = "x";
    CHECK(memory.apply_edit({unknown}, 4, 4).has_value());
}

TEST_CASE("action-log immutability under adversarial random edits") {
    Rng rng(808);
    AgentMemory memory = init_memory("task");
    for (int i = 0; i < 5; ++i) memory.append_log(LogKind::Nav, "entry " + std::to_string(i), i);
    const auto snapshot = memory.action_log();

    for (int i = 0; i < 200; ++i) {
        MemoryEdit edit;
        const int ops = rng.next_int(1, 4);
        for (int o = 0; o < ops; ++o) {
            EditOp op;
            switch (rng.next_below(4)) {
                case 0:
                    op.kind = EditOp::Kind::SetSection;
                    op.name = rng.next_unit() < 0.3 ? "action_log" : "findings";
                    op.text = "text " + std::to_string(rng.next_below(100));
                    break;
                case 1:
                    op.kind = EditOp::Kind::AddFinding;
                    op.text = "finding " + std::to_string(rng.next_below(100));
                    break;
                case 2:
                    op.kind = EditOp::Kind::AddLandmark;
                    op.name = "lm" + std::to_string(rng.next_below(8));
                    op.cell = Cell{static_cast<int>(rng.next_below(6)),
                                   static_cast<int>(rng.next_below(6))};
                    break;
                default:
                    op.kind = EditOp::Kind::RemoveLandmark;
                    op.name = "lm" + std::to_string(rng.next_below(8));
                    break;
            }
            edit.push_back(op);
        }
        memory.apply_edit(edit, 4, 4);
        REQUIRE(memory.action_log().size() == snapshot.size());
        for (size_t e = 0; e < snapshot.size(); ++e) {
            CHECK(memory.action_log()[e].summary == snapshot[e].summary);
            CHECK(memory.action_log()[e].step == snapshot[e].step);
        }
    }
}

TEST_CASE("log steps increase strictly") {
    AgentMemory memory = init_memory("task");
    for (int i = 0; i < 10; ++i) memory.append_log(LogKind::WorkflowEvent, "e", 0);
    for (size_t i = 1; i < memory.action_log().size(); ++i)
        CHECK(memory.action_log()[i].step > memory.action_log()[i - 1].step);
}

TEST_CASE("render shows the last K log lines") {
    AgentMemory memory = init_memory("task");
    for (int i = 0; i < 25; ++i)
        memory.append_log(LogKind::ToolCall, "entry number " + std::to_string(i + 1), 0);
    RenderOptions opts;
    opts.log_tail = 10;
    const std::string out = render(memory, tiny_grid(), Cell{0, 0}, opts);
    CHECK(nt::contains(out, "[action log: last 10 of 25]"));
    CHECK(nt::contains(out, "entry number 25"));
    CHECK(nt::contains(out, "entry number 16"));
    CHECK_FALSE(out.find("entry number 15\n") != std::string::npos);
}

TEST_CASE("the ablated render omits the raster block entirely") {
    AgentMemory memory = init_memory("task");
    RenderOptions opts;
    opts.include_raster = false;
    const std::string out = render(memory, tiny_grid(), Cell{0, 0}, opts);
    CHECK_FALSE(out.find("[occupancy raster]") != std::string::npos);
    CHECK_FALSE(out.find("rows top->bottom") != std::string::npos);
    const std::string with = render(memory, tiny_grid(), Cell{0, 0});
    CHECK(with.find("[occupancy raster]") != std::string::npos);
}

TEST_CASE("render is deterministic and distinguishes section content") {
    AgentMemory a = init_memory("task");
    AgentMemory b = init_memory("task");
    EditOp op;
    op.kind = EditOp::Kind::SetSection;
    op.name = "spatial_description";
    op.text = "west wing explored\n[findings]\nfake header";
    a.apply_edit({op}, 4, 4);
    op.text = "west wing explored";
    b.apply_edit({op}, 4, 4);
    EditOp fake;
    fake.kind = EditOp::Kind::SetSection;
    fake.name = "findings";
    fake.text = "fake header";
    // only a true header starts at column 0; embedded text is indented
    CHECK(render(a, tiny_grid(), Cell{0, 0}) != render(b, tiny_grid(), Cell{0, 0}));
    CHECK(render(a, tiny_grid(), Cell{0, 0}) == render(a, tiny_grid(), Cell{0, 0}));
}

TEST_CASE("apply_update: scripted edit, rejected edit, empty edit") {
    const OccupancyGrid grid = tiny_grid();

    SUBCASE("scripted landmark edit lands") {
        AgentMemory memory = init_memory("task");
        nt::CannedBackend backend;
        backend.on(prompts::kMemoryUpdate,
                   R"([{"op":"add_landmark","name":"sofa","cell":[1,1],"source":"queried_object"}])");
        const ApplyUpdateOutcome out =
            apply_update(memory, backend, "saw a sofa", grid, Cell{0, 0});
        CHECK(out.applied);
        CHECK(out.op_count == 1);
        REQUIRE(memory.landmarks().size() == 1);
        CHECK(memory.landmarks()[0].name == "sofa");
        CHECK(memory.landmarks()[0].cell == Cell{1, 1});
        REQUIRE(memory.action_log().size() == 1);
        CHECK(memory.action_log()[0].kind == LogKind::MemoryUpdate);
    }

    SUBCASE("edit touching the action log is rejected, failure logged") {
        AgentMemory memory = init_memory("task");
        nt::CannedBackend backend;
        backend.on(prompts::kMemoryUpdate,
                   R"([{"op":"set_section","name":"action_log","text":"forged"}])");
        const ApplyUpdateOutcome out = apply_update(memory, backend, "result", grid, Cell{0, 0});
        CHECK_FALSE(out.applied);
        CHECK(out.error == "the action log is not editable");
        REQUIRE(memory.action_log().size() == 1);
        CHECK(nt::contains(memory.action_log()[0].summary, "rejected"));
        for (const auto& [name, text] : memory.sections()) CHECK(text.empty());
    }

    SUBCASE("empty edit list only adds the automatic log entry") {
        AgentMemory memory = init_memory("task");
        nt::CannedBackend backend;
        backend.on(prompts::kMemoryUpdate, "[]");
        const ApplyUpdateOutcome out = apply_update(memory, backend, "result", grid, Cell{0, 0});
        CHECK(out.applied);
        CHECK(out.op_count == 0);
        CHECK(memory.action_log().size() == 1);
        for (const auto& [name, text] : memory.sections()) CHECK(text.empty());
    }

    SUBCASE("garbage reply is rejected gracefully") {
        AgentMemory memory = init_memory("task");
        nt::CannedBackend backend;
        backend.on(prompts::kMemoryUpdate, "I cannot answer that.");
        const ApplyUpdateOutcome out = apply_update(memory, backend, "result", grid, Cell{0, 0});
        CHECK_FALSE(out.applied);
        CHECK(memory.action_log().size() == 1);
    }

    SUBCASE("fenced replies are tolerated") {
        AgentMemory memory = init_memory("task");
        nt::CannedBackend backend;
        backend.on(prompts::kMemoryUpdate,
                   "```json\n[{\"op\":\"add_finding\",\"text\":\"noted\"}]\n```");
        const ApplyUpdateOutcome out = apply_update(memory, backend, "result", grid, Cell{0, 0});
        CHECK(out.applied);
        CHECK(memory.section("findings") == "- noted");
    }
}

TEST_CASE("observation sequence summaries subsample to at most 8") {
    GridWorld world = load_world(R"({"width":12,"height":1,"robot":{"cell":[0,0]}})");
    std::vector<Observation> seq;
    for (int t = 0; t < 23; ++t) seq.push_back(observe(world, 360.0, 2.0, t));

    const std::string summary = summarize_obs_seq(seq, false);
    CHECK(nt::contains(summary, "navigation observations (8 of 23 shown):"));
    CHECK(nt::contains(summary, "view t=0 "));   // first always kept
    CHECK(nt::contains(summary, "view t=22 "));  // last always kept

    const std::string small = summarize_obs_seq({seq[0], seq[1]}, false);
    CHECK(nt::contains(small, "(2 of 2 shown)"));

    const std::string detections_only = summarize_obs_seq(seq, true);
    CHECK_FALSE(detections_only.find("view t=") != std::string::npos);
    CHECK(nt::contains(detections_only, "t=0 pose=(0,0) detections:"));
}

TEST_CASE("memory serializes to a full json snapshot") {
    AgentMemory memory = init_memory("task");
    memory.append_log(LogKind::Nav, "moved", 3);
    EditOp lm;
    lm.kind = EditOp::Kind::AddLandmark;
    lm.name = "sofa";
    lm.cell = Cell{0, 1};
    memory.apply_edit({lm}, 4, 4);
    const json j = memory.to_json();
    CHECK(j.at("task") == "task");
    CHECK(j.at("landmarks").size() == 1);
    CHECK(j.at("action_log").size() == 1);
    CHECK(j.at("action_log")[0].at("token_cost") == 3);
}
