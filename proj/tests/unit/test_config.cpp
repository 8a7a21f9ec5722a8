#include "doctest.h"

#include "support/test_support.hpp"
#include "vlmbench/config.hpp"

using namespace vlmbench;

namespace {

const char* kMinimal = R"([global]
image_dir = images
output_csv = out.csv

[task]
column = vehicles
type = numeric
task = Count the motor vehicles.
)";

std::string error_of(const std::string& source) {
    try {
        load_config(source);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string with_task(const std::string& extra) {
    return std::string(kMinimal) + extra;
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = load_config(kMinimal);
    CHECK(c.image_dir == "images");
    CHECK(c.output_csv == "out.csv");
    CHECK(c.params.temperature == 0);
    CHECK(c.params.top_p == 1);
    CHECK(c.params.max_tokens == 50);
    CHECK_FALSE(c.params.seed.has_value());
    CHECK(c.parallel_images == 1);
    CHECK(c.backend.kind == BackendKind::generic);
    REQUIRE(c.tasks.size() == 1);
    CHECK(c.tasks[0].n_runs == 2);
    CHECK_FALSE(c.tasks[0].consensus_enabled);
    CHECK(c.tasks[0].effective_runs() == 1);
}

TEST_CASE("full global section") {
    const auto c = load_config(R"([global]
image_dir = imgs
output_csv = r.csv
backend_url = http://localhost:9000/api
backend_kind = llava-style
model = some-model
role = """
You analyze street images.
Be precise.
"""
temperature = 0.2
top_p = 0.9
max_tokens = 200
seed = 42
parallel_images = 4
timeout = 30
retries = 5
retry_backoff = 0.5

[task]
column = sidewalk
type = boolean
task = Is there a sidewalk?
consensus = true
runs = 5
reasoning = true
)");
    CHECK(c.backend.url == "http://localhost:9000/api");
    CHECK(c.backend.kind == BackendKind::llava_style);
    CHECK(c.backend.model_name == "some-model");
    CHECK(c.global_role == "You analyze street images.\nBe precise.");
    CHECK(c.params.seed == 42u);
    CHECK(c.params.max_tokens == 200);
    CHECK(c.parallel_images == 4);
    CHECK(c.backend.request_timeout_s == 30);
    CHECK(c.backend.max_retries == 5);
    CHECK(c.tasks[0].effective_runs() == 5);
    CHECK(c.tasks[0].reasoning_enabled);
}

TEST_CASE("reasoning forces the token budget") {
    TaskSpec t;
    GenerationParams p;
    p.max_tokens = 50;
    CHECK(effective_max_tokens(t, p) == 50);
    t.reasoning_enabled = true;
    CHECK(effective_max_tokens(t, p) == 1024);
    p.max_tokens = 1500;
    CHECK(effective_max_tokens(t, p) == 1024);
}

TEST_CASE("validation errors name the field") {
    CHECK(error_of(with_task("consensus = true\nruns = 6\n")).find("runs = 6 outside [2, 5]") != std::string::npos);
    CHECK(error_of(with_task("runs = 1\n")).find("runs = 1") != std::string::npos);
    CHECK(error_of(with_task("\n[task]\ncolumn = vehicles\ntype = boolean\n")).find("duplicate column") !=
          std::string::npos);
    CHECK(error_of("[global]\nimage_dir = a\noutput_csv = b\n").find("empty task list") != std::string::npos);

    std::string eleven = "[global]\nimage_dir = a\noutput_csv = b\n";
    for (int i = 0; i < 11; ++i) eleven += "[task]\ncolumn = t" + std::to_string(i) + "\ntype = text\n";
    CHECK(error_of(eleven).find("maximum is 10") != std::string::npos);

    std::string ten = "[global]\nimage_dir = a\noutput_csv = b\n";
    for (int i = 0; i < 10; ++i) ten += "[task]\ncolumn = t" + std::to_string(i) + "\ntype = text\n";
    CHECK(error_of(ten).empty());

    CHECK(error_of("[global]\nimage_dir = a\noutput_csv = b\n[task]\ncolumn = x\ntype = boolean\ntolerance_pct = 5\n")
              .find("only allowed on numeric") != std::string::npos);
    CHECK(error_of("[global]\nimage_dir = a\noutput_csv = b\n[task]\ncolumn = x\ntype = boolean\ntolerance_pct = 0\n")
              .empty());
    CHECK(error_of(with_task("tolerance_pct = -1\n")).find("tolerance_pct") != std::string::npos);
    CHECK(error_of(with_task("colour = red\n")).find("colour") != std::string::npos);
    CHECK(error_of(with_task("type = integer\n")).find("line") != std::string::npos);
    CHECK(error_of(std::string(kMinimal).replace(0, 8, "[global]\nmax_tokens = 1501\n")).find("max_tokens") !=
          std::string::npos);
    CHECK(error_of("[global]\nimage_dir = a\noutput_csv = b\n[task]\ntype = text\n").find("column") !=
          std::string::npos);
    CHECK(error_of("[global]\nimage_dir = a\noutput_csv = b\n[task]\ncolumn = x\n").find("type") !=
          std::string::npos);
    CHECK(error_of("[globl]\n").find("unknown section") != std::string::npos);
    CHECK(error_of("[global]\nimage_dir = a\n[task\n").find("syntax error at line 3") != std::string::npos);
}

TEST_CASE("column names that would break the results table are rejected") {
    for (std::string bad : {"image", "a,b", "say \"hi\"", "vehicles_runs", "x_consensus", "x_agreement",
                            "x_reasoning", "x_truncated"}) {
        RunConfig c = load_config(kMinimal);
        c.tasks[0].column = bad;
        CHECK_THROWS_AS(validate(c), ConfigError);
    }
    RunConfig c = load_config(kMinimal);
    c.tasks[0].column = " padded";
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("load_config_file prefixes the path") {
    testing::TempDir dir;
    testing::write_file(dir / "bad.cfg", "[global]\n");
    try {
        load_config_file(dir / "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config_file(dir / "missing.cfg"), ConfigError);
}

namespace {

std::string random_text(testing::Rng& rng) {
    static const std::string alphabet = "abc XYZ 123 #;=[]\"'\n\t.:,";
    auto s = rng.string_from(alphabet, 0, 40);
    return s;
}

RunConfig random_config(testing::Rng& rng) {
    RunConfig c;
    c.image_dir = rng.pick(std::vector<std::string>{"images", "data/imgs", "/abs/path with space"});
    c.output_csv = rng.pick(std::vector<std::string>{"out.csv", "results/run 1.csv"});
    c.backend.url = rng.chance(0.5) ? "http://127.0.0.1:" + std::to_string(rng.integer(1, 65535)) : "";
    c.backend.kind = rng.pick(std::vector<BackendKind>{BackendKind::llava_style, BackendKind::qwen_style,
                                                       BackendKind::generic});
    c.backend.model_name = rng.chance(0.5) ? "model-" + std::to_string(rng.integer(0, 99)) : "";
    c.backend.request_timeout_s = rng.real(0.5, 300);
    c.backend.max_retries = rng.integer(0, 5);
    c.backend.retry_backoff_s = rng.real(0, 4);
    c.global_role = random_text(rng);
    c.params.temperature = rng.real(0, 2);
    c.params.top_p = rng.real(0.01, 1);
    c.params.max_tokens = rng.integer(1, 1500);
    if (rng.chance(0.5)) c.params.seed = static_cast<std::uint64_t>(rng.integer(0, 1 << 30));
    c.parallel_images = rng.integer(1, 8);

    const int n = rng.integer(1, 10);
    for (int i = 0; i < n; ++i) {
        TaskSpec t;
        t.column = "task" + std::to_string(i) + rng.string_from("abc_-", 0, 5);
        t.role = rng.chance(0.3) ? random_text(rng) : "";
        t.task = random_text(rng);
        t.theory = random_text(rng);
        t.format = random_text(rng);
        t.task_type =
            rng.pick(std::vector<TaskType>{TaskType::numeric, TaskType::category, TaskType::boolean, TaskType::text});
        t.consensus_enabled = rng.chance(0.5);
        t.n_runs = rng.integer(2, 5);
        if (t.task_type == TaskType::numeric) t.numeric_tolerance_pct = rng.chance(0.5) ? rng.real(0, 25) : 0;
        t.reasoning_enabled = rng.chance(0.3);
        c.tasks.push_back(std::move(t));
    }
    return c;
}

}  // namespace

TEST_CASE("property: render_config round-trips random configurations") {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        testing::Rng rng(seed);
        const auto config = random_config(rng);
        REQUIRE_NOTHROW(validate(config));
        const auto rendered = render_config(config);
        INFO("seed ", seed, "\n", rendered);
        RunConfig back;
        REQUIRE_NOTHROW(back = load_config(rendered));
        CHECK(back == config);
        CHECK(render_config(back) == rendered);
    }
}
