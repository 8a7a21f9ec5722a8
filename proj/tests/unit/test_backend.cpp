#include "doctest.h"

#include <atomic>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "support/test_support.hpp"
#include "vlmbench/backend.hpp"
#include "vlmbench/mock_server.hpp"

using namespace vlmbench;
using nlohmann::json;

namespace {

ImageRef png_image() {
    return {"S27.png", "S27.png", std::string("\x89PNG\r\n\x1a\n", 8)};
}

BackendSpec spec_for(const std::string& url, BackendKind kind = BackendKind::qwen_style) {
    BackendSpec s;
    s.url = url;
    s.kind = kind;
    s.model_name = "test-model";
    s.request_timeout_s = 5;
    s.max_retries = 0;
    s.retry_backoff_s = 0;
    return s;
}

std::string reply(const std::string& content, int tokens) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})},
                {"usage", {{"completion_tokens", tokens}}}}
        .dump();
}

}  // namespace

TEST_CASE("request body carries image, prompt and generation parameters") {
    GenerationParams params;
    params.temperature = 0;
    params.top_p = 0.9;
    params.seed = 42;
    const auto body = json::parse(
        build_request_body(spec_for("http://x"), PromptText{"Count.", false}, png_image(), params, 1024));
    CHECK(body["model"] == "test-model");
    CHECK(body["max_tokens"] == 1024);
    CHECK(body["temperature"] == 0.0);
    CHECK(body["top_p"] == 0.9);
    CHECK(body["seed"] == 42);
    const auto& content = body["messages"][0]["content"];
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(content[0]["type"] == "image_url");
    CHECK(content[0]["image_url"]["url"] == "data:image/png;base64,iVBORw0KGgo=");
    CHECK(content[1]["text"] == "Count.");

    params.seed.reset();
    CHECK_FALSE(json::parse(build_request_body(spec_for("http://x"), {}, png_image(), params, 50)).contains("seed"));
}

TEST_CASE("mime type from extension") {
    CHECK(image_mime_type("a.PNG") == "image/png");
    CHECK(image_mime_type("a.jpg") == "image/jpeg");
    CHECK(image_mime_type("a.JPEG") == "image/jpeg");
}

TEST_CASE("reply parsing") {
    const auto spec = spec_for("http://x");
    auto raw = parse_reply_body(reply(" 3 ", 2), spec, {}, 50);
    CHECK(raw.raw_text == " 3 ");
    CHECK(raw.generated_tokens == 2);
    CHECK(raw.token_limit == 50);
    CHECK_FALSE(raw.truncated());

    CHECK(parse_reply_body(reply("x", 50), spec, {}, 50).truncated());
    CHECK(parse_reply_body(reply("x", 80), spec, {}, 50).generated_tokens == 50);

    CHECK_THROWS_AS(parse_reply_body("not json", spec, {}, 50), InferenceError);
    CHECK_THROWS_AS(parse_reply_body(R"({"choices": []})", spec, {}, 50), InferenceError);
    CHECK_THROWS_AS(parse_reply_body(R"({"choices": [{"message": {"content": "3"}}]})", spec, {}, 50),
                    InferenceError);
    CHECK_THROWS_AS(parse_reply_body(
                        R"({"choices": [{"message": {"content": null}}], "usage": {"completion_tokens": 1}})", spec,
                        {}, 50),
                    InferenceError);
}

TEST_CASE("llava-style cleaning strips the echoed prompt and markers") {
    const PromptText prompt{"How many cars?", false};
    RawInference raw;
    raw.kind = BackendKind::llava_style;
    raw.raw_text = "[INST] How many cars? [/INST] 3";
    CHECK(clean_output(raw, prompt) == "3");
    raw.raw_text = "USER: <image>\nHow many cars? ASSISTANT: There are 2 cars.";
    CHECK(clean_output(raw, prompt) == "There are 2 cars.");
    raw.raw_text = "<|start_header_id|>assistant\n\n  yes ";
    CHECK(clean_output(raw, prompt) == "yes");
    raw.raw_text = "  4  ";
    CHECK(clean_output(raw, prompt) == "4");

    raw.kind = BackendKind::qwen_style;
    raw.raw_text = "[INST] How many cars? [/INST] 3\n";
    CHECK(clean_output(raw, prompt) == "[INST] How many cars? [/INST] 3");
}

TEST_CASE("property: clean_output is idempotent") {
    testing::Rng rng(23);
    const std::vector<std::string> pieces = {"[/INST]", "ASSISTANT:", "assistant\n", "prompt", " ", "\n", "3",
                                             "yes",     "[INST]",     "assistant",   ":",      "x"};
    for (int i = 0; i < 5000; ++i) {
        std::string text;
        const int n = rng.integer(0, 8);
        for (int k = 0; k < n; ++k) text += rng.pick(pieces);
        const PromptText prompt{rng.chance(0.5) ? "prompt" : rng.pick(pieces), false};
        for (auto kind : {BackendKind::llava_style, BackendKind::qwen_style, BackendKind::generic}) {
            RawInference raw;
            raw.kind = kind;
            raw.raw_text = text;
            const auto once = clean_output(raw, prompt);
            raw.raw_text = once;
            INFO("case ", i, ": '", text, "'");
            CHECK(clean_output(raw, prompt) == once);
        }
    }
}

TEST_CASE("fixture parsing") {
    const auto fx = parse_fixtures(
        "# comment\n\n"
        "S1.jpg | vehicles | 2 | 3 | 0 | 4\n"
        "* | sidewalk | * | max | 1 | yes | really\\nsecond line\\\\\n");
    REQUIRE(fx.size() == 2);
    CHECK(fx[0].image == "S1.jpg");
    CHECK(fx[0].run_index == 2);
    CHECK(fx[0].generated_tokens == 3);
    CHECK_FALSE(fx[0].echo_prompt);
    CHECK(fx[0].response == "4");
    CHECK(fx[1].image == "*");
    CHECK_FALSE(fx[1].run_index.has_value());
    CHECK_FALSE(fx[1].generated_tokens.has_value());
    CHECK(fx[1].echo_prompt);
    CHECK(fx[1].response == "yes | really\nsecond line\\");

    CHECK_THROWS_AS(parse_fixtures("a | b | c\n"), FixtureError);
    CHECK_THROWS_AS(parse_fixtures("a | b | 0 | 1 | 0 | x\n"), FixtureError);
    CHECK_THROWS_AS(parse_fixtures("a | b | 1 | 1 | 2 | x\n"), FixtureError);
    CHECK_THROWS_AS(parse_fixtures("a | b | 1 | 1 | 0 | bad \\q\n"), FixtureError);
}

TEST_CASE("fixture lookup prefers the most specific line") {
    const auto fx = parse_fixtures(
        "* | v | * | 1 | 0 | any\n"
        "* | v | 2 | 1 | 0 | any-image run2\n"
        "a.jpg | v | * | 1 | 0 | a any-run\n"
        "a.jpg | v | 3 | 1 | 0 | a run3\n"
        "a.jpg | v | 3 | 1 | 0 | shadowed\n");
    CHECK(find_fixture(fx, "b.jpg", "v", 1)->response == "any");
    CHECK(find_fixture(fx, "b.jpg", "v", 2)->response == "any-image run2");
    CHECK(find_fixture(fx, "a.jpg", "v", 2)->response == "a any-run");
    CHECK(find_fixture(fx, "a.jpg", "v", 3)->response == "a run3");
    CHECK(find_fixture(fx, "a.jpg", "w", 1) == nullptr);
}

TEST_CASE("infer against the mock server") {
    MockServer server(parse_fixtures(
        "S27.png | vehicles | 1 | 3 | 0 | 3\n"
        "S27.png | vehicles | 2 | 3 | 0 | 4\n"
        "S27.png | sidewalk | * | max | 1 | yes\n"
        "S27.png | broken | * | 1 | 0 | x\n"));
    const PromptText prompt{"Is there a sidewalk?", false};
    GenerationParams params;

    auto spec = spec_for(server.url(), BackendKind::llava_style);
    auto r1 = infer(spec, prompt, png_image(), params, 50, {"S27.png", "vehicles", 1});
    auto r2 = infer(spec, prompt, png_image(), params, 50, {"S27.png", "vehicles", 2});
    CHECK(r1.raw_text == "3");
    CHECK(r2.raw_text == "4");
    CHECK(r1.generated_tokens == 3);

    auto echoed = infer(spec, prompt, png_image(), params, 64, {"S27.png", "sidewalk", 1});
    CHECK(echoed.prompt_echoed);
    CHECK(echoed.truncated());
    CHECK(echoed.generated_tokens == 64);
    CHECK(clean_output(echoed, prompt) == "yes");

    const auto before = server.request_count();
    spec.max_retries = 3;
    try {
        infer(spec, prompt, png_image(), params, 50, {"S27.png", "unknown", 1});
        FAIL("expected InferenceError");
    } catch (const InferenceError& e) {
        CHECK(e.http_status() == 404);
    }
    CHECK(server.request_count() == before + 1);  // 4xx is not retried

    ImageRef empty{"S27.png", "S27.png", ""};
    CHECK_THROWS_AS(infer(spec, prompt, empty, params, 50, {"S27.png", "vehicles", 1}), InferenceError);
}

TEST_CASE("mock server rejects malformed requests") {
    MockServer server(parse_fixtures("* | v | * | 1 | 0 | x\n"));
    httplib::Client client(server.url());
    auto res = client.Post(std::string(kChatCompletionsPath), "{", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    const auto no_image = json{{"model", "m"}, {"max_tokens", 5}, {"messages", json::array()}}.dump();
    res = client.Post(std::string(kChatCompletionsPath), no_image, "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
}

TEST_CASE("mock server is deterministic under concurrent requests") {
    std::string fixtures;
    for (int run = 1; run <= 5; ++run) {
        fixtures += "* | v | " + std::to_string(run) + " | " + std::to_string(run) + " | 0 | answer " +
                    std::to_string(run) + "\n";
    }
    MockServer server(parse_fixtures(fixtures));
    const auto spec = spec_for(server.url());
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 40; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
            const int run = i % 5 + 1;
            return infer(spec, {"p", false}, png_image(), {}, 50, {"img" + std::to_string(i), "v", run}).raw_text;
        }));
    }
    for (int i = 0; i < 40; ++i) CHECK(futures[static_cast<std::size_t>(i)].get() == "answer " + std::to_string(i % 5 + 1));
}

TEST_CASE("5xx and transport errors are retried") {
    httplib::Server flaky;
    std::atomic<int> hits{0};
    flaky.Post(std::string(kChatCompletionsPath), [&](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.get_header_value(std::string(kColumnHeader)) == "v");
        if (hits++ < 2) {
            res.status = 503;
            return;
        }
        res.set_content(reply("ok", 1), "application/json");
    });
    const int port = flaky.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { flaky.listen_after_bind(); });
    flaky.wait_until_ready();

    auto spec = spec_for("http://127.0.0.1:" + std::to_string(port) + "/");
    spec.max_retries = 1;
    try {
        infer(spec, {"p", false}, png_image(), {}, 50, {"a", "v", 1});
        FAIL("expected InferenceError");
    } catch (const InferenceError& e) {
        CHECK(e.http_status() == 503);
    }
    CHECK(hits == 2);
    CHECK(infer(spec, {"p", false}, png_image(), {}, 50, {"a", "v", 1}).raw_text == "ok");
    CHECK(hits == 3);
    flaky.stop();
    thread.join();

    auto dead = spec_for("http://127.0.0.1:" + std::to_string(port));
    dead.max_retries = 2;
    dead.request_timeout_s = 1;
    CHECK_THROWS_AS(infer(dead, {"p", false}, png_image(), {}, 50, {"a", "v", 1}), InferenceError);
    CHECK_THROWS_AS(infer(spec_for("no-scheme"), {"p", false}, png_image(), {}, 50, {}), InferenceError);
}
