#include "vlmbench/backend.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vlmbench/text.hpp"

namespace vlmbench {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InferenceError("backend url '" + url + "' has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    ep.path = prefix + std::string(kChatCompletionsPath);
    return ep;
}

template <typename Client>
void set_timeouts(Client& client, double seconds) {
    const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(seconds));
    const auto secs = static_cast<time_t>(t.count() / 1'000'000);
    const auto usecs = static_cast<time_t>(t.count() % 1'000'000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
}

}  // namespace

void load_image_bytes(ImageRef& image) {
    std::ifstream in(image.path, std::ios::binary);
    if (!in) throw InferenceError("cannot read image '" + image.path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    image.bytes = buf.str();
}

std::string_view image_mime_type(std::string_view file_name) {
    auto dot = file_name.rfind('.');
    if (dot != std::string_view::npos && text::iequals(file_name.substr(dot), ".png")) return "image/png";
    return "image/jpeg";
}

std::string build_request_body(const BackendSpec& spec, const PromptText& prompt, const ImageRef& image,
                               const GenerationParams& params, int token_limit) {
    const std::string data_url =
        "data:" + std::string(image_mime_type(image.file_name)) + ";base64," + httplib::detail::base64_encode(image.bytes);

    json body = {
        {"model", spec.model_name},
        {"messages",
         json::array({{{"role", "user"},
                       {"content", json::array({{{"type", "image_url"}, {"image_url", {{"url", data_url}}}},
                                                {{"type", "text"}, {"text", prompt.text}}})}}})},
        {"temperature", params.temperature},
        {"top_p", params.top_p},
        {"max_tokens", token_limit},
    };
    if (params.seed) body["seed"] = *params.seed;
    return body.dump();
}

RawInference parse_reply_body(std::string_view body, const BackendSpec& spec, const PromptText& prompt,
                              int token_limit) {
    json reply;
    try {
        reply = json::parse(body);
    } catch (const json::exception& e) {
        throw InferenceError(std::string("malformed reply body: ") + e.what());
    }

    RawInference raw;
    raw.kind = spec.kind;
    raw.token_limit = token_limit;
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw InferenceError("malformed reply body: message content is not a string");
        raw.raw_text = content.get<std::string>();
        const auto& tokens = reply.at("usage").at("completion_tokens");
        if (!tokens.is_number_integer() || tokens.get<long long>() < 0) {
            throw InferenceError("malformed reply body: usage.completion_tokens is not a non-negative integer");
        }
        raw.generated_tokens = static_cast<int>(std::min<long long>(tokens.get<long long>(), token_limit));
    } catch (const json::exception& e) {
        throw InferenceError(std::string("malformed reply body: ") + e.what());
    }
    raw.prompt_echoed = spec.kind == BackendKind::llava_style && !prompt.text.empty() &&
                        raw.raw_text.find(prompt.text) != std::string::npos;
    return raw;
}

RawInference infer(const BackendSpec& spec, const PromptText& prompt, const ImageRef& image,
                   const GenerationParams& params, int token_limit, const RequestTag& tag) {
    if (image.bytes.empty()) throw InferenceError("image '" + image.file_name + "' has no bytes loaded");
    const auto endpoint = split_url(spec.url);
    const auto body = build_request_body(spec, prompt, image, params, token_limit);

    httplib::Headers headers = {
        {std::string(kImageHeader), tag.image.empty() ? image.file_name : tag.image},
        {std::string(kColumnHeader), tag.column},
        {std::string(kRunHeader), std::to_string(tag.run_index)},
    };

    std::string last_error;
    std::optional<int> last_status;
    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
        if (attempt > 0) {
            const double wait = spec.retry_backoff_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }

        httplib::Client client(endpoint.scheme_host_port);
        if (!client.is_valid()) throw InferenceError("unsupported backend url '" + spec.url + "'");
        set_timeouts(client, spec.request_timeout_s);
        client.set_keep_alive(false);

        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            last_status.reset();
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            last_status = res->status;
            continue;
        }
        if (res->status >= 400) {
            throw InferenceError("HTTP " + std::to_string(res->status) + ": " + std::string(text::trim(res->body)),
                                 res->status);
        }
        return parse_reply_body(res->body, spec, prompt, token_limit);
    }
    throw InferenceError(last_error + " after " + std::to_string(spec.max_retries + 1) + " attempt(s)", last_status);
}

std::string clean_output(const RawInference& raw, const PromptText& prompt) {
    std::string_view s = raw.raw_text;
    if (raw.kind == BackendKind::llava_style) {
        std::size_t cut = 0;
        auto consider = [&](std::string_view needle) {
            if (needle.empty()) return;
            auto pos = s.rfind(needle);
            if (pos != std::string_view::npos) cut = std::max(cut, pos + needle.size());
        };
        consider(prompt.text);
        for (auto marker : kLlavaMarkers) consider(marker);
        s.remove_prefix(cut);
    }
    return std::string(text::trim(s));
}

}  // namespace vlmbench
