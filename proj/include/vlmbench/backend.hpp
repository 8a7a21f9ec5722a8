#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vlmbench/prompt.hpp"
#include "vlmbench/types.hpp"

namespace vlmbench {

struct ImageRef {
    std::string file_name;  // CSV row key
    std::filesystem::path path;
    std::string bytes;      // raw file payload, loaded on demand
};

// Reads the file at image.path into image.bytes.
void load_image_bytes(ImageRef& image);

// "image/png" or "image/jpeg" from the file extension.
std::string_view image_mime_type(std::string_view file_name);

struct RawInference {
    std::string raw_text;
    int generated_tokens = 0;
    int token_limit = 1;
    bool prompt_echoed = false;
    BackendKind kind = BackendKind::generic;

    bool truncated() const { return generated_tokens == token_limit; }
};

// Identifies a request for logging and for the mock server's fixture lookup.
// Sent as X-VLMBench-* headers; the JSON body stays a plain chat-completions
// request.
struct RequestTag {
    std::string image;
    std::string column;
    int run_index = 1;  // 1-based
};

inline constexpr std::string_view kImageHeader = "X-VLMBench-Image";
inline constexpr std::string_view kColumnHeader = "X-VLMBench-Column";
inline constexpr std::string_view kRunHeader = "X-VLMBench-Run";
inline constexpr std::string_view kChatCompletionsPath = "/v1/chat/completions";

// Task-level inference failure: transport error after all retries, HTTP
// status >= 400, or a reply body that is not a chat-completions response.
class InferenceError : public std::runtime_error {
public:
    InferenceError(const std::string& what, std::optional<int> http_status = std::nullopt)
        : std::runtime_error(what), http_status_(http_status) {}
    std::optional<int> http_status() const noexcept { return http_status_; }

private:
    std::optional<int> http_status_;
};

// Chat-completions request body (model, one user message with an image part
// and a text part, temperature, top_p, max_tokens, seed when set).
std::string build_request_body(const BackendSpec& spec, const PromptText& prompt, const ImageRef& image,
                               const GenerationParams& params, int token_limit);

// Extracts choices[0].message.content and usage.completion_tokens.
// Throws InferenceError on anything else.
RawInference parse_reply_body(std::string_view body, const BackendSpec& spec, const PromptText& prompt,
                              int token_limit);

// One POST to <url>/v1/chat/completions, retried on transport errors and 5xx
// with exponential backoff. Safe to call concurrently.
RawInference infer(const BackendSpec& spec, const PromptText& prompt, const ImageRef& image,
                   const GenerationParams& params, int token_limit, const RequestTag& tag = {});

// Markers stripped from llava-style replies, in priority order. Extend here
// when new base LLM chat templates show up.
inline constexpr std::array<std::string_view, 3> kLlavaMarkers = {"[/INST]", "ASSISTANT:", "assistant\n"};

// llava-style: text after the last occurrence of the prompt or of any marker,
// trimmed. qwen-style and generic: trimmed text. Total and idempotent.
std::string clean_output(const RawInference& raw, const PromptText& prompt);

}  // namespace vlmbench
