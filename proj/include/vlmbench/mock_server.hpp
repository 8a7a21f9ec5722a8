#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace vlmbench {

// One line of a fixture file:
//
//   image_name | column | run_index_or_* | generated_tokens | echo(0/1) | response text
//
// `*` matches any image or run. generated_tokens may be `max` (equal to the
// request's max_tokens). Response text supports \n, \t and \\ escapes and
// may itself contain '|'. Blank lines and lines starting with '#' are skipped.
struct MockFixture {
    std::string image;
    std::string column;
    std::optional<int> run_index;         // nullopt = any run
    std::optional<int> generated_tokens;  // nullopt = request max_tokens
    bool echo_prompt = false;
    std::string response;
};

class FixtureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<MockFixture> parse_fixtures(std::string_view document);
std::vector<MockFixture> load_fixtures(const std::filesystem::path& path);

// Most specific match for (image, column, run): exact image beats `*`, then
// exact run beats `*`; earlier lines win among equals.
const MockFixture* find_fixture(const std::vector<MockFixture>& fixtures, std::string_view image,
                                std::string_view column, int run_index);

// Deterministic chat-completions server for tests and offline runs. Replies
// depend only on the request tag headers and prompt, never on arrival order.
// Requests without a matching fixture get HTTP 404.
class MockServer {
public:
    // port 0 binds an ephemeral port. Throws std::runtime_error when the port
    // cannot be bound.
    MockServer(std::vector<MockFixture> fixtures, int port = 0, std::string host = "127.0.0.1");
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    int port() const noexcept { return port_; }
    std::string url() const;
    std::size_t request_count() const noexcept { return requests_.load(); }

    // Blocks until stop() is called from another thread.
    void wait();
    void stop();

private:
    std::vector<MockFixture> fixtures_;
    std::string host_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<std::size_t> requests_{0};
    int port_ = 0;
};

}  // namespace vlmbench
