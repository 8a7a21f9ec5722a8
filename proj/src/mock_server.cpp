#include "vlmbench/mock_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "vlmbench/backend.hpp"
#include "vlmbench/text.hpp"

namespace vlmbench {

namespace {

using nlohmann::json;

std::string unescape(std::string_view s, int line_no) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 == s.size()) throw FixtureError("line " + std::to_string(line_no) + ": dangling backslash");
        switch (s[++i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '\\': out += '\\'; break;
            default:
                throw FixtureError("line " + std::to_string(line_no) + ": unknown escape '\\" + std::string(1, s[i]) +
                                   "'");
        }
    }
    return out;
}

json error_body(const std::string& message) {
    return {{"error", {{"message", message}, {"type", "invalid_request_error"}}}};
}

}  // namespace

std::vector<MockFixture> parse_fixtures(std::string_view document) {
    std::vector<MockFixture> fixtures;
    const auto lines = text::split_lines(document);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        auto line = lines[i];
        auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (int f = 0; f < 5; ++f) {
            auto bar = rest.find('|');
            if (bar == std::string_view::npos) {
                throw FixtureError("line " + std::to_string(line_no) + ": expected 6 '|'-separated fields");
            }
            fields.push_back(text::trim(rest.substr(0, bar)));
            rest.remove_prefix(bar + 1);
        }

        MockFixture fx;
        fx.image = std::string(fields[0]);
        fx.column = std::string(fields[1]);
        if (fx.image.empty() || fx.column.empty()) {
            throw FixtureError("line " + std::to_string(line_no) + ": image and column must be non-empty");
        }
        if (fields[2] != "*") {
            auto run = text::to_integer(fields[2]);
            if (!run || *run < 1) {
                throw FixtureError("line " + std::to_string(line_no) + ": run index must be '*' or a positive integer");
            }
            fx.run_index = static_cast<int>(*run);
        }
        if (fields[3] != "max") {
            auto tokens = text::to_integer(fields[3]);
            if (!tokens || *tokens < 0) {
                throw FixtureError("line " + std::to_string(line_no) +
                                   ": generated_tokens must be 'max' or a non-negative integer");
            }
            fx.generated_tokens = static_cast<int>(*tokens);
        }
        if (fields[4] != "0" && fields[4] != "1") {
            throw FixtureError("line " + std::to_string(line_no) + ": echo flag must be 0 or 1");
        }
        fx.echo_prompt = fields[4] == "1";
        fx.response = unescape(text::trim(rest), line_no);
        fixtures.push_back(std::move(fx));
    }
    return fixtures;
}

std::vector<MockFixture> load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FixtureError("cannot read fixture file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_fixtures(buf.str());
    } catch (const FixtureError& e) {
        throw FixtureError(path.string() + ": " + e.what());
    }
}

const MockFixture* find_fixture(const std::vector<MockFixture>& fixtures, std::string_view image,
                                std::string_view column, int run_index) {
    const MockFixture* best = nullptr;
    int best_score = -1;
    for (const auto& fx : fixtures) {
        if (fx.column != column) continue;
        const bool image_exact = fx.image == image;
        if (!image_exact && fx.image != "*") continue;
        const bool run_exact = fx.run_index && *fx.run_index == run_index;
        if (fx.run_index && !run_exact) continue;
        const int score = (image_exact ? 2 : 0) + (run_exact ? 1 : 0);
        if (score > best_score) {
            best = &fx;
            best_score = score;
        }
    }
    return best;
}

MockServer::MockServer(std::vector<MockFixture> fixtures, int port, std::string host)
    : fixtures_(std::move(fixtures)), host_(std::move(host)), server_(std::make_unique<httplib::Server>()) {
    server_->Post(std::string(kChatCompletionsPath), [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(error_body("request body is not JSON").dump(), "application/json");
            return;
        }

        std::string prompt;
        bool has_image = false;
        int max_tokens = 0;
        try {
            max_tokens = body.at("max_tokens").get<int>();
            for (const auto& part : body.at("messages").at(0).at("content")) {
                const auto type = part.at("type").get<std::string>();
                if (type == "text") prompt = part.at("text").get<std::string>();
                if (type == "image_url") {
                    has_image = part.at("image_url").at("url").get<std::string>().rfind("data:image/", 0) == 0;
                }
            }
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(error_body(std::string("malformed request: ") + e.what()).dump(), "application/json");
            return;
        }
        if (!has_image || max_tokens < 1) {
            res.status = 400;
            res.set_content(error_body("request needs an image data URL and max_tokens >= 1").dump(),
                            "application/json");
            return;
        }

        const auto image = req.get_header_value(std::string(kImageHeader));
        const auto column = req.get_header_value(std::string(kColumnHeader));
        const auto run = text::to_integer(req.get_header_value(std::string(kRunHeader))).value_or(1);
        const auto* fx = find_fixture(fixtures_, image, column, static_cast<int>(run));
        if (!fx) {
            res.status = 404;
            res.set_content(error_body("no fixture for image '" + image + "', column '" + column + "', run " +
                                       std::to_string(run))
                                .dump(),
                            "application/json");
            return;
        }

        const int tokens = std::min(fx->generated_tokens.value_or(max_tokens), max_tokens);
        std::string content = fx->response;
        if (fx->echo_prompt) content = "[INST] " + prompt + " [/INST] " + fx->response;

        json reply = {
            {"id", "mock-" + image + "-" + column + "-" + std::to_string(run)},
            {"object", "chat.completion"},
            {"model", body.value("model", std::string())},
            {"choices", json::array({{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", content}}},
                                      {"finish_reason", tokens == max_tokens ? "length" : "stop"}}})},
            {"usage", {{"prompt_tokens", 0}, {"completion_tokens", tokens}, {"total_tokens", tokens}}},
        };
        res.set_content(reply.dump(), "application/json");
    });

    if (port == 0) {
        port_ = server_->bind_to_any_port(host_);
        if (port_ < 0) throw std::runtime_error("mock server: cannot bind an ephemeral port on " + host_);
    } else {
        if (!server_->bind_to_port(host_, port)) {
            throw std::runtime_error("mock server: cannot bind " + host_ + ":" + std::to_string(port) +
                                     " (port in use?)");
        }
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockServer::~MockServer() {
    stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockServer::url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

void MockServer::wait() {
    if (thread_.joinable()) thread_.join();
}

void MockServer::stop() {
    server_->stop();
}

}  // namespace vlmbench
