#include <cstdlib>

#include <httplib.h>

#include "c2kit/llm_gateway.hpp"

namespace c2kit {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

/// Splits "https://host:port/prefix" into ("https://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace

HttpChatProvider::HttpChatProvider(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw std::invalid_argument("LLM base URL is not configured");
    if (options_.model.empty()) throw std::invalid_argument("LLM model is not configured");
}

HttpChatProvider::Options HttpChatProvider::options_from_env() {
    Options o;
    o.base_url = env_or("LLM_BASE_URL", "https://api.openai.com/v1");
    o.api_key = env_or("LLM_API_KEY", "");
    o.model = env_or("LLM_MODEL", "gpt-4-0125-preview");
    return o;
}

std::string HttpChatProvider::complete(const std::string& prompt, const CompletionRequest& req, const std::string&,
                                       int) {
    const auto [host, prefix] = split_base_url(options_.base_url);
    httplib::Client client(host);
    client.set_read_timeout(options_.timeout);
    client.set_connection_timeout(std::chrono::seconds(15));

    nlohmann::json body = {{"model", options_.model},
                           {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                           {"temperature", req.temperature},
                           {"max_tokens", req.max_output}};
    if (req.mode == CompletionMode::Json) body["response_format"] = {{"type", "json_object"}};

    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransientError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
        throw TransientError("provider returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw GatewayError(GatewayError::Kind::Provider,
                           "provider returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw TransientError("provider response is not JSON");
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransientError(std::string("unexpected provider response shape: ") + e.what());
    }
}

}  // namespace c2kit
