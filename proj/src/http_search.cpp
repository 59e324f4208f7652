#include <cstdlib>

#include <httplib.h>

#include "c2kit/rag.hpp"

namespace c2kit {

HttpSearchClient::HttpSearchClient(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
    if (base_url_.empty()) throw std::invalid_argument("search base URL is not configured");
}

std::unique_ptr<HttpSearchClient> HttpSearchClient::from_env() {
    const char* url = std::getenv("SEARCH_BASE_URL");
    const char* key = std::getenv("SEARCH_API_KEY");
    return std::make_unique<HttpSearchClient>(url && *url ? url : "https://api.search.brave.com/res/v1/web/search",
                                              key ? key : "");
}

std::vector<SearchHit> HttpSearchClient::search(const std::string& query, std::size_t k) {
    const auto scheme_end = base_url_.find("://");
    const auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string host = base_url_.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : base_url_.substr(path_start);

    httplib::Client client(host);
    client.set_read_timeout(std::chrono::seconds(30));
    httplib::Headers headers = {{"Accept", "application/json"}};
    if (!api_key_.empty()) headers.emplace("X-Subscription-Token", api_key_);
    const httplib::Params params = {{"q", query}, {"count", std::to_string(k)}};

    auto res = client.Get(path, params, headers);
    if (!res) throw SearchError("search request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw SearchError("search API returned HTTP " + std::to_string(res->status));
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw SearchError("search API returned non-JSON body");

    std::vector<SearchHit> hits;
    if (!j.contains("web") || !j["web"].contains("results")) return hits;
    for (const auto& r : j["web"]["results"]) {
        if (hits.size() == k) break;
        std::string body = r.value("description", "");
        if (r.contains("extra_snippets") && r["extra_snippets"].is_array()) {
            for (const auto& s : r["extra_snippets"]) {
                if (s.is_string()) body += "\n\n" + s.get<std::string>();
            }
        }
        hits.push_back({r.value("url", ""), r.value("title", ""), std::move(body)});
    }
    return hits;
}

}  // namespace c2kit
