#include <httplib.h>

#include "tiap/error.hpp"
#include "tiap/judge.hpp"

namespace tiap::judge {

std::pair<std::string, std::string> split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ValidationError("judge url '" + std::string(url) + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), std::string()};
    std::string prefix(url.substr(path_start));
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {std::string(url.substr(0, path_start)), prefix};
}

HttpResponse HttpTransport::post(const Endpoint& endpoint,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 const std::string& body) {
    const auto [origin, prefix] = split_url(endpoint.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    HttpResponse out;
    auto res = client.Post(prefix + "/chat/completions", h, body, "application/json");
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

}  // namespace tiap::judge
