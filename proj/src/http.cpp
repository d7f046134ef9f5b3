#include "fdh/http.hpp"

#include "httplib.h"

#include "fdh/error.hpp"

namespace fdh {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("URL without scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw InvalidArgument("unsupported URL scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const std::map<std::string, std::string>& headers, std::chrono::seconds timeout) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    auto res = client.Post(parts.target, hdrs, body, content_type);
    if (!res) {
        throw ServiceError("POST " + parts.origin + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status >= 200 && res->status < 300) return {res->status, res->body};

    const bool retriable = res->status >= 500 || res->status == 429;
    std::string snippet = res->body.substr(0, 200);
    throw ServiceError("POST " + parts.origin + parts.target.substr(0, parts.target.find('?')) +
                           ": HTTP " + std::to_string(res->status) + " " + snippet,
                       retriable);
}

} // namespace fdh
