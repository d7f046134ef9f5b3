#pragma once

#include <chrono>
#include <map>
#include <string>

namespace fdh {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// POST to an http:// or https:// URL. Connection failures, timeouts and 5xx
// / 429 replies throw ServiceError(retriable = true); other non-2xx replies
// throw ServiceError(retriable = false).
HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const std::map<std::string, std::string>& headers = {},
                       std::chrono::seconds timeout = std::chrono::seconds(60));

} // namespace fdh
