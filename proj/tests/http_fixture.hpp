#pragma once

#include <string>
#include <thread>

#include "httplib.h"

namespace test {

// httplib server on an ephemeral localhost port, stopped on scope exit.
class HttpFixture {
public:
    httplib::Server server;

    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~HttpFixture() {
        server.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    int port_ = 0;
    std::thread thread_;
};

} // namespace test
