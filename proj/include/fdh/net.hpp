#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdh {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "HOST:PORT"; throws InvalidArgument.
Endpoint parse_endpoint(std::string_view spec);

// Owning TCP socket handle.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& o) noexcept : fd_(o.release()) {}
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    int release();
    void close();
    void shutdown_write();

    // Throws Error on failure (including peer reset).
    void write_all(std::span<const std::uint8_t> bytes);

    // Waits up to `timeout` for data. Returns bytes read; an empty vector
    // with `eof` set means the peer closed; nullopt means timeout.
    std::optional<std::vector<std::uint8_t>> read_some(std::chrono::milliseconds timeout, bool& eof);

private:
    int fd_ = -1;
};

// Throws Error with the errno text ("Connection refused", ...).
Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout);

class Listener {
public:
    // port 0 picks an ephemeral port; see port().
    explicit Listener(std::uint16_t port, const std::string& bind_host = "127.0.0.1");
    std::uint16_t port() const { return port_; }
    // Waits up to `timeout` for a connection.
    std::optional<Socket> accept(std::chrono::milliseconds timeout);

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

} // namespace fdh
