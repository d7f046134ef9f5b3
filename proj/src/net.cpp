#include "fdh/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <memory>

#include "fdh/error.hpp"

namespace fdh {

namespace {

std::string errno_text(const std::string& what) {
    return what + ": " + std::strerror(errno);
}

} // namespace

Endpoint parse_endpoint(std::string_view spec) {
    const auto colon = spec.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == spec.size()) {
        throw InvalidArgument("endpoint must be HOST:PORT, got '" + std::string(spec) + "'");
    }
    unsigned port = 0;
    const auto tail = spec.substr(colon + 1);
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), port);
    if (ec != std::errc{} || p != tail.data() + tail.size() || port == 0 || port > 65535) {
        throw InvalidArgument("bad port in endpoint '" + std::string(spec) + "'");
    }
    return {std::string(spec.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.release();
    }
    return *this;
}

int Socket::release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
}

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown_write() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t k = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (k < 0) {
            if (errno == EINTR) continue;
            throw Error(errno_text("send"));
        }
        off += static_cast<std::size_t>(k);
    }
}

std::optional<std::vector<std::uint8_t>> Socket::read_some(std::chrono::milliseconds timeout, bool& eof) {
    eof = false;
    pollfd pfd{fd_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (r < 0) {
        if (errno == EINTR) return std::nullopt;
        throw Error(errno_text("poll"));
    }
    if (r == 0) return std::nullopt;
    std::vector<std::uint8_t> buf(1 << 16);
    const ssize_t k = ::recv(fd_, buf.data(), buf.size(), 0);
    if (k < 0) {
        if (errno == EINTR || errno == EAGAIN) return std::nullopt;
        throw Error(errno_text("recv"));
    }
    if (k == 0) {
        eof = true;
        return std::vector<std::uint8_t>{};
    }
    buf.resize(static_cast<std::size_t>(k));
    return buf;
}

Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw Error("resolve " + ep.host + ": " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

    Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    if (!s.valid()) throw Error(errno_text("socket"));

    const int flags = ::fcntl(s.fd(), F_GETFL, 0);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    if (::connect(s.fd(), res->ai_addr, res->ai_addrlen) < 0) {
        if (errno != EINPROGRESS) throw Error(errno_text("connect " + ep.to_string()));
        pollfd pfd{s.fd(), POLLOUT, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (r == 0) throw Error("connect " + ep.to_string() + ": timed out");
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            errno = err;
            throw Error(errno_text("connect " + ep.to_string()));
        }
    }
    ::fcntl(s.fd(), F_SETFL, flags);
    const int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return s;
}

Listener::Listener(std::uint16_t port, const std::string& bind_host) {
    sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!sock_.valid()) throw Error(errno_text("socket"));
    const int one = 1;
    ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
        throw InvalidArgument("bad bind address " + bind_host);
    }
    if (::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        throw Error(errno_text("bind port " + std::to_string(port)));
    }
    if (::listen(sock_.fd(), 16) < 0) throw Error(errno_text("listen"));
    socklen_t len = sizeof(addr);
    ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
    pollfd pfd{sock_.fd(), POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (r <= 0) return std::nullopt;
    const int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd < 0) return std::nullopt;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(fd);
}

} // namespace fdh
