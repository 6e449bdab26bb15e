#pragma once

// In-process HTTP servers for exercising the remote transports.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <string>
#include <thread>

#include "doctest.h"
#include "httplib.h"

namespace evitest {

struct ScopedServer {
    httplib::Server svr;
    std::thread runner;
    int port = 0;

    // Call after installing handlers on `svr`.
    void start() {
        port = svr.bind_to_any_port("127.0.0.1");
        runner = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    std::string url(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }

    ~ScopedServer() {
        svr.stop();
        if (runner.joinable()) runner.join();
    }
};

// Raw TCP listener that closes its first connection without answering, then
// serves a canned HTTP 200 JSON response to every later connection. Exists
// to observe retry-after-transport-failure behaviour, which a well-behaved
// httplib::Server cannot produce on demand.
struct FlakyOnceServer {
    explicit FlakyOnceServer(std::string json_body) : body_(std::move(json_body)) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd_ >= 0);
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        REQUIRE(::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
        socklen_t len = sizeof(addr);
        REQUIRE(::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
        port_ = ntohs(addr.sin_port);
        REQUIRE(::listen(fd_, 8) == 0);
        runner_ = std::thread([this] { serve(); });
    }

    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    int connections() const { return connections_.load(); }

    ~FlakyOnceServer() {
        stop_.store(true);
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        if (runner_.joinable()) runner_.join();
    }

private:
    void serve() {
        while (!stop_.load()) {
            int conn = ::accept(fd_, nullptr, nullptr);
            if (conn < 0) return;
            int n = connections_.fetch_add(1) + 1;
            if (n == 1) {
                ::close(conn);  // drop without a byte: transport failure
                continue;
            }
            // Drain the request headers+body best-effort, then answer.
            char buf[4096];
            ssize_t got = ::recv(conn, buf, sizeof(buf), 0);
            (void)got;
            std::string response =
                "HTTP/1.1 200 OK\r\n"
                "Content-Type: application/json\r\n"
                "Content-Length: " + std::to_string(body_.size()) + "\r\n"
                "Connection: close\r\n\r\n" + body_;
            ::send(conn, response.data(), response.size(), MSG_NOSIGNAL);
            ::close(conn);
        }
    }

    std::string body_;
    int fd_ = -1;
    int port_ = 0;
    std::thread runner_;
    std::atomic<int> connections_{0};
    std::atomic<bool> stop_{false};
};

}  // namespace evitest
