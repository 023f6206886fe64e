#pragma once

// HTTP/WebSocket front end for the session manager: `/guard` speaks the
// snapshot protocol (one JSON document per text frame), `/healthz`
// answers a plain GET. One thread per connection.

#include "phishlab/guard.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

namespace phishlab {

class GuardServer {
public:
    GuardServer(ReferenceList refs, GuardConfig cfg) : sessions_(std::move(refs), std::move(cfg)) {}
    GuardServer(const GuardServer&) = delete;
    GuardServer& operator=(const GuardServer&) = delete;
    ~GuardServer() { stop(); }

    /// Binds and starts accepting in the background. Port 0 picks a free
    /// port; see port().
    void start() {
        namespace net = boost::asio;
        const auto& cfg = sessions_.config();
        net::ip::tcp::endpoint ep(net::ip::make_address(cfg.bind_host), cfg.bind_port);
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        reaper_thread_ = std::thread([this] { reap_loop(); });
    }

    unsigned short port() const { return port_; }
    SessionManager& sessions() { return sessions_; }

    /// Stops accepting, closes every open connection and joins all threads.
    void stop() {
        if (!running_.exchange(false)) return;
        {
            std::lock_guard lock(mu_);
            stop_cv_.notify_all();
        }
        // shutdown() wakes the blocked accept(); close only after the join
        ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
        if (accept_thread_.joinable()) accept_thread_.join();
        boost::system::error_code ec;
        acceptor_.close(ec);
        if (reaper_thread_.joinable()) reaper_thread_.join();
        std::list<Connection> conns;
        {
            std::lock_guard lock(mu_);
            for (auto& c : connections_) ::shutdown(c.sock->native_handle(), SHUT_RDWR);
            conns.splice(conns.end(), connections_);
        }
        for (auto& c : conns)
            if (c.thread.joinable()) c.thread.join();
    }

    /// Blocks until stop() is called from another thread.
    void wait() {
        std::unique_lock lock(mu_);
        stop_cv_.wait(lock, [this] { return !running_; });
    }

private:
    using Clock = std::chrono::steady_clock;

    // The socket outlives its thread so shutdown() never hits a reused fd.
    struct Connection {
        std::shared_ptr<boost::asio::ip::tcp::socket> sock;
        std::shared_ptr<std::atomic<bool>> done;
        std::shared_ptr<std::atomic<Clock::rep>> last_active;
        std::thread thread;
    };

    void accept_loop() {
        while (running_) {
            boost::system::error_code ec;
            auto sock = std::make_shared<boost::asio::ip::tcp::socket>(io_);
            acceptor_.accept(*sock, ec);
            if (ec) {
                if (!running_) return;
                continue;
            }
            std::lock_guard lock(mu_);
            prune_finished();
            Connection c{sock, std::make_shared<std::atomic<bool>>(false),
                         std::make_shared<std::atomic<Clock::rep>>(Clock::now().time_since_epoch().count()), {}};
            c.thread = std::thread([this, sock, done = c.done, active = c.last_active] {
                serve_connection(*sock, *active);
                done->store(true);
            });
            connections_.push_back(std::move(c));
        }
    }

    // Caller holds mu_.
    void prune_finished() {
        for (auto it = connections_.begin(); it != connections_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = connections_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void reap_loop() {
        std::unique_lock lock(mu_);
        const auto period = std::chrono::milliseconds(std::max(10, sessions_.config().session_timeout_ms / 4));
        while (running_) {
            stop_cv_.wait_for(lock, period, [this] { return !running_; });
            prune_finished();
            const auto now = Clock::now();
            const auto limit = std::chrono::milliseconds(sessions_.config().session_timeout_ms);
            for (auto& c : connections_)
                if (!c.done->load() && now - Clock::time_point(Clock::duration(c.last_active->load())) > limit)
                    ::shutdown(c.sock->native_handle(), SHUT_RDWR);
            lock.unlock();
            sessions_.reap(now);
            lock.lock();
        }
    }

    void serve_connection(boost::asio::ip::tcp::socket& sock, std::atomic<Clock::rep>& last_active) {
        namespace beast = boost::beast;
        namespace http = beast::http;
        namespace websocket = beast::websocket;
        try {
            beast::flat_buffer buffer;
            http::request<http::string_body> req;
            http::read(sock, buffer, req);
            if (websocket::is_upgrade(req)) {
                if (req.target() != "/guard") {
                    write_plain(sock, req, http::status::not_found, "not found\n");
                    return;
                }
                websocket::stream<boost::asio::ip::tcp::socket&> ws(sock);
                ws.read_message_max(64u << 20);
                ws.accept(req);
                for (;;) {
                    beast::flat_buffer msg;
                    ws.read(msg);
                    last_active.store(Clock::now().time_since_epoch().count());
                    for (const auto& reply : sessions_.handle(beast::buffers_to_string(msg.data()))) {
                        ws.text(true);
                        ws.write(boost::asio::buffer(reply));
                    }
                }
            }
            if (req.target() == "/healthz" && req.method() == http::verb::get) {
                nlohmann::ordered_json body{{"status", "ok"}, {"active_sessions", sessions_.active()}};
                write_plain(sock, req, http::status::ok, body.dump() + "\n", "application/json");
            } else {
                write_plain(sock, req, http::status::not_found, "not found\n");
            }
        } catch (const std::exception&) {
            // peer went away, timed out, or the server is stopping
        }
        ::shutdown(sock.native_handle(), SHUT_RDWR);
    }

    static void write_plain(boost::asio::ip::tcp::socket& sock, const boost::beast::http::request<boost::beast::http::string_body>& req,
                            boost::beast::http::status status, std::string body,
                            const char* content_type = "text/plain") {
        namespace http = boost::beast::http;
        http::response<http::string_body> res{status, req.version()};
        res.set(http::field::content_type, content_type);
        res.keep_alive(false);
        res.body() = std::move(body);
        res.prepare_payload();
        http::write(sock, res);
        boost::system::error_code ec;
        sock.shutdown(boost::asio::ip::tcp::socket::shutdown_send, ec);
    }

    SessionManager sessions_;
    boost::asio::io_context io_;
    boost::asio::ip::tcp::acceptor acceptor_{io_};
    unsigned short port_ = 0;
    std::atomic<bool> running_{false};
    std::mutex mu_;
    std::condition_variable stop_cv_;
    std::thread accept_thread_;
    std::thread reaper_thread_;
    std::list<Connection> connections_;
};

}  // namespace phishlab
