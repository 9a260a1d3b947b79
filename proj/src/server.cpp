#include "torso/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "torso/error.hpp"
#include "torso/io.hpp"

namespace torso::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class WsSession;

struct Envelope {
    telemetry::ClientCommand cmd;
    std::weak_ptr<WsSession> origin;
};

struct Server::Impl {
    explicit Impl(ServerConfig c) : config(std::move(c)), params(config.mapping) {}

    ServerConfig config;
    net::io_context ioc{1};
    std::optional<tcp::acceptor> acceptor;
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> running{false};
    std::mutex done_m;
    std::condition_variable done_cv;

    telemetry::BoundedQueue<Envelope> commands{telemetry::kQueueCap, telemetry::Overflow::DropNewest};

    // Published by the simulation thread for the HTTP handlers.
    std::mutex snap_m;
    std::string session_json = "{}";
    MappingParams params;

    std::mutex subs_m;
    std::vector<std::weak_ptr<WsSession>> subscribers;

    void do_accept();
    void simulate();
    void broadcast(const std::string& msg);
    void subscribe(const std::shared_ptr<WsSession>& s) {
        std::lock_guard lock(subs_m);
        subscribers.push_back(s);
    }
    http::response<http::string_body> handle(const http::request<http::string_body>& req);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        const bool offered = req.count(http::field::sec_websocket_protocol) > 0;
        ws_.set_option(websocket::stream_base::decorator([offered](websocket::response_type& res) {
            if (offered) res.set(http::field::sec_websocket_protocol, telemetry::kSubprotocol);
        }));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    // Safe from any thread. Overflow drops the oldest unsent message.
    void send(std::string msg) {
        net::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)]() mutable {
            auto& q = self->out_;
            if (q.size() >= telemetry::kQueueCap) {
                // The front is in flight while writing; drop the next one instead.
                q.erase(self->writing_ ? q.begin() + 1 : q.begin());
            }
            q.push_back(std::move(msg));
            if (!self->writing_) self->do_write();
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        server_.subscribe(shared_from_this());
        do_read();
    }

    void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return; // closed or failed; the subscriber entry expires with us
        const auto text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        try {
            auto cmd = telemetry::parse_command(text);
            if (!server_.commands.push({std::move(cmd), weak_from_this()}))
                send(telemetry::error_frame("command queue full; command dropped"));
        } catch (const std::exception& e) {
            send(telemetry::error_frame(e.what()));
        }
        do_read();
    }

    void do_write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(out_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        out_.pop_front();
        if (ec) {
            out_.clear();
            writing_ = false;
            return;
        }
        if (out_.empty())
            writing_ = false;
        else
            do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> out_;
    bool writing_ = false;
    Server::Impl& server_;
};

namespace {

bool offers_subprotocol(const http::request<http::string_body>& req) {
    auto it = req.find(http::field::sec_websocket_protocol);
    if (it == req.end()) return true; // no negotiation requested
    const std::string offered(it->value());
    std::size_t pos = 0;
    while (pos <= offered.size()) {
        auto end = offered.find(',', pos);
        if (end == std::string::npos) end = offered.size();
        auto token = offered.substr(pos, end - pos);
        token.erase(0, token.find_first_not_of(' '));
        token.erase(token.find_last_not_of(' ') + 1);
        if (token == telemetry::kSubprotocol) return true;
        pos = end + 1;
    }
    return false;
}

http::response<http::string_body> json_response(const http::request<http::string_body>& req, http::status status,
                                                std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

std::string error_body(const std::string& msg) { return nlohmann::json{{"error", msg}}.dump(); }

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            if (req_.target() != "/ws") return send(json_response(req_, http::status::not_found, error_body("no such socket")));
            if (!offers_subprotocol(req_))
                return send(json_response(req_, http::status::bad_request,
                                          error_body(std::string("subprotocol must be ") + telemetry::kSubprotocol)));
            stream_.expires_never();
            std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
            return;
        }
        send(server_.handle(req_));
    }

    void send(http::response<http::string_body> res) {
        auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (sp->need_eof()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Server::Impl& server_;
};

} // namespace

void Server::Impl::do_accept() {
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec) return; // acceptor closed
        std::make_shared<HttpSession>(std::move(socket), *this)->run();
        do_accept();
    });
}

http::response<http::string_body> Server::Impl::handle(const http::request<http::string_body>& req) {
    const auto target = std::string(req.target());
    if (target == "/health") {
        if (req.method() != http::verb::get) return json_response(req, http::status::method_not_allowed, error_body("use GET"));
        return json_response(req, http::status::ok, R"({"status":"ok"})");
    }
    if (target == "/session") {
        if (req.method() != http::verb::get) return json_response(req, http::status::method_not_allowed, error_body("use GET"));
        std::lock_guard lock(snap_m);
        return json_response(req, http::status::ok, session_json);
    }
    if (target == "/params") {
        if (req.method() == http::verb::get) {
            std::lock_guard lock(snap_m);
            return json_response(req, http::status::ok, io::to_json(params).dump());
        }
        if (req.method() == http::verb::put) {
            try {
                const auto body = nlohmann::json::parse(req.body());
                MappingParams merged;
                {
                    std::lock_guard lock(snap_m);
                    merged = io::mapping_from_json(body, params);
                }
                if (!commands.push({telemetry::SetParams{body}, {}}))
                    return json_response(req, http::status::service_unavailable, error_body("command queue full"));
                return json_response(req, http::status::ok, io::to_json(merged).dump());
            } catch (const nlohmann::json::exception& e) {
                return json_response(req, http::status::bad_request, error_body(e.what()));
            } catch (const std::invalid_argument& e) {
                return json_response(req, http::status::bad_request, error_body(e.what()));
            }
        }
        return json_response(req, http::status::method_not_allowed, error_body("use GET or PUT"));
    }
    return json_response(req, http::status::not_found, error_body("no such endpoint"));
}

void Server::Impl::broadcast(const std::string& msg) {
    std::lock_guard lock(subs_m);
    std::erase_if(subscribers, [](const auto& w) { return w.expired(); });
    for (const auto& w : subscribers)
        if (auto s = w.lock()) s->send(msg);
}

void Server::Impl::simulate() {
    telemetry::LiveSession session(config.mapping, config.user);
    telemetry::RateLimiter limiter(config.telemetry_hz);
    const double dt = 1.0 / config.tick_hz;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(dt));
    auto next = std::chrono::steady_clock::now();
    while (running.load()) {
        while (auto e = commands.try_pop()) {
            try {
                session.apply(e->cmd);
            } catch (const std::exception& ex) {
                if (auto s = e->origin.lock()) s->send(telemetry::error_frame(ex.what()));
            }
        }
        session.tick(dt);
        const auto msg = telemetry::telemetry_encode(session.state());
        {
            std::lock_guard lock(snap_m);
            session_json = msg;
            params = session.params();
        }
        if (limiter.allow(session.state().t)) broadcast(msg);
        next += period;
        std::this_thread::sleep_until(next);
    }
}

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    impl_->config.mapping.validate();
    impl_->config.user.validate();
    if (!(impl_->config.tick_hz > 0.0) || !(impl_->config.telemetry_hz > 0.0))
        throw ConfigError("tick and telemetry rates must be positive");
}

Server::~Server() { stop(); }

unsigned short Server::start() {
    auto& im = *impl_;
    if (im.running.load()) throw std::logic_error("server already started");
    try {
        const tcp::endpoint ep{net::ip::make_address(im.config.host), im.config.port};
        im.acceptor.emplace(im.ioc);
        im.acceptor->open(ep.protocol());
        im.acceptor->set_option(net::socket_base::reuse_address(true));
        im.acceptor->bind(ep);
        im.acceptor->listen();
    } catch (const boost::system::system_error& e) {
        im.acceptor.reset();
        throw std::runtime_error("cannot bind " + im.config.host + ":" + std::to_string(im.config.port) + ": " +
                                 e.what());
    }
    const auto port = im.acceptor->local_endpoint().port();
    im.running = true;
    im.do_accept();
    im.io_thread = std::thread([&im] { im.ioc.run(); });
    im.sim_thread = std::thread([&im] { im.simulate(); });
    return port;
}

void Server::stop() {
    auto& im = *impl_;
    if (!im.running.exchange(false)) return;
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor->close(ec);
    });
    im.ioc.stop();
    if (im.io_thread.joinable()) im.io_thread.join();
    if (im.sim_thread.joinable()) im.sim_thread.join();
    {
        std::lock_guard lock(im.done_m);
    }
    im.done_cv.notify_all();
}

void Server::wait() {
    std::unique_lock lock(impl_->done_m);
    impl_->done_cv.wait(lock, [this] { return !impl_->running.load(); });
}

} // namespace torso::server
