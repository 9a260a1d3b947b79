#pragma once

// HTTP + WebSocket front end for a LiveSession. One simulation thread owns the
// session; the network thread talks to it only through bounded queues.

#include <memory>
#include <string>

#include "torso/harness.hpp"
#include "torso/mapping.hpp"
#include "torso/telemetry.hpp"

namespace torso::server {

struct ServerConfig {
    std::string host = "127.0.0.1";
    unsigned short port = 8642; // 0 picks a free port
    MappingParams mapping;
    harness::SyntheticUser user;
    double tick_hz = telemetry::kTickHz;
    double telemetry_hz = telemetry::kTelemetryHz;
};

class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts the network and simulation threads. Returns the bound port.
    // Throws std::runtime_error when the address is unavailable.
    unsigned short start();
    void stop();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();

    struct Impl; // defined in server.cpp

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace torso::server
