#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "reseq/errors.hpp"
#include "reseq/pipeline.hpp"

namespace httplib {
class Server;
}

namespace reseq {

// The listening socket could not be bound (usually: port already in use).
class BindError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "bind"; }
};

// JSON-over-HTTP front end for one engine snapshot.
//
// Every request reads the snapshot pointer once and works on that object, so a
// concurrent reload never shows it a mix of old and new state. Reloads build a
// complete new snapshot off to the side and swap the pointer under a lock.
class EngineServer {
public:
    using Builder = std::function<std::shared_ptr<const EngineSnapshot>()>;

    EngineServer(std::shared_ptr<const EngineSnapshot> initial, Builder rebuild);
    ~EngineServer();
    EngineServer(const EngineServer&) = delete;
    EngineServer& operator=(const EngineServer&) = delete;

    // Returns the bound port (port 0 picks a free one). BindError on failure.
    int bind(const std::string& host, int port);
    // Serves until stop(). Call after bind().
    void run();
    void stop();
    // Blocks until run() is accepting connections.
    void wait_until_ready() const;

    std::shared_ptr<const EngineSnapshot> snapshot() const;
    void replace(std::shared_ptr<const EngineSnapshot> next);

private:
    void install_routes();

    std::unique_ptr<httplib::Server> http_;
    Builder rebuild_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const EngineSnapshot> snapshot_;
    std::mutex reload_mutex_;
};

}  // namespace reseq
