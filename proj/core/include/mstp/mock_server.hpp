#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "mstp/agents.hpp"
#include "mstp/generation.hpp"
#include "mstp/schema.hpp"

namespace httplib {
class Server;
}

namespace mstp {

/// In-process HTTP server that answers the backend protocol from a local
/// decision stack and generator. Used by tests and `mstp serve-mock`.
class MockServer {
 public:
  MockServer(std::shared_ptr<const LevelSchema> schema, DecisionStack stack, std::shared_ptr<Generator> generator,
             unsigned worker_threads = 16);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port. Throws BindError.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  // Stops accepting connections and waits for in-flight requests.
  void stop();

  int port() const noexcept { return port_; }
  std::string endpoint() const;
  std::uint64_t request_count() const noexcept { return requests_.load(); }
  bool running() const noexcept { return running_.load(); }

 private:
  void install_routes();

  std::shared_ptr<const LevelSchema> schema_;
  DecisionStack stack_;
  std::shared_ptr<Generator> generator_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace mstp
