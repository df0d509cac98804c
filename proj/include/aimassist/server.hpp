#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "aimassist/service.hpp"

namespace aimassist {

struct ServerOptions {
  std::string address = "0.0.0.0";
  std::uint16_t port = 8080;  // 0 picks an ephemeral port
  double heartbeat = 5.0;     // s between WebSocket pings
};

/// WebSocket front end. Every connection owns one protocol state and its
/// session ticks on its own timer; all handlers run on a single I/O thread.
class Server {
 public:
  /// Binds immediately; throws IoError naming the port when it is taken.
  Server(std::shared_ptr<const ServiceContext> context, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  /// Serve until stop() is called.
  void run();
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aimassist
