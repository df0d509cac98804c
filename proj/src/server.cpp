#include "aimassist/server.hpp"

#include <chrono>
#include <deque>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "aimassist/error.hpp"

namespace aimassist {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, std::shared_ptr<const ServiceContext> context, std::string id,
               double heartbeat)
      : ws_(std::move(socket)),
        tick_timer_(ws_.get_executor()),
        ping_timer_(ws_.get_executor()),
        protocol_(std::move(context), std::move(id)),
        heartbeat_(std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(heartbeat))) {}

  void run() {
    ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
      res.set(beast::http::field::server, "aimassist");
    }));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    protocol_.open();
    flush();
    read();
    schedule_ping();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    const bool was_running = protocol_.running();
    protocol_.receive(beast::buffers_to_string(buffer_.data()));
    buffer_.consume(buffer_.size());
    if (!was_running && protocol_.running()) {
      epoch_ = Clock::now();
      ticks_ = 0;
      schedule_tick();
    }
    flush();
    read();
  }

  void schedule_tick() {
    ++ticks_;
    const auto period = std::chrono::duration<double>(static_cast<double>(ticks_) /
                                                      protocol_.tick_rate());
    tick_timer_.expires_at(epoch_ + std::chrono::duration_cast<Clock::duration>(period));
    tick_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->protocol_.tick();
      self->flush();
      if (self->protocol_.running()) self->schedule_tick();
    });
  }

  void schedule_ping() {
    ping_timer_.expires_after(heartbeat_);
    ping_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      if (!self->pinging_) {
        self->pinging_ = true;
        self->ws_.async_ping({}, [self](beast::error_code pec) {
          self->pinging_ = false;
          if (pec) self->close();
        });
      }
      self->schedule_ping();
    });
  }

  void flush() {
    if (writing_ || closed_) return;
    auto msg = protocol_.outbox().pop();
    if (!msg) return;
    writing_ = true;
    out_ = msg->dump();
    ws_.text(true);
    ws_.async_write(asio::buffer(out_), [self = shared_from_this()](beast::error_code ec,
                                                                     std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->close();
        return;
      }
      self->flush();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    tick_timer_.cancel();
    ping_timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).close(ignored);
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer tick_timer_;
  asio::steady_timer ping_timer_;
  Connection protocol_;
  Clock::duration heartbeat_;
  beast::flat_buffer buffer_;
  std::string out_;
  Clock::time_point epoch_;
  std::uint64_t ticks_ = 0;
  bool writing_ = false;
  bool pinging_ = false;
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::shared_ptr<const ServiceContext> context;
  ServerOptions options;
  std::uint64_t next_id = 0;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) {
        std::make_shared<WsConnection>(std::move(socket), context, "c" + std::to_string(++next_id),
                                       options.heartbeat)
            ->run();
      }
      accept();
    });
  }
};

Server::Server(std::shared_ptr<const ServiceContext> context, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!(options.heartbeat > 0.0)) throw ConfigError("heartbeat interval must be > 0");
  impl_->context = std::move(context);
  impl_->options = options;
  beast::error_code ec;
  const auto address = asio::ip::make_address(options.address, ec);
  if (ec) throw ConfigError("invalid listen address '" + options.address + "'");
  const tcp::endpoint endpoint{address, options.port};
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw IoError("cannot listen on port " + std::to_string(options.port) + ": " + ec.message());
  }
  impl_->accept();
}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() { impl_->ioc.run(); }

void Server::stop() {
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->ioc.stop();
  });
}

}  // namespace aimassist
