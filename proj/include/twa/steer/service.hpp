#ifndef TWA_STEER_SERVICE_HPP
#define TWA_STEER_SERVICE_HPP

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "twa/errors.hpp"
#include "twa/packing/run.hpp"
#include "twa/steer/frames.hpp"
#include "twa/steer/websocket.hpp"

namespace twa::steer {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 7870;  // 0 picks a free port
  long snapshot_every = 1;
  std::chrono::milliseconds min_interval{33};
  std::size_t max_backlog_bytes = 16u << 20;  // per client; snapshots beyond it are skipped
  std::chrono::milliseconds sniff_grace{100};  // silent connections become raw after this
};

/// Builds the wire snapshot for the run's current state.
inline Snapshot make_snapshot(const packing::PackingRun& run) {
  Snapshot s;
  s.iteration = run.iteration();
  const auto centers = run.centers();
  s.circles.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    s.circles.push_back({static_cast<std::int64_t>(i), centers[i].x, centers[i].y});
  }
  s.radius = run.radius();
  s.density = run.model().instance.density();
  s.max_overlap = run.last().max_overlap;
  s.converged = run.last().done;
  return s;
}

/// Serves a live packing run to any number of clients over TCP.
///
/// A connection opening with "GET " is upgraded to a WebSocket and carries
/// one frame per text message; any other connection uses length-delimited
/// frames. A connection that stays silent for sniff_grace is treated as
/// raw so that listen-only clients receive snapshots. The caller's thread steps the run (serve()); a background thread
/// owns the sockets. Commands are handed to the run's queue and take effect
/// in the next global-reasoner section.
class SteerService {
 public:
  SteerService(packing::PackingRun& run, ServiceOptions opts) : run_(&run), opts_(std::move(opts)) {
    if (opts_.snapshot_every < 1) throw InvalidConfig("snapshot_every must be >= 1");
  }
  SteerService(const SteerService&) = delete;
  SteerService& operator=(const SteerService&) = delete;
  ~SteerService() { stop(); }

  /// Binds and starts the I/O thread. Throws PortInUse.
  void start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
    if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
      close_listener();
      throw InvalidConfig("bad listen address '" + opts_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      const int err = errno;
      close_listener();
      if (err == EADDRINUSE) throw PortInUse("port " + std::to_string(opts_.port) + " is already in use");
      throw Error(std::string("bind: ") + std::strerror(err));
    }
    if (::listen(listen_fd_, 16) < 0) {
      const int err = errno;
      close_listener();
      throw Error(std::string("listen: ") + std::strerror(err));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
    if (::pipe(wake_) < 0) throw Error(std::string("pipe: ") + std::strerror(errno));
    set_nonblocking(wake_[0]);
    set_nonblocking(wake_[1]);
    running_ = true;
    io_ = std::thread([this] { io_loop(); });
  }

  /// Steps the run until `stop_flag` is set. Idles while paused or done with
  /// no pending commands. `observer` sees every status.
  void serve(const std::atomic<bool>& stop_flag,
             const std::function<void(const packing::PackStatus&)>& observer = {}) {
    while (!stop_flag.load() && running_) {
      if (run_->paused() || (run_->last().done && !run_->has_pending_commands())) {
        publish_joiners();
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        continue;
      }
      const packing::PackStatus s = run_->step();
      if (observer) observer(s);
      publish(s);
    }
  }

  /// Broadcast policy for one finished iteration: every snapshot_every
  /// iterations, at least min_interval apart, and always on completion.
  void publish(const packing::PackStatus& s) {
    const auto now = std::chrono::steady_clock::now();
    const bool due = s.engine.iteration % opts_.snapshot_every == 0 &&
                     (sent_any_ == false || now - last_sent_ >= opts_.min_interval);
    if (due || s.done) {
      broadcast(encode(make_snapshot(*run_)), false);
      last_sent_ = now;
      sent_any_ = true;
    } else {
      publish_joiners();
    }
  }

  /// Sends a full snapshot to clients that have not received one yet.
  void publish_joiners() {
    if (joiners_.load() == 0) return;
    broadcast(encode(make_snapshot(*run_)), true);
  }

  void stop() {
    if (!running_.exchange(false)) {
      close_listener();
      return;
    }
    wake();
    if (io_.joinable()) io_.join();
    std::lock_guard lock(mu_);
    for (Client& c : clients_) ::close(c.fd);
    clients_.clear();
    close_listener();
    for (int& fd : wake_) {
      if (fd >= 0) ::close(fd);
      fd = -1;
    }
  }

  [[nodiscard]] int port() const { return port_; }
  [[nodiscard]] std::size_t client_count() const {
    std::lock_guard lock(mu_);
    return clients_.size();
  }
  [[nodiscard]] const ServiceOptions& options() const { return opts_; }

 private:
  enum class Mode { Unknown, Raw, WebSocket };

  struct Client {
    int fd = -1;
    Mode mode = Mode::Unknown;
    std::string in;   // bytes before the mode is known
    std::string out;  // pending outbound bytes
    std::string deferred;  // replies held until the first snapshot is out
    FrameReader raw;
    ws::Parser wsp;
    bool has_snapshot = false;
    bool closing = false;
    std::chrono::steady_clock::time_point accepted{};
  };

  static void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

  void close_listener() {
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
  }

  void wake() {
    if (wake_[1] >= 0) {
      const char b = 1;
      [[maybe_unused]] auto r = ::write(wake_[1], &b, 1);
    }
  }

  static std::string wrap(Mode m, const std::string& payload) {
    return m == Mode::WebSocket ? ws::encode_frame(ws::kText, payload) : delimit(payload);
  }

  void queue_frame(Client& c, const std::string& payload) {
    (c.has_snapshot ? c.out : c.deferred) += wrap(c.mode, payload);
  }

  void broadcast(const std::string& payload, bool joiners_only) {
    {
      std::lock_guard lock(mu_);
      for (Client& c : clients_) {
        if (c.mode == Mode::Unknown || c.closing) continue;
        if (joiners_only && c.has_snapshot) continue;
        if (c.has_snapshot && c.out.size() > opts_.max_backlog_bytes) continue;
        c.out += wrap(c.mode, payload);
        if (!c.has_snapshot) {
          c.has_snapshot = true;
          --joiners_;
          c.out += c.deferred;
          c.deferred.clear();
        }
      }
    }
    wake();
  }

  void send_error(Client& c, const std::string& message, std::optional<std::int64_t> offset) {
    queue_frame(c, encode(ErrorFrame{message, offset}));
  }

  void handle_payload(Client& c, std::string_view payload) {
    try {
      Frame f = decode(payload);
      if (auto* cmd = std::get_if<Command>(&f)) {
        run_->submit(*cmd);
      } else {
        send_error(c, "clients may only send command frames", std::nullopt);
      }
    } catch (const DecodeError& e) {
      send_error(c, e.what(), static_cast<std::int64_t>(e.offset()));
    } catch (const Error& e) {
      send_error(c, e.what(), std::nullopt);
    }
  }

  void became_known(Client& c) {
    c.has_snapshot = false;
    ++joiners_;
  }

  void on_bytes(Client& c, std::string_view bytes) {
    if (c.mode == Mode::Unknown) {
      c.in.append(bytes);
      if (c.in.size() < 4 && std::string_view("GET ").starts_with(c.in)) return;
      if (c.in.starts_with("GET ")) {
        const auto end = c.in.find("\r\n\r\n");
        if (end == std::string::npos) {
          if (c.in.size() > 16384) c.closing = true;
          return;
        }
        const std::string request = c.in.substr(0, end + 4);
        const std::string rest = c.in.substr(end + 4);
        c.in.clear();
        const auto response = ws::handshake_response(request);
        if (!response) {
          c.out += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n";
          c.closing = true;
          return;
        }
        c.out += *response;
        c.mode = Mode::WebSocket;
        became_known(c);
        if (!rest.empty()) on_bytes(c, rest);
      } else {
        c.mode = Mode::Raw;
        became_known(c);
        const std::string rest = std::move(c.in);
        c.in.clear();
        on_bytes(c, rest);
      }
      return;
    }
    if (c.mode == Mode::Raw) {
      c.raw.feed(bytes);
      while (true) {
        try {
          auto p = c.raw.next();
          if (!p) break;
          handle_payload(c, *p);
        } catch (const DecodeError& e) {
          send_error(c, e.what(), static_cast<std::int64_t>(e.offset()));
        }
      }
      return;
    }
    c.wsp.feed(bytes);
    while (true) {
      std::optional<ws::Message> m;
      try {
        m = c.wsp.next();
      } catch (const DecodeError& e) {
        send_error(c, e.what(), std::nullopt);
        c.closing = true;
        return;
      }
      if (!m) break;
      switch (m->opcode) {
        case ws::kText:
        case ws::kBinary:
          handle_payload(c, m->payload);
          break;
        case ws::kPing:
          c.out += ws::encode_frame(ws::kPong, m->payload);
          break;
        case ws::kClose:
          c.out += ws::encode_frame(ws::kClose, "");
          c.closing = true;
          return;
        default:
          break;
      }
    }
  }

  void io_loop() {
    std::vector<pollfd> fds;
    char buf[65536];
    while (running_) {
      fds.clear();
      fds.push_back({listen_fd_, POLLIN, 0});
      fds.push_back({wake_[0], POLLIN, 0});
      {
        std::lock_guard lock(mu_);
        for (const Client& c : clients_) {
          short ev = POLLIN;
          if (!c.out.empty()) ev |= POLLOUT;
          fds.push_back({c.fd, ev, 0});
        }
      }
      ::poll(fds.data(), fds.size(), 50);
      if (!running_) break;
      if (fds[1].revents & POLLIN) {
        while (::read(wake_[0], buf, sizeof buf) > 0) {
        }
      }
      if (fds[0].revents & POLLIN) {
        while (true) {
          const int fd = ::accept(listen_fd_, nullptr, nullptr);
          if (fd < 0) break;
          set_nonblocking(fd);
          int one = 1;
          ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
          std::lock_guard lock(mu_);
          clients_.push_back(Client{});
          clients_.back().fd = fd;
          clients_.back().accepted = std::chrono::steady_clock::now();
        }
      }
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      for (Client& c : clients_) {
        if (c.mode == Mode::Unknown && c.in.empty() && !c.closing && now - c.accepted >= opts_.sniff_grace) {
          c.mode = Mode::Raw;
          became_known(c);
        }
        // read
        while (!c.closing) {
          const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
          if (n > 0) {
            on_bytes(c, std::string_view(buf, static_cast<std::size_t>(n)));
          } else if (n == 0) {
            c.closing = true;
            c.out.clear();
          } else {
            if (errno != EAGAIN && errno != EWOULDBLOCK) {
              c.closing = true;
              c.out.clear();
            }
            break;
          }
        }
        // write
        while (!c.out.empty()) {
          const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
          if (n > 0) {
            c.out.erase(0, static_cast<std::size_t>(n));
          } else {
            if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
              c.out.clear();
              c.closing = true;
            }
            break;
          }
        }
      }
      for (auto it = clients_.begin(); it != clients_.end();) {
        if (it->closing && it->out.empty()) {
          if (it->mode != Mode::Unknown && !it->has_snapshot) --joiners_;
          ::close(it->fd);
          it = clients_.erase(it);
        } else {
          ++it;
        }
      }
    }
  }

  packing::PackingRun* run_;
  ServiceOptions opts_;
  int listen_fd_ = -1;
  int wake_[2] = {-1, -1};
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<int> joiners_{0};
  std::thread io_;
  mutable std::mutex mu_;
  std::list<Client> clients_;
  std::chrono::steady_clock::time_point last_sent_{};
  bool sent_any_ = false;
};

}  // namespace twa::steer

#endif  // TWA_STEER_SERVICE_HPP
