#include "runtime/transport.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "core/error.hpp"

namespace dls::runtime {

std::string_view transport_name(TransportKind kind) noexcept {
  return kind == TransportKind::in_process ? "in-process" : "local-socket";
}

std::optional<TransportKind> parse_transport(std::string_view s) noexcept {
  if (s == "in-process" || s == "inprocess") return TransportKind::in_process;
  if (s == "local-socket" || s == "socket") return TransportKind::local_socket;
  return std::nullopt;
}

std::unique_ptr<Transport> make_transport(TransportKind kind, std::uint32_t ranks) {
  if (ranks == 0) throw Error(Errc::setup_error, "transport needs at least one rank");
  if (kind == TransportKind::in_process) return std::make_unique<InProcessTransport>(ranks);
  return std::make_unique<LocalSocketTransport>(ranks);
}

// ---- in-process ----------------------------------------------------------

InProcessTransport::InProcessTransport(std::uint32_t ranks) {
  to_rank_.reserve(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r) to_rank_.push_back(std::make_unique<Queue>());
}

bool InProcessTransport::push(Queue& q, const Message& m) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return false;
    q.items.push_back(m);
  }
  q.cv.notify_one();
  return true;
}

std::optional<Message> InProcessTransport::pop(Queue& q) {
  std::unique_lock lock(mu_);
  q.cv.wait(lock, [&] { return closed_ || !q.items.empty(); });
  if (closed_) return std::nullopt;
  Message m = q.items.front();
  q.items.pop_front();
  return m;
}

bool InProcessTransport::send_to_master(const Message& m) { return push(to_master_, m); }

std::optional<Message> InProcessTransport::recv_at_master() { return pop(to_master_); }

bool InProcessTransport::send_to_rank(std::uint32_t rank, const Message& m) {
  if (rank >= to_rank_.size()) throw Error(Errc::invalid_argument, "no such rank " + std::to_string(rank));
  return push(*to_rank_[rank], m);
}

std::optional<Message> InProcessTransport::recv_at_rank(std::uint32_t rank) {
  if (rank >= to_rank_.size()) throw Error(Errc::invalid_argument, "no such rank " + std::to_string(rank));
  return pop(*to_rank_[rank]);
}

void InProcessTransport::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  to_master_.cv.notify_all();
  for (auto& q : to_rank_) q->cv.notify_all();
}

bool InProcessTransport::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

// ---- local socket --------------------------------------------------------

namespace {

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// false on EOF or error
bool read_all(int fd, std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    data += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

std::optional<Message> read_frame(int fd) {
  Frame f;
  if (!read_all(fd, f.data(), f.size())) return std::nullopt;
  return decode_frame(f);
}

}  // namespace

LocalSocketTransport::LocalSocketTransport(std::uint32_t ranks)
    : master_fd_(ranks, -1), worker_fd_(ranks, -1), master_eof_(ranks, false) {
  for (std::uint32_t r = 0; r < ranks; ++r) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      const std::string reason = std::strerror(errno);
      for (std::uint32_t q = 0; q < r; ++q) {
        ::close(master_fd_[q]);
        ::close(worker_fd_[q]);
      }
      master_fd_.assign(ranks, -1);
      worker_fd_.assign(ranks, -1);
      throw Error(Errc::setup_error, "local-socket transport: rank " + std::to_string(r) + " of " +
                                         std::to_string(ranks) + ": socketpair failed: " + reason);
    }
    master_fd_[r] = fds[0];
    worker_fd_[r] = fds[1];
  }
}

LocalSocketTransport::~LocalSocketTransport() {
  for (int fd : master_fd_)
    if (fd >= 0) ::close(fd);
  for (int fd : worker_fd_)
    if (fd >= 0) ::close(fd);
}

bool LocalSocketTransport::send_to_master(const Message& m) {
  if (closed_ || m.rank >= worker_fd_.size()) return false;
  const Frame f = encode_frame(m);
  return write_all(worker_fd_[m.rank], f.data(), f.size());
}

std::optional<Message> LocalSocketTransport::recv_at_master() {
  while (pending_.empty()) {
    if (closed_) return std::nullopt;
    std::vector<pollfd> fds;
    std::vector<std::uint32_t> who;
    for (std::uint32_t r = 0; r < master_fd_.size(); ++r) {
      if (master_eof_[r]) continue;
      fds.push_back({master_fd_[r], POLLIN, 0});
      who.push_back(r);
    }
    if (fds.empty()) return std::nullopt;
    const int n = ::poll(fds.data(), fds.size(), -1);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::runtime_failure, std::string("poll failed: ") + std::strerror(errno));
    }
    // one frame per ready rank, in rank order
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].revents == 0) continue;
      auto m = read_frame(fds[i].fd);
      if (m)
        pending_.push_back(*m);
      else
        master_eof_[who[i]] = true;
    }
  }
  Message m = pending_.front();
  pending_.pop_front();
  return m;
}

bool LocalSocketTransport::send_to_rank(std::uint32_t rank, const Message& m) {
  if (rank >= master_fd_.size()) throw Error(Errc::invalid_argument, "no such rank " + std::to_string(rank));
  if (closed_) return false;
  const Frame f = encode_frame(m);
  return write_all(master_fd_[rank], f.data(), f.size());
}

std::optional<Message> LocalSocketTransport::recv_at_rank(std::uint32_t rank) {
  if (rank >= worker_fd_.size()) throw Error(Errc::invalid_argument, "no such rank " + std::to_string(rank));
  if (closed_) return std::nullopt;
  return read_frame(worker_fd_[rank]);
}

void LocalSocketTransport::close() {
  if (closed_.exchange(true)) return;
  for (int fd : master_fd_) ::shutdown(fd, SHUT_RDWR);
  for (int fd : worker_fd_) ::shutdown(fd, SHUT_RDWR);
}

bool LocalSocketTransport::closed() const { return closed_; }

}  // namespace dls::runtime
