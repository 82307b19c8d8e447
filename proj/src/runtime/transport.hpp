#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include "runtime/message.hpp"

namespace dls::runtime {

enum class TransportKind { in_process, local_socket };

std::string_view transport_name(TransportKind kind) noexcept;
std::optional<TransportKind> parse_transport(std::string_view s) noexcept;

/// Star topology between one master endpoint and `ranks` worker endpoints.
/// Each rank endpoint has a single writer and a single reader; the master
/// endpoint is used only by the control thread.
///
/// After close() every blocked receive returns nullopt and sends return
/// false, which is how an aborted run unwinds.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual bool send_to_master(const Message& m) = 0;
  /// Blocks for the next message from any rank, in arrival order.
  virtual std::optional<Message> recv_at_master() = 0;
  virtual bool send_to_rank(std::uint32_t rank, const Message& m) = 0;
  virtual std::optional<Message> recv_at_rank(std::uint32_t rank) = 0;
  virtual void close() = 0;
  virtual bool closed() const = 0;
  virtual TransportKind kind() const noexcept = 0;
  virtual std::uint32_t ranks() const noexcept = 0;
};

/// Throws setup-error naming the rank whose endpoint could not be created.
std::unique_ptr<Transport> make_transport(TransportKind kind, std::uint32_t ranks);

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(std::uint32_t ranks);

  bool send_to_master(const Message& m) override;
  std::optional<Message> recv_at_master() override;
  bool send_to_rank(std::uint32_t rank, const Message& m) override;
  std::optional<Message> recv_at_rank(std::uint32_t rank) override;
  void close() override;
  bool closed() const override;
  TransportKind kind() const noexcept override { return TransportKind::in_process; }
  std::uint32_t ranks() const noexcept override { return static_cast<std::uint32_t>(to_rank_.size()); }

 private:
  struct Queue {
    std::deque<Message> items;
    std::condition_variable cv;
  };
  bool push(Queue& q, const Message& m);
  std::optional<Message> pop(Queue& q);

  mutable std::mutex mu_;
  bool closed_ = false;
  Queue to_master_;
  std::vector<std::unique_ptr<Queue>> to_rank_;
};

/// One AF_UNIX stream socketpair per rank carrying length-prefixed frames.
class LocalSocketTransport final : public Transport {
 public:
  explicit LocalSocketTransport(std::uint32_t ranks);
  ~LocalSocketTransport() override;
  LocalSocketTransport(const LocalSocketTransport&) = delete;
  LocalSocketTransport& operator=(const LocalSocketTransport&) = delete;

  bool send_to_master(const Message& m) override;
  std::optional<Message> recv_at_master() override;
  bool send_to_rank(std::uint32_t rank, const Message& m) override;
  std::optional<Message> recv_at_rank(std::uint32_t rank) override;
  void close() override;
  bool closed() const override;
  TransportKind kind() const noexcept override { return TransportKind::local_socket; }
  std::uint32_t ranks() const noexcept override { return static_cast<std::uint32_t>(master_fd_.size()); }

 private:
  std::vector<int> master_fd_;
  std::vector<int> worker_fd_;
  std::vector<bool> master_eof_;
  std::deque<Message> pending_;
  std::atomic<bool> closed_{false};
};

}  // namespace dls::runtime
