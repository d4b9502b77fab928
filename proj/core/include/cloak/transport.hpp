// Copyright 2026 The cloak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cloak/protocol.hpp"
#include "cloak/qp.hpp"

namespace cloak {

// Frames are a 4-byte big-endian length followed by that many bytes of UTF-8
// JSON.
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

std::string encode_frame(std::string_view payload);
void write_frame(int fd, std::string_view payload);
// std::nullopt on orderly EOF before a frame starts.
std::optional<std::string> read_frame(int fd);

// Cloud side of one session at the wire level: feed it plant messages, get
// back the reply (none for the handshake).
class CloudEndpoint {
 public:
  explicit CloudEndpoint(SolverConfig cfg = {}) : cfg_(cfg) {}

  std::optional<std::string> handle(std::string_view wire);

 private:
  SolverConfig cfg_;
  std::unique_ptr<CloudSession> session_;
};

// Plant-side view of the link to the cloud.
class CloudChannel {
 public:
  virtual ~CloudChannel() = default;
  virtual void send(const std::string& wire) = 0;
  virtual std::string receive() = 0;
};

class InProcessChannel final : public CloudChannel {
 public:
  explicit InProcessChannel(SolverConfig cfg = {}) : endpoint_(cfg) {}
  void send(const std::string& wire) override;
  std::string receive() override;

 private:
  CloudEndpoint endpoint_;
  std::vector<std::string> pending_;
};

class TcpChannel final : public CloudChannel {
 public:
  explicit TcpChannel(const Endpoint& cloud);
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send(const std::string& wire) override;
  std::string receive() override;

 private:
  int fd_ = -1;
};

// Serves cloud sessions over TCP, one session per connection, each on its own
// thread with no state shared between sessions.
class CloudServer {
 public:
  CloudServer(const Endpoint& listen, SolverConfig cfg = {});
  ~CloudServer();
  CloudServer(const CloudServer&) = delete;
  CloudServer& operator=(const CloudServer&) = delete;

  // Actual bound port (useful when listening on port 0).
  std::uint16_t port() const { return port_; }

  void start();  // accept loop on a background thread
  // Blocking accept loop; returns after `max_sessions` sessions finished
  // (0 means until stop()).
  void serve(int max_sessions = 0);
  void stop();

  int sessions_served() const { return served_.load(); }

 private:
  void handle_connection(int fd);

  SolverConfig cfg_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> served_{0};
  std::thread acceptor_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
};

}  // namespace cloak
