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

#include "cloak/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "cloak/error.hpp"

namespace cloak {
namespace {

[[noreturn]] void fail(const std::string& what) {
  throw Error("transport", what + ": " + std::strerror(errno));
}

void write_all(int fd, const char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send failed");
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

// Returns the number of bytes read; short only on EOF.
std::size_t read_all(int fd, char* data, std::size_t size) {
  std::size_t done = 0;
  while (done < size) {
    const ssize_t n = ::recv(fd, data + done, size - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("recv failed");
    }
    if (n == 0) break;
    done += static_cast<std::size_t>(n);
  }
  return done;
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    throw Error("transport", "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  return res;
}

}  // namespace

std::string encode_frame(std::string_view payload) {
  if (payload.size() > kMaxFrameBytes) throw Error("transport", "frame too large");
  const auto len = static_cast<std::uint32_t>(payload.size());
  std::string frame(4, '\0');
  frame[0] = static_cast<char>((len >> 24) & 0xff);
  frame[1] = static_cast<char>((len >> 16) & 0xff);
  frame[2] = static_cast<char>((len >> 8) & 0xff);
  frame[3] = static_cast<char>(len & 0xff);
  frame.append(payload);
  return frame;
}

void write_frame(int fd, std::string_view payload) {
  const std::string frame = encode_frame(payload);
  write_all(fd, frame.data(), frame.size());
}

std::optional<std::string> read_frame(int fd) {
  unsigned char header[4];
  const std::size_t got = read_all(fd, reinterpret_cast<char*>(header), 4);
  if (got == 0) return std::nullopt;
  if (got < 4) throw Error("transport", "truncated frame header");
  const std::uint32_t len = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (len > kMaxFrameBytes) throw Error("transport", "frame too large");
  std::string payload(len, '\0');
  if (read_all(fd, payload.data(), len) < len) throw Error("transport", "truncated frame");
  return payload;
}

std::optional<std::string> CloudEndpoint::handle(std::string_view wire) {
  switch (wire_type(wire)) {
    case MessageType::kHandshake:
      session_ = std::make_unique<CloudSession>(handshake_from_wire(wire), cfg_);
      return std::nullopt;
    case MessageType::kMeasurement: {
      if (!session_) throw Error("protocol", "measurement before handshake");
      StepDiagnostics diag;
      const ControlMsg reply = session_->on_measurement(measurement_from_wire(wire), &diag);
      return to_wire(reply, &diag);
    }
    case MessageType::kControl:
      break;
  }
  throw Error("protocol", "the cloud does not accept control messages");
}

void InProcessChannel::send(const std::string& wire) {
  if (auto reply = endpoint_.handle(wire)) pending_.push_back(std::move(*reply));
}

std::string InProcessChannel::receive() {
  if (pending_.empty()) throw Error("transport", "no reply pending");
  std::string reply = std::move(pending_.front());
  pending_.erase(pending_.begin());
  return reply;
}

TcpChannel::TcpChannel(const Endpoint& cloud) {
  addrinfo* res = resolve(cloud, false);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    throw Error("transport",
                "cannot connect to " + cloud.host + ":" + std::to_string(cloud.port));
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::send(const std::string& wire) { write_frame(fd_, wire); }

std::string TcpChannel::receive() {
  auto frame = read_frame(fd_);
  if (!frame) throw Error("transport", "cloud closed the connection");
  return std::move(*frame);
}

CloudServer::CloudServer(const Endpoint& listen, SolverConfig cfg) : cfg_(cfg) {
  addrinfo* res = resolve(listen, true);
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    fail("socket failed");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(listen_fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 || ::listen(listen_fd_, 16) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = err;
    fail("cannot listen on " + listen.host + ":" + std::to_string(listen.port));
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

CloudServer::~CloudServer() { stop(); }

void CloudServer::start() {
  acceptor_ = std::thread([this] { serve(0); });
}

void CloudServer::serve(int max_sessions) {
  int accepted = 0;
  while (!stopping_.load() && (max_sessions == 0 || accepted < max_sessions)) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    ++accepted;
    std::lock_guard<std::mutex> lock(workers_mutex_);
    workers_.emplace_back([this, fd] { handle_connection(fd); });
  }
  if (max_sessions > 0) {
    std::vector<std::thread> done;
    {
      std::lock_guard<std::mutex> lock(workers_mutex_);
      done.swap(workers_);
    }
    for (auto& t : done) t.join();
  }
}

void CloudServer::stop() {
  stopping_.store(true);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> done;
  {
    std::lock_guard<std::mutex> lock(workers_mutex_);
    done.swap(workers_);
  }
  for (auto& t : done) t.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void CloudServer::handle_connection(int fd) {
  CloudEndpoint endpoint(cfg_);
  try {
    while (auto frame = read_frame(fd)) {
      if (auto reply = endpoint.handle(*frame)) write_frame(fd, *reply);
    }
  } catch (const std::exception&) {
    // A malformed or failed session only ends its own connection.
  }
  ::close(fd);
  served_.fetch_add(1);
}

}  // namespace cloak
