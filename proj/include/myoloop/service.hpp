// Copyright 2026 The myoloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Session engine behind the streaming endpoint and the WebSocket server the
// trainer UI talks to.

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "myoloop/harness.hpp"
#include "myoloop/io.hpp"
#include "myoloop/session_config.hpp"

namespace myoloop {

/// Latest-value cell between message intake and the control loop. Writes
/// overwrite; nothing queues.
template <typename T>
class LatestValue {
 public:
  void store(T value) {
    std::lock_guard lock(mu_);
    value_ = std::move(value);
    ++writes_;
  }
  std::optional<T> load() const {
    std::lock_guard lock(mu_);
    return value_;
  }
  std::uint64_t writes() const {
    std::lock_guard lock(mu_);
    return writes_;
  }

 private:
  mutable std::mutex mu_;
  std::optional<T> value_;
  std::uint64_t writes_ = 0;
};

/// Interactive matching task driven by protocol messages.
struct ActiveTask {
  TaskSpec spec;
  std::vector<Target> targets;
  std::size_t trial = 0;
  std::size_t step = 0;
  TrialTrace trace;  // current trial
};

/// Engine state for one operator: owns controller, hand and task state.
/// Not thread safe; the control loop is its only user.
class SessionEngine {
 public:
  SessionEngine(SessionConfig cfg, ReferenceSet refs);

  /// Parses and applies one inbound message; returns messages to send back
  /// (errors). Activation messages are stored, not applied.
  std::vector<Json> handle_message(const std::string& text);

  /// Advances one control step using the latest activation; returns the
  /// frame message followed by any task messages.
  std::vector<Json> step();

  void set_activation(std::vector<double> values);
  const SessionConfig& config() const noexcept { return cfg_; }
  const HandState& hand() const noexcept { return hand_; }
  const ControllerState& controller() const noexcept { return ctrl_; }
  double now_ms() const noexcept { return t_ms_; }
  bool task_active() const noexcept { return task_.has_value(); }

 private:
  std::vector<Json> start_task(const Json& msg);

  SessionConfig cfg_;
  ReferenceSet refs_;
  ControllerState ctrl_;
  HandState hand_;
  Rng rng_;
  std::vector<double> activation_;
  VirtualObject object_;
  std::optional<ActiveTask> task_;
  double t_ms_ = 0.0;
};

bool parse_activation(const Json& msg, std::size_t rank, std::vector<double>& out,
                      std::string& error);

/// Single-client WebSocket server running the control loop at the session
/// control rate. Messages are JSON text frames.
class StreamServer {
 public:
  StreamServer(SessionConfig cfg, ReferenceSet refs);
  ~StreamServer();

  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  /// Binds and starts accepting; port 0 picks a free port.
  void start(std::uint16_t port, const std::string& host = "127.0.0.1");
  void stop();
  std::uint16_t port() const noexcept { return port_; }
  /// Blocks until stop() is called from another thread or a signal.
  void wait();

  std::uint64_t frames_sent() const noexcept { return frames_sent_; }

 private:
  void accept_loop();
  void serve_client(int fd, SessionEngine& engine);

  SessionConfig cfg_;
  ReferenceSet refs_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::thread accept_thread_;
};

namespace ws {

/// Sec-WebSocket-Accept for a client key.
std::string accept_key(const std::string& client_key);

enum class Opcode : std::uint8_t { kText = 0x1, kBinary = 0x2, kClose = 0x8, kPing = 0x9, kPong = 0xA };

struct Frame {
  Opcode opcode = Opcode::kText;
  std::string payload;
};

std::string encode_frame(Opcode opcode, const std::string& payload, bool mask,
                         std::uint32_t mask_key = 0);

/// Reads one complete frame (fragments joined). nullopt on EOF or error.
std::optional<Frame> read_frame(int fd);

bool write_all(int fd, const std::string& data);

/// Minimal blocking client, used by tests and the replay tooling.
class Client {
 public:
  Client() = default;
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  bool connect(const std::string& host, std::uint16_t port, const std::string& path = "/");
  bool send_text(const std::string& text);
  /// nullopt on close or after `timeout_ms` without data.
  std::optional<std::string> recv_text(int timeout_ms = 2000);
  void close();

 private:
  int fd_ = -1;
  std::uint32_t mask_seed_ = 0x9e3779b9u;
};

}  // namespace ws

}  // namespace myoloop
