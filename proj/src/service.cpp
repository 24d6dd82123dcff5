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

#include "myoloop/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>

#include "myoloop/error.hpp"

namespace myoloop {

namespace {

Json error_message(const std::string& detail) { return Json{{"type", "error"}, {"detail", detail}}; }

Json zero_feedback() {
  const std::array<double, kModules> zero{};
  return Json{{"tangential", zero}, {"normal", zero}, {"vibration", zero}};
}

}  // namespace

bool parse_activation(const Json& msg, std::size_t rank, std::vector<double>& out,
                      std::string& error) {
  if (!msg.contains("values") || !msg["values"].is_array()) {
    error = "activation needs a 'values' array";
    return false;
  }
  const auto& values = msg["values"];
  if (values.size() != rank) {
    error = "activation needs " + std::to_string(rank) + " values";
    return false;
  }
  std::vector<double> v;
  for (const auto& x : values) {
    if (!x.is_number()) {
      error = "activation values must be numbers";
      return false;
    }
    const double d = x.get<double>();
    if (!std::isfinite(d) || d < 0.0 || d > 1.0) {
      error = "activation values must be in [0, 1]";
      return false;
    }
    v.push_back(d);
  }
  out = std::move(v);
  return true;
}

SessionEngine::SessionEngine(SessionConfig cfg, ReferenceSet refs)
    : cfg_(std::move(cfg)), refs_(std::move(refs)), rng_(mix_seed(cfg_.seed, 7)) {
  validate(cfg_);
  if (refs_.rank() != 3) throw Error(Errc::kNotCalibrated, "session needs I/II/III references");
  ctrl_ = make_state(refs_, mix_seed(cfg_.seed, 1));
  activation_.assign(refs_.rank(), 0.0);
}

void SessionEngine::set_activation(std::vector<double> values) {
  if (values.size() != refs_.rank()) throw Error(Errc::kDimError, "activation size mismatch");
  activation_ = std::move(values);
}

std::vector<Json> SessionEngine::handle_message(const std::string& text) {
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::exception& e) {
    return {error_message(std::string("malformed JSON: ") + e.what())};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
    return {error_message("message needs a string 'type'")};
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "activation") {
      std::vector<double> v;
      std::string err;
      if (!parse_activation(msg, refs_.rank(), v, err)) return {error_message(err)};
      activation_ = std::move(v);
      return {};
    }
    if (type == "mode") {
      if (msg.contains("value"))
        cfg_.controller.mode = control_mode_from_string(msg["value"].get<std::string>());
      if (msg.contains("feedback")) cfg_.controller.feedback_enabled = msg["feedback"].get<bool>();
      if (cfg_.controller.mode == ControlMode::kDiscrete && !cfg_.controller.threshold &&
          !refs_.threshold()) {
        cfg_.controller.mode = ControlMode::kContinuous;
        return {error_message("discrete mode needs a calibrated threshold")};
      }
      return {};
    }
    if (type == "start_task") return start_task(msg);
    if (type == "stop_task") {
      task_.reset();
      return {};
    }
  } catch (const Json::exception& e) {
    return {error_message(std::string("bad field: ") + e.what())};
  } catch (const Error& e) {
    return {error_message(e.what())};
  }
  return {error_message("unknown message type '" + type + "'")};
}

std::vector<Json> SessionEngine::start_task(const Json& msg) {
  ActiveTask task;
  task.spec.kind = task_kind_from_string(msg.value("kind", std::string("position")));
  task.spec.dofs.clear();
  for (const auto& d : msg.at("dofs")) task.spec.dofs.push_back(dof_from_string(d.get<std::string>()));
  task.spec.trials = msg.value("trials", std::size_t{10});
  task.spec.duration_s = msg.value("duration_s", 5.0);
  task.spec.training = msg.value("training", false);
  validate(task.spec);
  if (task.spec.trials == 0) throw Error(Errc::kConfigError, "task needs at least one trial");
  Rng rng(msg.value("seed", mix_seed(cfg_.seed, 5)));
  task.targets = gen_targets(task.spec, rng);
  task_ = std::move(task);
  object_ = task_->spec.kind == TaskKind::kForce ? default_force_object() : VirtualObject{};
  hand_ = HandState{};
  hand_.t_ms = t_ms_;
  ctrl_.prev_target = MotorPose{};
  task_->trace.spec = task_->spec;
  task_->trace.target = task_->targets[0];
  return {Json{{"type", "task"},
               {"kind", std::string(to_string(task_->spec.kind))},
               {"target", task_->targets[0]},
               {"trial", 0},
               {"score", nullptr}}};
}

std::vector<Json> SessionEngine::step() {
  std::vector<Json> out;
  const double period = cfg_.control_period_ms();
  const EmgWindow window = synth_window(activation_, cfg_.pattern, cfg_.window_samples(), rng_, t_ms_);
  const MotorPose command = control_step(window, refs_, ctrl_, cfg_.controller);
  for (std::size_t s = 0; s < cfg_.plant_substeps(); ++s) hand_ = plant_step(command, object_, hand_, cfg_.plant);
  t_ms_ += period;
  hand_.t_ms = t_ms_;
  const FeedbackFrame frame = render(hand_, cfg_.plant);

  out.push_back(Json{{"type", "frame"},
                     {"t", t_ms_},
                     {"motors", hand_.pos},
                     {"torques", hand_.torque},
                     {"weights", ctrl_.last_weights},
                     {"command", command},
                     {"feedback", cfg_.controller.feedback_enabled ? to_json(frame) : zero_feedback()}});

  if (task_) {
    auto& task = *task_;
    TraceStep rec;
    rec.t_ms = t_ms_;
    rec.hand = hand_;
    rec.command = command;
    rec.feedback = frame;
    task.trace.steps.push_back(std::move(rec));
    ++task.step;
    const auto steps = static_cast<std::size_t>(std::lround(task.spec.duration_s * cfg_.control_rate));
    if (task.step >= steps) {
      const Target& target = task.targets[task.trial];
      double score = 0.0;
      for (std::size_t k = 0; k < task.spec.dofs.size(); ++k)
        score += mae(task.trace, task.spec.dofs[k], target[k], cfg_);
      score /= static_cast<double>(task.spec.dofs.size());
      const bool done = task.trial + 1 >= task.targets.size();
      out.push_back(Json{{"type", "task"},
                         {"kind", std::string(to_string(task.spec.kind))},
                         {"target", target},
                         {"trial", task.trial},
                         {"score", score},
                         {"training", task.spec.training},
                         {"done", done}});
      if (done) {
        task_.reset();
        object_ = VirtualObject{};
      } else {
        ++task.trial;
        task.step = 0;
        task.trace.steps.clear();
        task.trace.target = task.targets[task.trial];
        hand_ = HandState{};
        hand_.t_ms = t_ms_;
        ctrl_.prev_target = MotorPose{};
        out.push_back(Json{{"type", "task"},
                           {"kind", std::string(to_string(task.spec.kind))},
                           {"target", task.targets[task.trial]},
                           {"trial", task.trial},
                           {"score", nullptr}});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StreamServer::StreamServer(SessionConfig cfg, ReferenceSet refs)
    : cfg_(std::move(cfg)), refs_(std::move(refs)) {
  validate(cfg_);
}

StreamServer::~StreamServer() { stop(); }

void StreamServer::start(std::uint16_t port, const std::string& host) {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw Error(Errc::kConfigError, "bad listen address " + host);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 1) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void StreamServer::stop() {
  running_ = false;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void StreamServer::wait() {
  if (accept_thread_.joinable()) accept_thread_.join();
}

void StreamServer::accept_loop() {
  // The engine outlives individual connections: a disconnect pauses it.
  SessionEngine engine(cfg_, refs_);
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    serve_client(fd, engine);
    ::close(fd);
  }
}

void StreamServer::serve_client(int fd, SessionEngine& engine) {
  std::string req;
  char c;
  bool ok = true;
  while (req.find("\r\n\r\n") == std::string::npos) {
    if (req.size() > 8192 || ::recv(fd, &c, 1, 0) != 1) {
      ok = false;
      break;
    }
    req.push_back(c);
  }
  std::string key;
  if (ok) {
    std::string lower = req;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    const auto pos = lower.find("sec-websocket-key:");
    if (pos != std::string::npos) {
      auto start = pos + 18;
      auto end = req.find("\r\n", start);
      key = req.substr(start, end - start);
      key.erase(0, key.find_first_not_of(" \t"));
      key.erase(key.find_last_not_of(" \t") + 1);
    }
  }
  if (key.empty()) {
    ws::write_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
    return;
  }
  ws::write_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                    "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                        ws::accept_key(key) + "\r\n\r\n");

  std::mutex send_mu;
  auto send = [&](const Json& j) {
    std::lock_guard lock(send_mu);
    return ws::write_all(fd, ws::encode_frame(ws::Opcode::kText, j.dump(), false));
  };
  std::atomic<bool> alive{true};
  LatestValue<std::vector<double>> activation;
  std::mutex queue_mu;
  std::deque<std::string> commands;
  constexpr std::size_t kMaxCommands = 64;

  std::thread reader([&] {
    while (alive) {
      auto frame = ws::read_frame(fd);
      if (!frame || frame->opcode == ws::Opcode::kClose) break;
      if (frame->opcode == ws::Opcode::kPing) {
        std::lock_guard lock(send_mu);
        ws::write_all(fd, ws::encode_frame(ws::Opcode::kPong, frame->payload, false));
        continue;
      }
      if (frame->opcode != ws::Opcode::kText) continue;
      Json msg;
      try {
        msg = Json::parse(frame->payload);
      } catch (const Json::exception& e) {
        send(error_message(std::string("malformed JSON: ") + e.what()));
        continue;
      }
      if (msg.is_object() && msg.value("type", std::string()) == "activation") {
        std::vector<double> v;
        std::string err;
        if (parse_activation(msg, refs_.rank(), v, err)) activation.store(std::move(v));
        else send(error_message(err));
        continue;
      }
      std::lock_guard lock(queue_mu);
      if (commands.size() >= kMaxCommands) {
        send(error_message("command queue full"));
        continue;
      }
      commands.push_back(std::move(frame->payload));
    }
    alive = false;
  });

  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double, std::milli>(cfg_.control_period_ms()));
  auto next = std::chrono::steady_clock::now();
  std::uint64_t seen_writes = 0;
  while (alive && running_) {
    next += period;
    std::this_thread::sleep_until(next);
    std::deque<std::string> pending;
    {
      std::lock_guard lock(queue_mu);
      pending.swap(commands);
    }
    for (const auto& text : pending)
      for (const auto& reply : engine.handle_message(text)) send(reply);
    if (activation.writes() != seen_writes) {
      seen_writes = activation.writes();
      if (auto v = activation.load()) engine.set_activation(std::move(*v));
    }
    for (const auto& msg : engine.step()) {
      if (!send(msg)) {
        alive = false;
        break;
      }
      if (msg["type"] == "frame") ++frames_sent_;
    }
    // A late wake-up does not trigger a burst of catch-up steps.
    const auto now = std::chrono::steady_clock::now();
    if (now > next + period) next = now;
  }
  alive = false;
  ::shutdown(fd, SHUT_RDWR);
  reader.join();
}

}  // namespace myoloop
