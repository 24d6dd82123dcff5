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

// Minimal RFC 6455 framing over blocking POSIX sockets: text frames, ping/pong
// and close. Enough for a single local UI client.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "myoloop/service.hpp"

namespace myoloop::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<char*>(buf);
  while (n > 0) {
    const ssize_t got = ::recv(fd, p, n, 0);
    if (got == 0) return false;
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data,
                                  static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string input = client_key + kGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr);
  return base64(digest, len);
}

std::string encode_frame(Opcode opcode, const std::string& payload, bool mask,
                         std::uint32_t mask_key) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(opcode)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8)
      out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> shift) & 0xFF));
  }
  if (!mask) return out + payload;
  const unsigned char key[4] = {
      static_cast<unsigned char>(mask_key >> 24), static_cast<unsigned char>(mask_key >> 16),
      static_cast<unsigned char>(mask_key >> 8), static_cast<unsigned char>(mask_key)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

std::optional<Frame> read_frame(int fd) {
  Frame frame;
  bool first = true;
  while (true) {
    unsigned char hdr[2];
    if (!read_exact(fd, hdr, 2)) return std::nullopt;
    const bool fin = hdr[0] & 0x80;
    const auto opcode = static_cast<std::uint8_t>(hdr[0] & 0x0F);
    const bool masked = hdr[1] & 0x80;
    std::uint64_t len = hdr[1] & 0x7F;
    if (len == 126) {
      unsigned char ext[2];
      if (!read_exact(fd, ext, 2)) return std::nullopt;
      len = (static_cast<std::uint64_t>(ext[0]) << 8) | ext[1];
    } else if (len == 127) {
      unsigned char ext[8];
      if (!read_exact(fd, ext, 8)) return std::nullopt;
      len = 0;
      for (unsigned char b : ext) len = (len << 8) | b;
    }
    if (len > (1u << 24)) return std::nullopt;  // 16 MiB cap
    unsigned char key[4] = {0, 0, 0, 0};
    if (masked && !read_exact(fd, key, 4)) return std::nullopt;
    std::string payload(len, '\0');
    if (len > 0 && !read_exact(fd, payload.data(), len)) return std::nullopt;
    if (masked)
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ key[i % 4]);

    if (opcode >= 0x8) return Frame{static_cast<Opcode>(opcode), std::move(payload)};
    if (first) {
      if (opcode == 0x0) return std::nullopt;  // stray continuation
      frame.opcode = static_cast<Opcode>(opcode);
      first = false;
    }
    frame.payload += payload;
    if (fin) return frame;
  }
}

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

Client::~Client() { close(); }

bool Client::connect(const std::string& host, std::uint16_t port, const std::string& path) {
  close();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return false;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) return false;
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  const std::string key = "bXlvbG9vcC1jbGllbnQ=";
  const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " +
                          key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  if (!write_all(fd_, req)) return false;
  std::string resp;
  char c;
  while (resp.size() < 8192 && resp.find("\r\n\r\n") == std::string::npos) {
    if (!read_exact(fd_, &c, 1)) return false;
    resp.push_back(c);
  }
  if (resp.rfind("HTTP/1.1 101", 0) != 0 || resp.find(accept_key(key)) == std::string::npos) {
    close();
    return false;
  }
  return true;
}

bool Client::send_text(const std::string& text) {
  if (fd_ < 0) return false;
  mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
  return write_all(fd_, encode_frame(Opcode::kText, text, true, mask_seed_));
}

std::optional<std::string> Client::recv_text(int timeout_ms) {
  while (fd_ >= 0) {
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
    auto frame = read_frame(fd_);
    if (!frame || frame->opcode == Opcode::kClose) {
      close();
      return std::nullopt;
    }
    if (frame->opcode == Opcode::kPing) {
      write_all(fd_, encode_frame(Opcode::kPong, frame->payload, true, mask_seed_));
      continue;
    }
    if (frame->opcode == Opcode::kText) return std::move(frame->payload);
  }
  return std::nullopt;
}

void Client::close() {
  if (fd_ >= 0) {
    write_all(fd_, encode_frame(Opcode::kClose, "", true, mask_seed_));
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace myoloop::ws
