#pragma once

// External classifier reached over newline-delimited JSON, either through a
// child process's stdin/stdout or a TCP connection.
//
//   request:  {"id":"<cell id>","text":"<serialized text>"}\n
//   response: {"id":"<cell id>","label":"header","scores":{...}}\n
//
// Responses may come back in any order and are matched by id. "scores" is
// optional; when absent the distribution is uniform.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tablex/error.hpp"
#include "tablex/labels.hpp"
#include "tablex/serializer.hpp"

extern char** environ;

namespace tablex {

enum class AdapterTransport { SubprocessStdio, Tcp };

struct AdapterSpec {
  AdapterTransport transport = AdapterTransport::SubprocessStdio;
  std::string address;  // command line for subprocess, host:port for tcp
  int timeout_ms = 10000;
  int batch_size = 32;

  void validate() const {
    if (timeout_ms <= 0) throw Error(ErrorCode::Config, "adapter timeout_ms must be > 0");
    if (batch_size < 1) throw Error(ErrorCode::Config, "adapter batch_size must be >= 1");
    if (address.empty()) throw Error(ErrorCode::Config, "adapter address/command is empty");
  }
};

struct AdapterResponse {
  std::string id;
  CellLabel label = CellLabel::Data;
  LabelScores scores;
};

namespace protocol {

inline std::string encode_request(const std::string& id, const std::string& text) {
  nlohmann::json j = {{"id", id}, {"text", text}};
  return j.dump() + "\n";
}

inline std::string encode_response(const AdapterResponse& r) {
  nlohmann::json scores = nlohmann::json::object();
  for (auto l : kAllLabels) scores[std::string(to_string(l))] = r.scores[l];
  nlohmann::json j = {{"id", r.id}, {"label", std::string(to_string(r.label))}, {"scores", scores}};
  return j.dump() + "\n";
}

/// Parses one response line. Throws ProtocolViolation.
inline AdapterResponse decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolViolation, std::string("malformed response line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("label") || !j["label"].is_string())
    throw Error(ErrorCode::ProtocolViolation, "response lacks string 'id' or 'label'");
  AdapterResponse r;
  r.id = j["id"].get<std::string>();
  const auto label = parse_label(j["label"].get<std::string>());
  if (!label) throw Error(ErrorCode::ProtocolViolation, "unknown label '" + j["label"].get<std::string>() + "'");
  r.label = *label;
  if (j.contains("scores")) {
    const auto& s = j["scores"];
    if (!s.is_object()) throw Error(ErrorCode::ProtocolViolation, "'scores' is not an object");
    double total = 0.0;
    for (auto l : kAllLabels) {
      const std::string key(to_string(l));
      const double v = s.contains(key) && s[key].is_number() ? s[key].get<double>() : 0.0;
      if (v < 0.0) throw Error(ErrorCode::ProtocolViolation, "negative score");
      r.scores[l] = v;
      total += v;
    }
    if (total <= 0.0) {
      r.scores = LabelScores::uniform();
    } else {
      for (auto& v : r.scores.p) v /= total;
    }
  }
  return r;
}

}  // namespace protocol

/// One connection to an external classifier. Not copyable; one in-flight
/// batch at a time.
class Adapter {
 public:
  explicit Adapter(AdapterSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    ::signal(SIGPIPE, SIG_IGN);
    if (spec_.transport == AdapterTransport::SubprocessStdio) {
      spawn();
    } else {
      connect_tcp();
    }
  }

  ~Adapter() { close_all(); }

  Adapter(const Adapter&) = delete;
  Adapter& operator=(const Adapter&) = delete;

  const AdapterSpec& spec() const { return spec_; }

  /// Sends one batch and collects responses until every id is answered, the
  /// deadline passes or the peer closes. Missing ids are absent from the map.
  std::map<std::string, AdapterResponse> exchange(const std::vector<std::pair<std::string, std::string>>& requests) {
    std::map<std::string, AdapterResponse> answered;
    std::map<std::string, bool> pending;
    std::string outbound;
    for (const auto& [id, text] : requests) {
      pending[id] = true;
      outbound += protocol::encode_request(id, text);
    }
    if (closed_) return answered;

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(spec_.timeout_ms);
    std::size_t written = 0;
    while (!pending.empty()) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) break;
      const int wait = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;

      pollfd fds[2];
      int nfds = 0;
      fds[nfds++] = {read_fd_, POLLIN, 0};
      const bool want_write = written < outbound.size() && write_fd_ >= 0;
      if (want_write) fds[nfds++] = {write_fd_, POLLOUT, 0};
      const int rc = ::poll(fds, static_cast<nfds_t>(nfds), wait);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::AdapterUnavailable, std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) break;

      if (want_write && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t n = send_bytes(outbound.data() + written, outbound.size() - written);
        if (n < 0) {
          if (errno != EAGAIN && errno != EINTR) {
            closed_ = true;
            break;
          }
        } else {
          written += static_cast<std::size_t>(n);
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t n = recv_bytes(buf, sizeof(buf));
        if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
          closed_ = true;
          break;
        }
        if (n > 0) {
          inbound_.append(buf, static_cast<std::size_t>(n));
          std::size_t nl;
          while ((nl = inbound_.find('\n')) != std::string::npos) {
            std::string line = inbound_.substr(0, nl);
            inbound_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            AdapterResponse r = protocol::decode_response(line);
            if (pending.erase(r.id) > 0) answered.emplace(r.id, std::move(r));
          }
        }
      }
    }
    return answered;
  }

  /// True once the peer has closed or a write failed.
  bool closed() const { return closed_; }

 private:
  ssize_t send_bytes(const char* data, std::size_t len) {
    if (spec_.transport == AdapterTransport::Tcp) return ::send(write_fd_, data, len, MSG_NOSIGNAL);
    return ::write(write_fd_, data, len);
  }

  ssize_t recv_bytes(char* data, std::size_t len) { return ::read(read_fd_, data, len); }

  static std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> argv;
    std::string part;
    while (in >> part) argv.push_back(part);
    return argv;
  }

  void spawn() {
    const auto args = split_command(spec_.address);
    if (args.empty()) throw Error(ErrorCode::AdapterUnavailable, "empty adapter command");
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0)
      throw Error(ErrorCode::AdapterUnavailable, std::string("pipe: ") + std::strerror(errno));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const int rc = ::posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      pid_ = -1;
      throw Error(ErrorCode::AdapterUnavailable, "cannot start '" + args[0] + "': " + std::strerror(rc));
    }
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFL, ::fcntl(write_fd_, F_GETFL) | O_NONBLOCK);
  }

  void connect_tcp() {
    const auto colon = spec_.address.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::Config, "tcp address must be host:port");
    const std::string host = spec_.address.substr(0, colon);
    const std::string port = spec_.address.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
      throw Error(ErrorCode::AdapterUnavailable, "cannot resolve " + spec_.address);
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error(ErrorCode::AdapterUnavailable, "cannot connect to " + spec_.address);
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
    read_fd_ = fd;
    write_fd_ = fd;
  }

  void close_all() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      // Closing stdin is the shutdown signal; give the child a moment, then kill.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        ::usleep(2000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  AdapterSpec spec_;
  pid_t pid_ = -1;
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string inbound_;
  bool closed_ = false;
};

}  // namespace tablex
