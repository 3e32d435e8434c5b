#include "lambada/extgen.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace lambada {

using json = nlohmann::json;

ExternalGenerator::ExternalGenerator(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw GeneratorError("external generator command is empty");
  start();
  handshake_ = request({{"command", "handshake"}, {"protocol", kProtocolVersion}});
  if (handshake_.value("protocol", 0) != kProtocolVersion)
    throw GeneratorError("external generator speaks an unsupported protocol version");
}

ExternalGenerator::~ExternalGenerator() {
  try {
    shutdown();
  } catch (...) {
  }
}

void ExternalGenerator::start() {
  // Broken pipes surface as write errors instead of killing the host.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw GeneratorError("cannot create pipes for external generator");
  const pid_t pid = fork();
  if (pid < 0) throw GeneratorError("cannot fork external generator");
  if (pid == 0) {
    // Own process group, so a kill also reaches anything the shell forked.
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  setpgid(pid, pid);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

void ExternalGenerator::shutdown() {
  if (pid_ < 0) return;
  if (to_child_ >= 0) {
    const std::string line = json{{"command", "shutdown"}}.dump() + "\n";
    [[maybe_unused]] auto n = ::write(to_child_, line.data(), line.size());
    close(to_child_);
    to_child_ = -1;
  }
  // Give the adapter a moment to exit on its own, then kill it.
  for (int i = 0; i < 50; ++i) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      break;
    }
    usleep(10000);
  }
  if (pid_ >= 0) {
    kill(-pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
}

void ExternalGenerator::write_line(const std::string& line) {
  if (to_child_ < 0) throw GeneratorError("external generator is not running");
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw GeneratorError("external generator closed its input (process exited?)");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalGenerator::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) throw GeneratorError("external generator timed out waiting for a response");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw GeneratorError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw GeneratorError("external generator timed out waiting for a response");
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw GeneratorError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw GeneratorError("external generator exited before responding");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

json ExternalGenerator::request(const json& req) {
  write_line(req.dump());
  const std::string line = read_line();
  json resp;
  try {
    resp = json::parse(line);
  } catch (const json::parse_error&) {
    throw GeneratorError("external generator sent a malformed response: " + line);
  }
  if (!resp.is_object()) throw GeneratorError("external generator response is not a JSON object");
  const auto status = resp.value("status", "");
  if (status == "error") throw GeneratorError("external generator error: " + resp.value("message", "(no message)"));
  if (status != "ok") throw GeneratorError("external generator response has no valid status");
  return resp;
}

void ExternalGenerator::fit(const Dataset& d) {
  json labels = json::object();
  for (std::size_t i = 0; i < d.labels.size(); ++i) labels[std::to_string(i + 1)] = d.labels.names()[i];
  json pairs = json::array();
  for (const auto& item : d.items) pairs.push_back({{"text", detokenize(item.tokens)}, {"label", item.label}});
  request({{"command", "fit"}, {"labels", labels}, {"pairs", pairs}});
  labels_ = d.labels;
  fitted_ = true;
}

bool ExternalGenerator::covers(ClassId label) const { return fitted_ && labels_.contains(label); }

std::vector<GeneratedSentence> ExternalGenerator::generate(ClassId label, std::size_t count, std::uint64_t class_seed,
                                                           const GenerationParams& params) {
  if (!covers(label)) throw GeneratorError("class id " + std::to_string(label) + " is unknown to the generator");
  const json resp = request({{"command", "generate"},
                             {"class", label},
                             {"count", count},
                             {"seed", class_seed},
                             {"max_len", params.max_len}});
  const auto it = resp.find("sentences");
  if (it == resp.end() || !it->is_array()) throw GeneratorError("generate response has no 'sentences' array");
  if (it->size() != count)
    throw GeneratorError("generator returned " + std::to_string(it->size()) + " sentences, expected " +
                         std::to_string(count));
  std::vector<bool> truncated(count, false);
  if (auto t = resp.find("truncated"); t != resp.end() && t->is_array() && t->size() == count)
    for (std::size_t i = 0; i < count; ++i) truncated[i] = (*t)[i].get<bool>();

  std::vector<GeneratedSentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = (*it)[i];
    if (!s.is_string()) throw GeneratorError("generated sentence is not a string");
    GeneratedSentence g;
    g.tokens = tokenize(s.get<std::string>());
    if (g.tokens.empty()) throw GeneratorError("generator returned an empty sentence");
    g.label = label;
    g.truncated = truncated[i];
    g.gen_seed = class_seed;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace lambada
