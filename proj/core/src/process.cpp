#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <set>
#include <thread>

#include "gradeforge/error.hpp"
#include "gradeforge/submissions.hpp"

namespace gradeforge::submissions {

namespace {

constexpr std::size_t kOutputTail = 2048;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

bool is_executable(const std::string& path) {
  struct stat st {};
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(path.c_str(), X_OK) == 0;
}

void resolve_program(const std::string& command_template) {
  const auto begin = command_template.find_first_not_of(" \t");
  if (begin == std::string::npos) throw Error(ErrorKind::CommandNotFound, "empty check command");
  const auto end = command_template.find_first_of(" \t;|&", begin);
  const std::string program = command_template.substr(begin, end == std::string::npos ? std::string::npos : end - begin);

  static const std::set<std::string> builtins = {"exit", "test", "[", "echo", "true", "false", ":", "cd", "printf"};
  if (builtins.count(program)) return;
  if (program.find('/') != std::string::npos) {
    if (!is_executable(program)) throw Error(ErrorKind::CommandNotFound, "'" + program + "' is not executable");
    return;
  }
  const char* path_env = std::getenv("PATH");
  const std::string path = path_env ? path_env : "/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= path.size()) {
    auto colon = path.find(':', start);
    std::string dir = path.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    if (dir.empty()) dir = ".";
    if (is_executable(dir + "/" + program)) return;
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  throw Error(ErrorKind::CommandNotFound, "'" + program + "' not found on PATH");
}

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;
};

RunResult run_shell(const std::string& command, std::chrono::milliseconds timeout) {
  int fds[2];
  if (::pipe(fds) != 0) throw Error(ErrorKind::Io, "pipe failed");
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(ErrorKind::Io, "fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(fds[1], STDOUT_FILENO);
    ::dup2(fds[1], STDERR_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);

  RunResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  bool open = true;
  while (open) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;
    const ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n <= 0) {
      open = false;
    } else {
      result.output.append(buf, static_cast<std::size_t>(n));
      if (result.output.size() > 4 * kOutputTail) result.output.erase(0, result.output.size() - kOutputTail);
    }
  }
  ::close(fds[0]);

  if (result.timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!result.timed_out) {
    // output closed before exit; the child may still be running past the deadline
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  }
  if (result.output.size() > kOutputTail) result.output.erase(0, result.output.size() - kOutputTail);
  return result;
}

}  // namespace

SubmissionSet run_check_command(SubmissionSet set, const CheckOptions& options) {
  if (options.command_template.find("{file}") == std::string::npos) {
    throw Error(ErrorKind::InvalidPolicy, "check command must contain {file}");
  }
  resolve_program(options.command_template);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < set.entries.size(); i = next++) {
      auto& e = set.entries[i];
      std::string cmd = options.command_template;
      const std::string quoted = shell_quote(e.path.string());
      for (auto pos = cmd.find("{file}"); pos != std::string::npos; pos = cmd.find("{file}", pos + quoted.size())) {
        cmd.replace(pos, 6, quoted);
      }
      auto r = run_shell(cmd, options.timeout);
      e.exit_code = r.exit_code;
      e.timed_out = r.timed_out;
      e.output = std::move(r.output);
      e.status = (!r.timed_out && r.exit_code == 0) ? CheckStatus::pass : CheckStatus::fail;
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(options.parallelism, static_cast<unsigned>(set.entries.size())));
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
  }
  return set;
}

}  // namespace gradeforge::submissions
