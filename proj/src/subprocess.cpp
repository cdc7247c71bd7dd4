#include "flowdeblur/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <sstream>

namespace flowdeblur {

namespace {

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::chrono::milliseconds remaining(std::chrono::steady_clock::time_point deadline) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::chrono::milliseconds(0);
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
}

void poll_or_throw(int fd, short events, std::chrono::steady_clock::time_point deadline,
                   const char* what) {
    const auto left = remaining(deadline);
    if (left.count() <= 0) throw TimeoutError(std::string(what) + ": deadline exceeded");
    pollfd pfd{fd, events, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc == 0) throw TimeoutError(std::string(what) + ": deadline exceeded");
    if (rc < 0) throw std::runtime_error(std::string(what) + ": poll failed");
}

} // namespace

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> argv;
    std::string token;
    while (in >> token) argv.push_back(token);
    return argv;
}

Subprocess::Subprocess(const std::vector<std::string>& argv) {
    if (argv.empty()) throw SpawnError("empty command");
    ignore_sigpipe_once();

    int to_child[2], from_child[2], exec_status[2];
    if (::pipe(to_child) != 0) throw SpawnError("pipe failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]); ::close(to_child[1]);
        throw SpawnError("pipe failed");
    }
    if (::pipe2(exec_status, O_CLOEXEC) != 0) {
        ::close(to_child[0]); ::close(to_child[1]);
        ::close(from_child[0]); ::close(from_child[1]);
        throw SpawnError("pipe failed");
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(to_child[0]); ::close(to_child[1]);
        ::close(from_child[0]); ::close(from_child[1]);
        ::close(exec_status[0]); ::close(exec_status[1]);
        throw SpawnError("fork failed");
    }

    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]); ::close(to_child[1]);
        ::close(from_child[0]); ::close(from_child[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        // exec failed: report errno through the CLOEXEC pipe and bail.
        const int err = errno;
        ssize_t ignored = ::write(exec_status[1], &err, sizeof err);
        (void)ignored;
        ::_exit(127);
    }

    ::close(to_child[0]);
    ::close(from_child[1]);
    ::close(exec_status[1]);

    int exec_errno = 0;
    const ssize_t n = ::read(exec_status[0], &exec_errno, sizeof exec_errno);
    ::close(exec_status[0]);
    if (n > 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        int status = 0;
        ::waitpid(pid, &status, 0);
        throw SpawnError("cannot exec '" + argv[0] + "': " +
                         std::strerror(exec_errno));
    }

    pid_ = pid;
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
    set_nonblocking(stdin_fd_);
    set_nonblocking(stdout_fd_);
}

Subprocess::~Subprocess() {
    if (pid_ > 0 && !reaped_) terminate();
    if (stdin_fd_ >= 0) ::close(stdin_fd_);
    if (stdout_fd_ >= 0) ::close(stdout_fd_);
}

void Subprocess::write_exact(const void* data, std::size_t size,
                             std::chrono::milliseconds timeout) {
    if (stdin_fd_ < 0) throw std::runtime_error("subprocess stdin already closed");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::size_t done = 0;
    while (done < size) {
        poll_or_throw(stdin_fd_, POLLOUT, deadline, "subprocess write");
        const ssize_t n = ::write(stdin_fd_, p + done, size - done);
        if (n > 0) {
            done += static_cast<std::size_t>(n);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
            throw std::runtime_error(std::string("subprocess write failed: ") +
                                     std::strerror(errno));
        }
    }
}

void Subprocess::read_exact(void* data, std::size_t size,
                            std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    auto* p = static_cast<std::uint8_t*>(data);
    std::size_t done = 0;
    while (done < size) {
        poll_or_throw(stdout_fd_, POLLIN, deadline, "subprocess read");
        const ssize_t n = ::read(stdout_fd_, p + done, size - done);
        if (n > 0) {
            done += static_cast<std::size_t>(n);
        } else if (n == 0) {
            throw std::runtime_error("subprocess closed its output mid-message");
        } else if (errno != EAGAIN && errno != EINTR) {
            throw std::runtime_error(std::string("subprocess read failed: ") +
                                     std::strerror(errno));
        }
    }
}

std::vector<std::uint8_t> Subprocess::read_all(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::vector<std::uint8_t> out;
    std::uint8_t buf[65536];
    for (;;) {
        poll_or_throw(stdout_fd_, POLLIN, deadline, "subprocess read");
        const ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
        if (n > 0) {
            out.insert(out.end(), buf, buf + n);
        } else if (n == 0) {
            return out;
        } else if (errno != EAGAIN && errno != EINTR) {
            throw std::runtime_error(std::string("subprocess read failed: ") +
                                     std::strerror(errno));
        }
    }
}

void Subprocess::close_stdin() {
    if (stdin_fd_ >= 0) {
        ::close(stdin_fd_);
        stdin_fd_ = -1;
    }
}

int Subprocess::wait() {
    if (reaped_) return exit_status_;
    int status = 0;
    ::waitpid(pid_, &status, 0);
    reaped_ = true;
    pid_ = -1;
    if (WIFEXITED(status)) exit_status_ = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) exit_status_ = -WTERMSIG(status);
    return exit_status_;
}

void Subprocess::terminate() {
    if (pid_ > 0 && !reaped_) {
        ::kill(pid_, SIGKILL);
        wait();
    }
}

} // namespace flowdeblur
