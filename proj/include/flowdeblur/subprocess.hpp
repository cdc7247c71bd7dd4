// Minimal child-process plumbing with deadlines on every pipe operation.
#ifndef FLOWDEBLUR_SUBPROCESS_HPP
#define FLOWDEBLUR_SUBPROCESS_HPP

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowdeblur {

// Child could not be started (missing executable, exec failure).
struct SpawnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pipe read or write missed its deadline.
struct TimeoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Whitespace-split a command line into argv tokens. No shell quoting;
// wrap complex invocations in a script.
std::vector<std::string> split_command(const std::string& command);

class Subprocess {
public:
    // Spawns argv[0] with execvp, stdin/stdout piped. Exec failure in the
    // child is reported synchronously as SpawnError.
    explicit Subprocess(const std::vector<std::string>& argv);
    ~Subprocess();

    Subprocess(const Subprocess&) = delete;
    Subprocess& operator=(const Subprocess&) = delete;

    void write_exact(const void* data, std::size_t size,
                     std::chrono::milliseconds timeout);
    void read_exact(void* data, std::size_t size,
                    std::chrono::milliseconds timeout);
    // Reads the child's stdout until EOF.
    std::vector<std::uint8_t> read_all(std::chrono::milliseconds timeout);

    void close_stdin();
    bool running() const { return pid_ > 0; }
    // Waits for exit and returns the status (negative signal number if
    // killed). Idempotent.
    int wait();
    // SIGKILL + reap.
    void terminate();

private:
    int pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int exit_status_ = 0;
    bool reaped_ = false;
};

} // namespace flowdeblur

#endif
