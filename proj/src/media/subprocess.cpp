#include "dsvr/media/subprocess.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace dsvr::media {

RunResult run_tool(const std::vector<std::string>& argv) {
    if (argv.empty()) throw std::invalid_argument("run_tool: empty argv");

    int pipefd[2];
    if (pipe(pipefd) != 0) {
        throw std::runtime_error(std::string("run_tool: pipe failed: ") + std::strerror(errno));
    }

    const pid_t pid = fork();
    if (pid < 0) {
        close(pipefd[0]);
        close(pipefd[1]);
        throw std::runtime_error(std::string("run_tool: fork failed: ") + std::strerror(errno));
    }

    if (pid == 0) {
        // Child: merge stdout+stderr into the pipe, then exec.
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(pipefd[1], STDERR_FILENO);
        close(pipefd[0]);
        close(pipefd[1]);
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        // Reached only on exec failure.
        const char* msg = "exec failed: ";
        (void)!write(STDERR_FILENO, msg, std::strlen(msg));
        (void)!write(STDERR_FILENO, argv[0].c_str(), argv[0].size());
        _exit(127);
    }

    close(pipefd[1]);
    RunResult result;
    char buf[4096];
    for (;;) {
        const ssize_t n = read(pipefd[0], buf, sizeof(buf));
        if (n > 0) {
            result.output.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
            break;
        } else if (errno != EINTR) {
            break;
        }
    }
    close(pipefd[0]);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace dsvr::media
