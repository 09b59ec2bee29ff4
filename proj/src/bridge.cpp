#include "lve/bridge.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace lve::bridge {

std::string encode_frame(const Json& message) {
    const std::string payload = message.dump();
    if (payload.size() > kMaxFrameBytes) throw ProtocolError("frame payload too large");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out.push_back(static_cast<char>((n >> 24) & 0xFF));
    out.push_back(static_cast<char>((n >> 16) & 0xFF));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
    out += payload;
    return out;
}

namespace {

std::uint32_t read_length(std::string_view header) {
    const auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(header[i])); };
    return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

}  // namespace

Json parse_message(std::string_view payload) {
    Json message;
    try {
        message = Json::parse(payload);
    } catch (const Json::parse_error& e) {
        throw ProtocolError(std::string("frame payload is not valid JSON: ") + e.what());
    }
    if (!message.is_object()) throw ProtocolError("frame payload is not a JSON object");
    auto type = message.find("type");
    if (type == message.end() || !type->is_string()) throw ProtocolError("frame payload lacks a string \"type\"");
    return message;
}

Json decode_frame(std::string_view bytes) {
    if (bytes.size() < 4) throw FramingError("truncated frame: incomplete length prefix");
    const std::uint32_t n = read_length(bytes.substr(0, 4));
    if (bytes.size() - 4 < n) throw FramingError("truncated frame: payload shorter than length prefix");
    if (bytes.size() - 4 > n) throw FramingError("trailing bytes after frame payload");
    return parse_message(bytes.substr(4));
}

void FrameChannel::send(const Json& message) { transport_.write_all(encode_frame(message)); }

Json FrameChannel::receive() {
    const std::string header = transport_.read_up_to(4);
    if (header.empty()) throw TransportError("worker closed its output stream");
    if (header.size() < 4) throw FramingError("truncated frame: incomplete length prefix");
    const std::uint32_t n = read_length(header);
    if (n > kMaxFrameBytes) throw ProtocolError("frame length " + std::to_string(n) + " exceeds limit");
    const std::string payload = transport_.read_up_to(n);
    if (payload.size() < n)
        throw FramingError("truncated frame: expected " + std::to_string(n) + " payload bytes, got " +
                           std::to_string(payload.size()));
    return parse_message(payload);
}

// ---------------------------------------------------------------------------

ChildProcess::ChildProcess(const std::string& command) {
    // Writes to a worker that has exited must surface as EPIPE, not kill us.
    std::signal(SIGPIPE, SIG_IGN);

    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0)
        throw TransportError(std::string("pipe failed: ") + std::strerror(errno));

    pid_ = fork();
    if (pid_ < 0) throw TransportError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
        // Own process group, so a kill also reaches anything the shell started.
        setpgid(0, 0);
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid_, pid_);
    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
    stderr_fd_ = err_pipe[0];
    stderr_thread_ = std::thread([this] { drain_stderr(); });
}

ChildProcess::~ChildProcess() {
    close_stdin();
    if (running()) kill_and_wait();
    if (stderr_thread_.joinable()) stderr_thread_.join();
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (stderr_fd_ >= 0) close(stderr_fd_);
}

void ChildProcess::drain_stderr() {
    char buf[4096];
    for (;;) {
        const ssize_t got = read(stderr_fd_, buf, sizeof buf);
        if (got < 0 && errno == EINTR) continue;
        if (got <= 0) return;
        std::lock_guard lock(stderr_mutex_);
        stderr_buffer_.append(buf, static_cast<std::size_t>(got));
    }
}

std::string ChildProcess::stderr_text() const {
    std::lock_guard lock(stderr_mutex_);
    return stderr_buffer_;
}

void ChildProcess::write_all(std::string_view bytes) {
    if (stdin_fd_ < 0) throw TransportError("worker input stream is closed");
    while (!bytes.empty()) {
        const ssize_t put = write(stdin_fd_, bytes.data(), bytes.size());
        if (put < 0 && errno == EINTR) continue;
        if (put < 0) throw TransportError(std::string("write to worker failed: ") + std::strerror(errno));
        bytes.remove_prefix(static_cast<std::size_t>(put));
    }
}

std::string ChildProcess::read_up_to(std::size_t n) {
    std::string out(n, '\0');
    std::size_t have = 0;
    while (have < n) {
        const ssize_t got = read(stdout_fd_, out.data() + have, n - have);
        if (got < 0 && errno == EINTR) continue;
        if (got < 0) throw TransportError(std::string("read from worker failed: ") + std::strerror(errno));
        if (got == 0) break;
        have += static_cast<std::size_t>(got);
    }
    out.resize(have);
    return out;
}

void ChildProcess::close_stdin() {
    if (stdin_fd_ >= 0) {
        close(stdin_fd_);
        stdin_fd_ = -1;
    }
}

namespace {

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

std::optional<int> ChildProcess::wait_for(std::chrono::milliseconds timeout) {
    if (exit_status_) return exit_status_;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        int status = 0;
        const pid_t r = waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            exit_status_ = decode_status(status);
            return exit_status_;
        }
        if (r < 0 && errno != EINTR) {
            exit_status_ = -1;
            return exit_status_;
        }
        if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

int ChildProcess::kill_and_wait() {
    if (exit_status_) return *exit_status_;
    kill(-pid_, SIGKILL);
    int status = 0;
    while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    exit_status_ = decode_status(status);
    return *exit_status_;
}

// ---------------------------------------------------------------------------

std::unique_ptr<WorkerHandle> WorkerHandle::spawn(const std::string& command, std::chrono::milliseconds grace) {
    return std::unique_ptr<WorkerHandle>(new WorkerHandle(std::make_unique<ChildProcess>(command), grace));
}

WorkerHandle::WorkerHandle(std::unique_ptr<ChildProcess> child, std::chrono::milliseconds grace)
    : child_(std::move(child)), transport_(*child_), channel_(transport_), grace_(grace) {}

WorkerHandle::WorkerHandle(Transport& transport, std::chrono::milliseconds grace)
    : transport_(transport), channel_(transport_), grace_(grace) {}

WorkerHandle::~WorkerHandle() {
    if (shutdown_status_ || !child_) return;
    try {
        shutdown();
    } catch (...) {
    }
}

std::string WorkerHandle::worker_stderr() const { return child_ ? child_->stderr_text() : std::string(); }

Json WorkerHandle::expect(const char* type) {
    Json reply = channel_.receive();
    const std::string got = reply["type"].get<std::string>();
    if (got == "error") {
        auto msg = reply.find("message");
        std::string text = (msg != reply.end() && msg->is_string()) ? msg->get<std::string>() : "unspecified worker error";
        std::optional<std::size_t> index;
        if (auto idx = reply.find("index"); idx != reply.end() && idx->is_number_unsigned())
            index = idx->get<std::size_t>();
        throw WorkerError(text, index);
    }
    if (got != type) throw ProtocolError("expected \"" + std::string(type) + "\" frame, got \"" + got + "\"");
    return reply;
}

Embedding WorkerHandle::to_embedding(const Json& values, const char* where) const {
    if (!values.is_array()) throw ProtocolError(std::string(where) + ": embedding is not an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].is_number()) throw ProtocolError(std::string(where) + ": embedding has a non-numeric value");
        v[static_cast<Eigen::Index>(i)] = values[i].get<double>();
    }
    try {
        return Embedding(std::move(v), dims_->embedding_dim);
    } catch (const ContractError& e) {
        throw ProtocolError(std::string(where) + ": " + e.what());
    }
}

NegotiatedDims WorkerHandle::handshake(int expected_latent_dim, int expected_embedding_dim) {
    if (dims_) throw ContractError("handshake: already completed");
    auto fail = [&](const std::string& what) -> NegotiatedDims {
        if (child_) {
            child_->close_stdin();
            if (!child_->wait_for(grace_)) child_->kill_and_wait();
            shutdown_status_ = *child_->wait_for(std::chrono::milliseconds(0));
        }
        throw StartupError("worker handshake failed: " + what, worker_stderr());
    };

    Json hello;
    try {
        hello = expect("hello");
    } catch (const EvaluatorError& e) {
        return fail(e.what());
    }
    const auto int_field = [&](const char* key) -> std::optional<long long> {
        auto it = hello.find(key);
        if (it == hello.end() || !it->is_number_integer()) return std::nullopt;
        return it->get<long long>();
    };
    const auto version = int_field("protocol_version");
    const auto latent = int_field("latent_dim");
    const auto embedding = int_field("embedding_dim");
    if (!version || !latent || !embedding) return fail("malformed hello frame");
    if (*version != kProtocolVersion)
        return fail("unsupported protocol_version " + std::to_string(*version));
    if (*latent != expected_latent_dim || *embedding != expected_embedding_dim)
        return fail("dimension mismatch: worker offers (" + std::to_string(*latent) + ", " +
                    std::to_string(*embedding) + "), expected (" + std::to_string(expected_latent_dim) + ", " +
                    std::to_string(expected_embedding_dim) + ")");
    dims_ = NegotiatedDims{expected_latent_dim, expected_embedding_dim};
    return *dims_;
}

Embedding WorkerHandle::set_target(const std::string& image_path) {
    if (!dims_) throw ContractError("set_target: handshake not completed");
    Json request;
    request["type"] = "set_target";
    request["image_path"] = image_path;
    channel_.send(request);
    const Json reply = expect("target_ok");
    auto it = reply.find("embedding");
    if (it == reply.end()) throw ProtocolError("target_ok frame lacks \"embedding\"");
    Embedding target = to_embedding(*it, "target_ok");
    target_set_ = true;
    return target;
}

std::vector<Embedding> WorkerHandle::eval_remote(std::span<const LatentVector> batch) {
    if (!dims_) throw ContractError("eval_remote: handshake not completed");
    if (!target_set_) throw ContractError("eval_remote: target not set");
    if (batch.empty()) throw ContractError("eval_remote: empty batch");

    const std::uint64_t id = next_id_++;
    Json latents = Json::array();
    for (const auto& z : batch) {
        if (z.size() != dims_->latent_dim) throw ContractError("eval_remote: latent has wrong length");
        Json row = Json::array();
        for (Eigen::Index i = 0; i < z.size(); ++i) row.push_back(z[i]);
        latents.push_back(std::move(row));
    }
    Json request;
    request["type"] = "eval";
    request["id"] = id;
    request["latents"] = std::move(latents);
    channel_.send(request);

    const Json reply = expect("embeddings");
    auto rid = reply.find("id");
    if (rid == reply.end() || !rid->is_number_unsigned() || rid->get<std::uint64_t>() != id)
        throw ProtocolError("response id mismatch: expected " + std::to_string(id) + ", got " +
                            (rid == reply.end() ? std::string("none") : rid->dump()));
    auto values = reply.find("embeddings");
    if (values == reply.end() || !values->is_array()) throw ProtocolError("embeddings frame lacks \"embeddings\"");
    if (values->size() != batch.size())
        throw ProtocolError("worker returned " + std::to_string(values->size()) + " embeddings for a batch of " +
                            std::to_string(batch.size()));

    std::vector<Embedding> out;
    out.reserve(batch.size());
    for (const auto& v : *values) out.push_back(to_embedding(v, "embeddings"));
    return out;
}

int WorkerHandle::shutdown() {
    if (shutdown_status_) return *shutdown_status_;
    try {
        channel_.send(Json{{"type", "shutdown"}});
    } catch (const TransportError&) {
        // already gone; reap below
    }
    if (!child_) {
        shutdown_status_ = 0;
        return 0;
    }
    child_->close_stdin();
    auto status = child_->wait_for(grace_);
    shutdown_status_ = status ? *status : child_->kill_and_wait();
    return *shutdown_status_;
}

// ---------------------------------------------------------------------------

WorkerEvaluator::WorkerEvaluator(WorkerHandle& handle, int latent_dim, int embedding_dim)
    : BatchEvaluator(latent_dim, embedding_dim), handle_(handle) {}

const Embedding& WorkerEvaluator::load_target(const std::string& image_path) {
    set_target(handle_.set_target(image_path));
    return target();
}

std::vector<Embedding> WorkerEvaluator::embed_batch(std::span<const LatentVector> batch) {
    return handle_.eval_remote(batch);
}

}  // namespace lve::bridge
