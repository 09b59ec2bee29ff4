#pragma once

#include "lve/core.hpp"
#include "lve/evaluator.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace lve::bridge {

using Json = nlohmann::ordered_json;

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 28;

/// Malformed frame or message, unexpected message type, or id mismatch.
class ProtocolError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

/// The stream ended inside a frame.
class FramingError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// The worker went away or a pipe failed.
class TransportError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

/// An {"type":"error"} frame. what() is the worker's message verbatim.
class WorkerError : public EvaluatorError {
public:
    WorkerError(const std::string& message, std::optional<std::size_t> index)
        : EvaluatorError(message), index_(index) {}

    std::optional<std::size_t> index() const { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// Handshake failure; carries whatever the worker wrote to stderr.
class StartupError : public EvaluatorError {
public:
    StartupError(const std::string& what, std::string worker_stderr)
        : EvaluatorError(worker_stderr.empty() ? what : what + "\nworker stderr:\n" + worker_stderr),
          worker_stderr_(std::move(worker_stderr)) {}

    const std::string& worker_stderr() const { return worker_stderr_; }

private:
    std::string worker_stderr_;
};

/// 4-byte big-endian payload length followed by the compact UTF-8 JSON payload.
std::string encode_frame(const Json& message);

/// Decodes exactly one frame occupying all of `bytes`. The payload must be a
/// JSON object with a string "type" field.
Json decode_frame(std::string_view bytes);

/// Validates a payload as a protocol message.
Json parse_message(std::string_view payload);

/// Byte stream to a worker.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write_all(std::string_view bytes) = 0;
    /// Reads up to n bytes, blocking until n are available or the stream ends.
    /// A short result means end of stream.
    virtual std::string read_up_to(std::size_t n) = 0;
};

/// Reads and writes whole frames over a Transport.
class FrameChannel {
public:
    explicit FrameChannel(Transport& transport) : transport_(transport) {}

    void send(const Json& message);
    Json receive();

private:
    Transport& transport_;
};

/// A child process running `/bin/sh -c command` with its stdin/stdout piped to
/// us and its stderr collected in the background.
class ChildProcess : public Transport {
public:
    explicit ChildProcess(const std::string& command);
    ~ChildProcess() override;

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    void write_all(std::string_view bytes) override;
    std::string read_up_to(std::size_t n) override;

    void close_stdin();
    /// Exit status if the child exits within `timeout`; signals map to 128 + signo.
    std::optional<int> wait_for(std::chrono::milliseconds timeout);
    int kill_and_wait();
    bool running() const { return !exit_status_.has_value(); }
    std::string stderr_text() const;

private:
    void drain_stderr();

    int pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int stderr_fd_ = -1;
    std::optional<int> exit_status_;
    mutable std::mutex stderr_mutex_;
    std::string stderr_buffer_;
    std::thread stderr_thread_;
};

struct NegotiatedDims {
    int latent_dim;
    int embedding_dim;
};

/// Client end of one worker session. Strict request/response; single owner.
class WorkerHandle {
public:
    /// Launches `command` through the shell.
    static std::unique_ptr<WorkerHandle> spawn(const std::string& command,
                                               std::chrono::milliseconds grace = std::chrono::seconds(5));

    /// Talks over an externally owned transport (used for in-process workers).
    explicit WorkerHandle(Transport& transport, std::chrono::milliseconds grace = std::chrono::seconds(5));
    ~WorkerHandle();

    WorkerHandle(const WorkerHandle&) = delete;
    WorkerHandle& operator=(const WorkerHandle&) = delete;

    NegotiatedDims handshake(int expected_latent_dim, int expected_embedding_dim);
    Embedding set_target(const std::string& image_path);
    std::vector<Embedding> eval_remote(std::span<const LatentVector> batch);
    /// Sends shutdown and waits up to the grace period, then kills. Returns the
    /// exit status (0 for in-process transports). Repeated calls return the
    /// first result without touching the worker.
    int shutdown();

    bool handshake_done() const { return dims_.has_value(); }
    std::uint64_t next_request_id() const { return next_id_; }
    std::string worker_stderr() const;

private:
    WorkerHandle(std::unique_ptr<ChildProcess> child, std::chrono::milliseconds grace);

    Json expect(const char* type);
    Embedding to_embedding(const Json& values, const char* where) const;

    std::unique_ptr<ChildProcess> child_;
    Transport& transport_;
    FrameChannel channel_;
    std::chrono::milliseconds grace_;
    std::optional<NegotiatedDims> dims_;
    bool target_set_ = false;
    std::uint64_t next_id_ = 1;
    std::optional<int> shutdown_status_;
};

/// BatchEvaluator backed by a worker. The target embedding comes from the
/// worker's set_target reply; distances are computed locally.
class WorkerEvaluator : public BatchEvaluator {
public:
    WorkerEvaluator(WorkerHandle& handle, int latent_dim, int embedding_dim);

    /// Asks the worker to embed the image and adopts the result as target.
    const Embedding& load_target(const std::string& image_path);

protected:
    std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) override;

private:
    WorkerHandle& handle_;
};

}  // namespace lve::bridge
