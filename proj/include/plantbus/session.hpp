// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plantbus/errors.hpp"
#include "plantbus/frame.hpp"

// The dedicated session sub-layer: four communication patterns (RPC,
// event transfer, data streams, file transfer) over a pluggable transport.
// Two transports are provided with identical semantics: an in-memory frame
// queue and a TCP byte stream carrying encoded frames.

namespace plantbus::session {

enum class BindingMode { in_process, network };

/// How a logical channel reaches its peer. `address` is "host:port" for
/// network bindings and empty for in-process ones.
struct Binding {
    BindingMode mode = BindingMode::in_process;
    std::string address;

    friend bool operator==(const Binding&, const Binding&) = default;
};

/// Splits "host:port" into its parts; throws ConnectFailureError on a
/// malformed address or a port outside 1..65535.
std::pair<std::string, std::uint16_t> parseHostPort(const std::string& address);

class ConnectFailureError : public Error {
public:
    using Error::Error;
};

class DuplicateChannelIdError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public Error {
public:
    using Error::Error;
};

class RemoteError : public Error {
public:
    using Error::Error;
};

class ChannelClosedError : public Error {
public:
    using Error::Error;
};

class DuplicateMethodError : public Error {
public:
    using Error::Error;
};

class AlreadySubscribedError : public Error {
public:
    using Error::Error;
};

class StreamClosedError : public Error {
public:
    using Error::Error;
};

class ChecksumMismatchError : public Error {
public:
    using Error::Error;
};

struct FileReceipt {
    std::string name;
    std::uint64_t size_bytes = 0;
    std::uint32_t checksum = 0;  // CRC-32 of the whole content

    friend bool operator==(const FileReceipt&, const FileReceipt&) = default;
};

struct IncomingFile {
    std::string name;
    std::vector<std::uint8_t> content;
    FileReceipt receipt;
};

/// Receiver-side callbacks for inbound data streams, keyed by stream id.
/// Invoked sequentially in arrival order on the channel's delivery thread.
struct StreamEvents {
    std::function<void(std::uint64_t stream_id)> on_open;
    std::function<void(std::uint64_t stream_id, const std::vector<std::uint8_t>& payload)> on_data;
    std::function<void(std::uint64_t stream_id)> on_close;
};

using RpcHandler = std::function<std::vector<std::uint8_t>(const std::vector<std::uint8_t>&)>;
using EventHandler = std::function<void(const std::vector<std::uint8_t>&)>;
using FileHandler = std::function<void(const IncomingFile&)>;

/// Cancelable handle returned by serve() and subscribe().
class Registration {
public:
    Registration() = default;
    explicit Registration(std::function<void()> cancel) : cancel_(std::move(cancel)) {}
    void cancel() {
        if (cancel_) std::exchange(cancel_, nullptr)();
    }

private:
    std::function<void()> cancel_;
};

namespace detail {
struct EndpointCore;
struct ChannelState;
struct StreamSendState;
}  // namespace detail

/// Sender side of one data stream. send() observes the backpressure window:
/// it blocks while more than 1024 frames are unacknowledged (the receiver
/// acknowledges every 256 delivered frames).
class StreamHandle {
public:
    StreamHandle() = default;

    void send(std::span<const std::uint8_t> payload);
    void close();
    std::uint64_t id() const;

    /// Frames sent but not yet acknowledged; maxInFlight is the high-water mark.
    std::uint64_t inFlight() const;
    std::uint64_t maxInFlight() const;

private:
    friend class Channel;
    StreamHandle(std::shared_ptr<detail::EndpointCore> core,
                 std::shared_ptr<detail::ChannelState> channel,
                 std::shared_ptr<detail::StreamSendState> stream);

    std::shared_ptr<detail::EndpointCore> core_;
    std::shared_ptr<detail::ChannelState> channel_;
    std::shared_ptr<detail::StreamSendState> stream_;
};

/// One logical, FIFO-ordered conduit between two endpoints. Value handle;
/// copies refer to the same channel.
class Channel {
public:
    Channel() = default;

    std::uint32_t id() const;
    bool isOpen() const;
    void close();

    /// RPC: sends the request and blocks for the matching response.
    std::vector<std::uint8_t> call(std::string_view method, std::span<const std::uint8_t> payload,
                                   std::int64_t timeout_ms);
    Registration serve(const std::string& method, RpcHandler handler);

    /// Events: fire-and-forget, per-channel FIFO.
    void publish(std::span<const std::uint8_t> payload);
    Registration subscribe(EventHandler handler);

    /// Streams.
    StreamHandle openStream();
    void onStream(StreamEvents events);

    /// File transfer. Blocks until the receiver acknowledges the checksum.
    FileReceipt sendFile(std::string_view name, std::span<const std::uint8_t> content,
                         std::size_t chunk_size);
    void onFile(FileHandler handler);

    /// Frame-level send on this channel (also used by fault-injection tests).
    void sendRawFrame(Frame frame);

private:
    friend class Endpoint;
    friend struct detail::EndpointCore;
    Channel(std::shared_ptr<detail::EndpointCore> core, std::shared_ptr<detail::ChannelState> state);

    std::shared_ptr<detail::EndpointCore> core_;
    std::shared_ptr<detail::ChannelState> state_;
};

/// One connection holding any number of channels. Value handle.
class Endpoint {
public:
    Endpoint() = default;

    /// Two endpoints joined by an in-memory frame queue.
    static std::pair<Endpoint, Endpoint> inProcessPair();

    /// TCP client connection to "host:port".
    static Endpoint connect(const std::string& address);

    /// Opens a channel explicitly; the same id may be opened once per side.
    Channel openChannel(std::uint32_t channel_id);

    /// Called (on the delivery thread) when the peer speaks on a channel this
    /// side has not opened. Set it before traffic arrives.
    void setChannelAcceptor(std::function<void(Channel)> acceptor);

    void close();
    bool isOpen() const;

private:
    friend class Listener;
    friend Channel openChannel(const Binding&, std::uint32_t);
    explicit Endpoint(std::shared_ptr<detail::EndpointCore> core) : core_(std::move(core)) {}

    std::shared_ptr<detail::EndpointCore> core_;
};

/// TCP listener; hands every accepted connection to the handler before its
/// reader starts, so acceptors can be registered race-free.
class Listener {
public:
    using ConnectionHandler = std::function<void(Endpoint)>;

    /// Binds the port (0 picks an ephemeral one; see port()).
    static std::unique_ptr<Listener> listen(std::uint16_t port, ConnectionHandler handler);

    ~Listener();
    std::uint16_t port() const { return port_; }
    void stop();

private:
    Listener() = default;

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
};

/// Opens one end of a channel through the process-wide rendezvous: the first
/// two opens of an id on an in-process binding get the two ends of that
/// channel; network bindings share one client connection per address.
Channel openChannel(const Binding& binding, std::uint32_t channel_id);

namespace detail {
/// Drops the process-wide state behind openChannel(Binding, id). Test helper.
void resetProcessChannelRegistry();

/// Fault-injection seam: the next sendFile() declares a checksum off by one
/// bit, as corruption in flight would, driving the receiver's rejection path.
void corruptNextFileChecksum();
}  // namespace detail

}  // namespace plantbus::session
