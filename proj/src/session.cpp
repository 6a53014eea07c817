// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/session.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "plantbus/bytes.hpp"
#include "plantbus/crc32.hpp"

namespace plantbus::session {

// Flow-control constants for data streams. A sender blocks once kWindow
// data frames are unacknowledged; the receiver acknowledges every kAckEvery
// delivered frames and once more on close.
namespace {
constexpr std::uint64_t kStreamWindow = 1024;
constexpr std::uint64_t kStreamAckEvery = 256;

std::atomic<bool> g_corrupt_next_file_checksum{false};
}  // namespace

namespace detail {
void corruptNextFileChecksum() { g_corrupt_next_file_checksum.store(true); }
}  // namespace detail

namespace detail {

struct PendingCall {
    bool done = false;
    bool is_error = false;
    std::vector<std::uint8_t> result;
};

struct StreamSendState {
    std::uint64_t id = 0;
    bool open = true;
    std::uint64_t sent = 0;
    std::uint64_t acked = 0;
    std::uint64_t max_in_flight = 0;
};

struct PendingFileSend {
    bool done = false;
    bool mismatch = false;
    FileReceipt receipt;
};

struct FileAssembly {
    std::string name;
    std::uint64_t declared_size = 0;
    std::vector<std::uint8_t> content;
};

struct ChannelState {
    explicit ChannelState(std::uint32_t channel_id) : id(channel_id) {}

    const std::uint32_t id;
    std::atomic<bool> open{true};
    bool explicitly_opened = false;  // guarded by the endpoint mutex

    // Inbox and handler registry. The worker waits here both for frames and
    // for the handler a frame needs; close() wakes everything.
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Frame> inbox;
    std::map<std::string, RpcHandler> methods;
    EventHandler event_handler;
    StreamEvents stream_events;
    bool stream_events_set = false;
    FileHandler file_handler;

    // Initiator-side completions, resolved on the routing thread so that a
    // handler running on the worker may itself issue calls on this channel.
    std::mutex pending_mu;
    std::condition_variable pending_cv;
    std::map<std::uint64_t, std::shared_ptr<PendingCall>> pending_calls;
    std::map<std::uint64_t, std::shared_ptr<StreamSendState>> out_streams;
    std::map<std::uint64_t, std::shared_ptr<PendingFileSend>> pending_files;

    // Worker-thread-only receive bookkeeping.
    std::map<std::uint64_t, std::uint64_t> delivered;
    std::map<std::uint64_t, FileAssembly> assemblies;
};

void closeState(ChannelState& st) {
    if (st.open.exchange(false) == false) return;
    {
        std::lock_guard<std::mutex> lk(st.mu);
        st.cv.notify_all();
    }
    {
        std::lock_guard<std::mutex> lk(st.pending_mu);
        st.pending_cv.notify_all();
    }
}

struct EndpointCore : std::enable_shared_from_this<EndpointCore> {
    enum class TransportKind { in_process, tcp };

    explicit EndpointCore(TransportKind k) : transport(k) {}

    ~EndpointCore() {
        close();
        if (fd >= 0) ::close(fd);
    }

    const TransportKind transport;
    std::weak_ptr<EndpointCore> peer;  // in_process only
    int fd = -1;                       // tcp only
    std::mutex send_mu;                // serializes socket writes
    std::atomic<bool> closed{false};
    std::atomic<std::uint64_t> next_correlation{1};

    std::mutex mu;  // channels map and acceptor
    std::map<std::uint32_t, std::shared_ptr<ChannelState>> channels;
    std::function<void(Channel)> acceptor;

    std::uint64_t nextCorrelation() { return next_correlation.fetch_add(1); }

    void sendFrame(Frame frame);
    void route(Frame frame);
    std::shared_ptr<ChannelState> findState(std::uint32_t id);
    std::shared_ptr<ChannelState> stateForInbound(std::uint32_t id);
    void close();
};

namespace {

void startWorker(const std::shared_ptr<EndpointCore>& core, const std::shared_ptr<ChannelState>& st);

void writeAll(EndpointCore& core, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::send(core.fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            throw ChannelClosedError("connection lost while sending");
        }
        data += static_cast<std::size_t>(n);
        len -= static_cast<std::size_t>(n);
    }
}

}  // namespace

void EndpointCore::sendFrame(Frame frame) {
    if (closed.load()) throw ChannelClosedError("endpoint closed");
    if (frame.payload.size() > kMaxPayloadSize) {
        throw PayloadTooLargeError("frame payload exceeds 16 MiB");
    }
    if (transport == TransportKind::in_process) {
        auto p = peer.lock();
        if (!p || p->closed.load()) throw ChannelClosedError("peer endpoint closed");
        p->route(std::move(frame));
        return;
    }
    std::vector<std::uint8_t> wire = encodeFrame(frame);
    std::lock_guard<std::mutex> lk(send_mu);
    if (closed.load()) throw ChannelClosedError("endpoint closed");
    try {
        writeAll(*this, wire.data(), wire.size());
    } catch (...) {
        close();
        throw;
    }
}

std::shared_ptr<ChannelState> EndpointCore::findState(std::uint32_t id) {
    std::lock_guard<std::mutex> lk(mu);
    auto it = channels.find(id);
    return it == channels.end() ? nullptr : it->second;
}

// Returns the channel state for inbound traffic, creating it (and firing the
// acceptor) on first contact. The acceptor runs without any lock held, so a
// second routing thread may enqueue before the acceptor returns; the worker
// compensates by waiting for handler registration.
std::shared_ptr<ChannelState> EndpointCore::stateForInbound(std::uint32_t id) {
    std::shared_ptr<ChannelState> st;
    std::function<void(Channel)> acc;
    {
        std::lock_guard<std::mutex> lk(mu);
        auto it = channels.find(id);
        if (it != channels.end()) return it->second;
        st = std::make_shared<ChannelState>(id);
        channels.emplace(id, st);
        acc = acceptor;
    }
    startWorker(shared_from_this(), st);
    if (acc) acc(Channel(shared_from_this(), st));
    return st;
}

void EndpointCore::route(Frame frame) {
    switch (frame.kind) {
        case FrameKind::rpc_resp:
        case FrameKind::rpc_err: {
            auto st = findState(frame.channel_id);
            if (!st) return;
            std::lock_guard<std::mutex> lk(st->pending_mu);
            auto it = st->pending_calls.find(frame.correlation_id);
            if (it == st->pending_calls.end()) return;  // late reply, dropped
            it->second->done = true;
            it->second->is_error = (frame.kind == FrameKind::rpc_err);
            it->second->result = std::move(frame.payload);
            st->pending_calls.erase(it);
            st->pending_cv.notify_all();
            return;
        }
        case FrameKind::ack: {
            auto st = findState(frame.channel_id);
            if (!st) return;
            std::lock_guard<std::mutex> lk(st->pending_mu);
            if (auto sit = st->out_streams.find(frame.correlation_id); sit != st->out_streams.end()) {
                bytes::Reader r(frame.payload);
                std::uint64_t cumulative = r.u64();
                if (r.ok()) sit->second->acked = std::max(sit->second->acked, cumulative);
                st->pending_cv.notify_all();
                return;
            }
            if (auto fit = st->pending_files.find(frame.correlation_id); fit != st->pending_files.end()) {
                bytes::Reader r(frame.payload);
                std::uint8_t status = r.u8();
                auto& pending = *fit->second;
                if (status == 0) {
                    pending.receipt.name = r.str();
                    pending.receipt.size_bytes = r.u64();
                    pending.receipt.checksum = r.u32();
                    pending.mismatch = !r.ok();
                } else {
                    pending.mismatch = true;
                }
                pending.done = true;
                st->pending_files.erase(fit);
                st->pending_cv.notify_all();
                return;
            }
            return;
        }
        default: {
            auto st = stateForInbound(frame.channel_id);
            std::lock_guard<std::mutex> lk(st->mu);
            st->inbox.push_back(std::move(frame));
            st->cv.notify_all();
            return;
        }
    }
}

void EndpointCore::close() {
    if (closed.exchange(true)) return;
    if (transport == TransportKind::tcp && fd >= 0) ::shutdown(fd, SHUT_RDWR);
    std::vector<std::shared_ptr<ChannelState>> all;
    {
        std::lock_guard<std::mutex> lk(mu);
        for (auto& [id, st] : channels) all.push_back(st);
    }
    for (auto& st : all) closeState(*st);
    if (transport == TransportKind::in_process) {
        if (auto p = peer.lock()) p->close();
    }
}

namespace {

// Best-effort send from the delivery thread; a dead endpoint only means the
// reply has nowhere to go.
void trySend(const std::weak_ptr<EndpointCore>& wcore, Frame frame) {
    auto core = wcore.lock();
    if (!core) return;
    try {
        core->sendFrame(std::move(frame));
    } catch (const Error&) {
    }
}

void dispatchRpcRequest(const std::weak_ptr<EndpointCore>& wcore, ChannelState& st, Frame frame) {
    bytes::Reader r(frame.payload);
    std::string method = r.str();
    std::vector<std::uint8_t> args = r.rest();
    if (!r.ok()) {
        trySend(wcore, Frame{FrameKind::rpc_err, st.id, frame.correlation_id,
                             {'b', 'a', 'd', ' ', 'r', 'e', 'q', 'u', 'e', 's', 't'}});
        return;
    }
    RpcHandler handler;
    {
        std::unique_lock<std::mutex> lk(st.mu);
        st.cv.wait(lk, [&] { return !st.open.load() || st.methods.count(method) != 0; });
        if (!st.open.load()) return;
        handler = st.methods[method];
    }
    Frame reply;
    reply.channel_id = st.id;
    reply.correlation_id = frame.correlation_id;
    try {
        reply.payload = handler(args);
        reply.kind = FrameKind::rpc_resp;
    } catch (const std::exception& e) {
        reply.kind = FrameKind::rpc_err;
        const char* what = e.what();
        reply.payload.assign(what, what + std::strlen(what));
    }
    // An oversized result must surface at the caller, not stall it.
    if (reply.kind == FrameKind::rpc_resp && reply.payload.size() > kMaxPayloadSize) {
        reply.kind = FrameKind::rpc_err;
        std::string msg = "response exceeds the frame payload limit";
        reply.payload.assign(msg.begin(), msg.end());
    }
    trySend(wcore, std::move(reply));
}

void dispatchEvent(ChannelState& st, const Frame& frame) {
    EventHandler handler;
    {
        std::unique_lock<std::mutex> lk(st.mu);
        st.cv.wait(lk, [&] { return !st.open.load() || static_cast<bool>(st.event_handler); });
        if (!st.open.load()) return;
        handler = st.event_handler;
    }
    try {
        handler(frame.payload);
    } catch (...) {
    }
}

StreamEvents waitStreamEvents(ChannelState& st) {
    std::unique_lock<std::mutex> lk(st.mu);
    st.cv.wait(lk, [&] { return !st.open.load() || st.stream_events_set; });
    return st.open.load() ? st.stream_events : StreamEvents{};
}

void sendStreamAck(const std::weak_ptr<EndpointCore>& wcore, ChannelState& st, std::uint64_t stream_id,
                   std::uint64_t cumulative) {
    std::vector<std::uint8_t> payload;
    bytes::putU64(payload, cumulative);
    trySend(wcore, Frame{FrameKind::ack, st.id, stream_id, std::move(payload)});
}

void dispatchFileDone(const std::weak_ptr<EndpointCore>& wcore, ChannelState& st, const Frame& frame) {
    auto it = st.assemblies.find(frame.correlation_id);
    if (it == st.assemblies.end()) return;
    FileAssembly assembly = std::move(it->second);
    st.assemblies.erase(it);

    bytes::Reader r(frame.payload);
    std::uint32_t declared_crc = r.u32();
    std::uint32_t actual_crc = crc32(assembly.content);
    bool good = r.ok() && declared_crc == actual_crc && assembly.content.size() == assembly.declared_size;

    std::vector<std::uint8_t> ack;
    if (good) {
        bytes::putU8(ack, 0);
        bytes::putString(ack, assembly.name);
        bytes::putU64(ack, assembly.content.size());
        bytes::putU32(ack, actual_crc);
        FileHandler handler;
        {
            std::lock_guard<std::mutex> lk(st.mu);
            handler = st.file_handler;
        }
        if (handler) {
            IncomingFile file;
            file.name = assembly.name;
            file.receipt = FileReceipt{assembly.name, assembly.content.size(), actual_crc};
            file.content = std::move(assembly.content);
            try {
                handler(file);
            } catch (...) {
            }
        }
    } else {
        bytes::putU8(ack, 1);
    }
    trySend(wcore, Frame{FrameKind::ack, st.id, frame.correlation_id, std::move(ack)});
}

void dispatch(const std::weak_ptr<EndpointCore>& wcore, ChannelState& st, Frame frame) {
    switch (frame.kind) {
        case FrameKind::rpc_req:
            dispatchRpcRequest(wcore, st, std::move(frame));
            return;
        case FrameKind::event:
            dispatchEvent(st, frame);
            return;
        case FrameKind::stream_open: {
            StreamEvents events = waitStreamEvents(st);
            st.delivered[frame.correlation_id] = 0;
            if (events.on_open) {
                try {
                    events.on_open(frame.correlation_id);
                } catch (...) {
                }
            }
            return;
        }
        case FrameKind::stream_data: {
            StreamEvents events = waitStreamEvents(st);
            if (events.on_data) {
                try {
                    events.on_data(frame.correlation_id, frame.payload);
                } catch (...) {
                }
            }
            std::uint64_t count = ++st.delivered[frame.correlation_id];
            if (count % kStreamAckEvery == 0) sendStreamAck(wcore, st, frame.correlation_id, count);
            return;
        }
        case FrameKind::stream_close: {
            StreamEvents events = waitStreamEvents(st);
            sendStreamAck(wcore, st, frame.correlation_id, st.delivered[frame.correlation_id]);
            if (events.on_close) {
                try {
                    events.on_close(frame.correlation_id);
                } catch (...) {
                }
            }
            st.delivered.erase(frame.correlation_id);
            return;
        }
        case FrameKind::file_meta: {
            bytes::Reader r(frame.payload);
            FileAssembly assembly;
            assembly.name = r.str();
            assembly.declared_size = r.u64();
            if (!r.ok()) return;
            assembly.content.reserve(static_cast<std::size_t>(
                std::min<std::uint64_t>(assembly.declared_size, 64 * 1024 * 1024)));
            st.assemblies[frame.correlation_id] = std::move(assembly);
            return;
        }
        case FrameKind::file_chunk: {
            auto it = st.assemblies.find(frame.correlation_id);
            if (it == st.assemblies.end()) return;
            it->second.content.insert(it->second.content.end(), frame.payload.begin(),
                                      frame.payload.end());
            return;
        }
        case FrameKind::file_done:
            dispatchFileDone(wcore, st, frame);
            return;
        default:
            return;  // responses and acks never reach the inbox
    }
}

// One delivery thread per channel: pops the inbox in FIFO order and invokes
// handlers sequentially. Exits when the channel closes; queued frames are
// then discarded.
void startWorker(const std::shared_ptr<EndpointCore>& core, const std::shared_ptr<ChannelState>& st) {
    std::weak_ptr<EndpointCore> wcore = core;
    std::thread([wcore, st] {
        for (;;) {
            Frame frame;
            {
                std::unique_lock<std::mutex> lk(st->mu);
                st->cv.wait(lk, [&] { return !st->open.load() || !st->inbox.empty(); });
                if (!st->open.load()) return;
                frame = std::move(st->inbox.front());
                st->inbox.pop_front();
            }
            dispatch(wcore, *st, std::move(frame));
            if (!st->open.load()) return;
        }
    }).detach();
}

}  // namespace
}  // namespace detail

using detail::ChannelState;
using detail::EndpointCore;

std::pair<std::string, std::uint16_t> parseHostPort(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        throw ConnectFailureError("invalid address, expected host:port: " + address);
    }
    std::string host = address.substr(0, colon);
    std::string port_text = address.substr(colon + 1);
    long port = 0;
    for (char c : port_text) {
        if (c < '0' || c > '9') throw ConnectFailureError("invalid port in address: " + address);
        port = port * 10 + (c - '0');
        if (port > 65535) throw ConnectFailureError("port out of range in address: " + address);
    }
    if (port < 1) throw ConnectFailureError("port out of range in address: " + address);
    return {host, static_cast<std::uint16_t>(port)};
}

// ---------------------------------------------------------------------------
// StreamHandle

StreamHandle::StreamHandle(std::shared_ptr<EndpointCore> core, std::shared_ptr<ChannelState> channel,
                           std::shared_ptr<detail::StreamSendState> stream)
    : core_(std::move(core)), channel_(std::move(channel)), stream_(std::move(stream)) {}

std::uint64_t StreamHandle::id() const { return stream_ ? stream_->id : 0; }

std::uint64_t StreamHandle::inFlight() const {
    if (!stream_) return 0;
    std::lock_guard<std::mutex> lk(channel_->pending_mu);
    return stream_->sent - stream_->acked;
}

std::uint64_t StreamHandle::maxInFlight() const {
    if (!stream_) return 0;
    std::lock_guard<std::mutex> lk(channel_->pending_mu);
    return stream_->max_in_flight;
}

void StreamHandle::send(std::span<const std::uint8_t> payload) {
    if (!stream_) throw StreamClosedError("stream handle not bound");
    {
        std::unique_lock<std::mutex> lk(channel_->pending_mu);
        if (!stream_->open) throw StreamClosedError("stream closed");
        channel_->pending_cv.wait(lk, [&] {
            return !channel_->open.load() || stream_->sent - stream_->acked < kStreamWindow;
        });
        if (!channel_->open.load()) throw ChannelClosedError("channel closed");
        stream_->sent += 1;
        stream_->max_in_flight = std::max(stream_->max_in_flight, stream_->sent - stream_->acked);
    }
    Frame frame{FrameKind::stream_data, channel_->id, stream_->id,
                std::vector<std::uint8_t>(payload.begin(), payload.end())};
    core_->sendFrame(std::move(frame));
}

void StreamHandle::close() {
    if (!stream_) return;
    {
        std::lock_guard<std::mutex> lk(channel_->pending_mu);
        if (!stream_->open) return;
        stream_->open = false;
    }
    if (!channel_->open.load()) return;
    core_->sendFrame(Frame{FrameKind::stream_close, channel_->id, stream_->id, {}});
}

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(std::shared_ptr<EndpointCore> core, std::shared_ptr<ChannelState> state)
    : core_(std::move(core)), state_(std::move(state)) {}

std::uint32_t Channel::id() const { return state_ ? state_->id : 0; }

bool Channel::isOpen() const { return state_ && state_->open.load() && core_ && !core_->closed.load(); }

void Channel::close() {
    if (state_) detail::closeState(*state_);
}

namespace {

void requireBound(const std::shared_ptr<ChannelState>& st) {
    if (!st) throw ChannelClosedError("channel handle not bound");
}

void requireOpen(const std::shared_ptr<ChannelState>& st) {
    requireBound(st);
    if (!st->open.load()) throw ChannelClosedError("channel closed");
}

}  // namespace

std::vector<std::uint8_t> Channel::call(std::string_view method, std::span<const std::uint8_t> payload,
                                        std::int64_t timeout_ms) {
    requireOpen(state_);
    std::uint64_t corr = core_->nextCorrelation();
    auto pending = std::make_shared<detail::PendingCall>();
    {
        std::lock_guard<std::mutex> lk(state_->pending_mu);
        state_->pending_calls.emplace(corr, pending);
    }
    Frame frame;
    frame.kind = FrameKind::rpc_req;
    frame.channel_id = state_->id;
    frame.correlation_id = corr;
    bytes::putString(frame.payload, method);
    frame.payload.insert(frame.payload.end(), payload.begin(), payload.end());
    try {
        core_->sendFrame(std::move(frame));
    } catch (...) {
        std::lock_guard<std::mutex> lk(state_->pending_mu);
        state_->pending_calls.erase(corr);
        throw;
    }

    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    std::unique_lock<std::mutex> lk(state_->pending_mu);
    bool woke = state_->pending_cv.wait_until(lk, deadline,
                                              [&] { return pending->done || !state_->open.load(); });
    if (!pending->done) {
        state_->pending_calls.erase(corr);
        if (!woke) {
            throw TimeoutError("rpc timed out after " + std::to_string(timeout_ms) +
                               " ms: " + std::string(method));
        }
        throw ChannelClosedError("channel closed while call in flight");
    }
    if (pending->is_error) {
        throw RemoteError(std::string(pending->result.begin(), pending->result.end()));
    }
    return std::move(pending->result);
}

Registration Channel::serve(const std::string& method, RpcHandler handler) {
    requireOpen(state_);
    {
        std::lock_guard<std::mutex> lk(state_->mu);
        if (state_->methods.count(method)) {
            throw DuplicateMethodError("method already registered: " + method);
        }
        state_->methods.emplace(method, std::move(handler));
        state_->cv.notify_all();
    }
    std::weak_ptr<ChannelState> wst = state_;
    return Registration([wst, method] {
        if (auto st = wst.lock()) {
            std::lock_guard<std::mutex> lk(st->mu);
            st->methods.erase(method);
        }
    });
}

void Channel::publish(std::span<const std::uint8_t> payload) {
    requireOpen(state_);
    core_->sendFrame(Frame{FrameKind::event, state_->id, 0,
                           std::vector<std::uint8_t>(payload.begin(), payload.end())});
}

Registration Channel::subscribe(EventHandler handler) {
    requireOpen(state_);
    {
        std::lock_guard<std::mutex> lk(state_->mu);
        if (state_->event_handler) throw AlreadySubscribedError("channel already has a subscriber");
        state_->event_handler = std::move(handler);
        state_->cv.notify_all();
    }
    std::weak_ptr<ChannelState> wst = state_;
    return Registration([wst] {
        if (auto st = wst.lock()) {
            std::lock_guard<std::mutex> lk(st->mu);
            st->event_handler = nullptr;
        }
    });
}

StreamHandle Channel::openStream() {
    requireOpen(state_);
    auto stream = std::make_shared<detail::StreamSendState>();
    stream->id = core_->nextCorrelation();
    {
        std::lock_guard<std::mutex> lk(state_->pending_mu);
        state_->out_streams.emplace(stream->id, stream);
    }
    core_->sendFrame(Frame{FrameKind::stream_open, state_->id, stream->id, {}});
    return StreamHandle(core_, state_, stream);
}

void Channel::onStream(StreamEvents events) {
    requireBound(state_);
    std::lock_guard<std::mutex> lk(state_->mu);
    state_->stream_events = std::move(events);
    state_->stream_events_set = true;
    state_->cv.notify_all();
}

FileReceipt Channel::sendFile(std::string_view name, std::span<const std::uint8_t> content,
                              std::size_t chunk_size) {
    requireOpen(state_);
    if (chunk_size == 0) throw Error("chunk size must be positive");
    if (chunk_size > kMaxPayloadSize) throw PayloadTooLargeError("chunk size exceeds 16 MiB");

    std::uint64_t corr = core_->nextCorrelation();
    auto pending = std::make_shared<detail::PendingFileSend>();
    {
        std::lock_guard<std::mutex> lk(state_->pending_mu);
        state_->pending_files.emplace(corr, pending);
    }

    try {
        Frame meta;
        meta.kind = FrameKind::file_meta;
        meta.channel_id = state_->id;
        meta.correlation_id = corr;
        bytes::putString(meta.payload, name);
        bytes::putU64(meta.payload, content.size());
        core_->sendFrame(std::move(meta));

        for (std::size_t off = 0; off < content.size(); off += chunk_size) {
            std::size_t len = std::min(chunk_size, content.size() - off);
            Frame chunk{FrameKind::file_chunk, state_->id, corr,
                        std::vector<std::uint8_t>(content.begin() + static_cast<std::ptrdiff_t>(off),
                                                  content.begin() + static_cast<std::ptrdiff_t>(off + len))};
            core_->sendFrame(std::move(chunk));
        }

        Frame done;
        done.kind = FrameKind::file_done;
        done.channel_id = state_->id;
        done.correlation_id = corr;
        std::uint32_t declared = crc32(content);
        if (g_corrupt_next_file_checksum.exchange(false)) declared ^= 1u;
        bytes::putU32(done.payload, declared);
        core_->sendFrame(std::move(done));
    } catch (...) {
        std::lock_guard<std::mutex> lk(state_->pending_mu);
        state_->pending_files.erase(corr);
        throw;
    }

    std::unique_lock<std::mutex> lk(state_->pending_mu);
    state_->pending_cv.wait(lk, [&] { return pending->done || !state_->open.load(); });
    if (!pending->done) {
        state_->pending_files.erase(corr);
        throw ChannelClosedError("channel closed during file transfer");
    }
    if (pending->mismatch) {
        throw ChecksumMismatchError("file checksum rejected by receiver: " + std::string(name));
    }
    return pending->receipt;
}

void Channel::onFile(FileHandler handler) {
    requireBound(state_);
    std::lock_guard<std::mutex> lk(state_->mu);
    state_->file_handler = std::move(handler);
    state_->cv.notify_all();
}

void Channel::sendRawFrame(Frame frame) {
    requireOpen(state_);
    frame.channel_id = state_->id;
    core_->sendFrame(std::move(frame));
}

// ---------------------------------------------------------------------------
// Endpoint

std::pair<Endpoint, Endpoint> Endpoint::inProcessPair() {
    auto a = std::make_shared<EndpointCore>(EndpointCore::TransportKind::in_process);
    auto b = std::make_shared<EndpointCore>(EndpointCore::TransportKind::in_process);
    a->peer = b;
    b->peer = a;
    return {Endpoint(a), Endpoint(b)};
}

Channel Endpoint::openChannel(std::uint32_t channel_id) {
    if (!core_) throw ChannelClosedError("endpoint handle not bound");
    if (core_->closed.load()) throw ChannelClosedError("endpoint closed");
    std::shared_ptr<ChannelState> st;
    {
        std::lock_guard<std::mutex> lk(core_->mu);
        auto it = core_->channels.find(channel_id);
        if (it != core_->channels.end()) {
            if (it->second->explicitly_opened) {
                throw DuplicateChannelIdError("channel id already open on this connection: " +
                                              std::to_string(channel_id));
            }
            it->second->explicitly_opened = true;
            return Channel(core_, it->second);
        }
        st = std::make_shared<ChannelState>(channel_id);
        st->explicitly_opened = true;
        core_->channels.emplace(channel_id, st);
    }
    detail::startWorker(core_, st);
    return Channel(core_, st);
}

void Endpoint::setChannelAcceptor(std::function<void(Channel)> acceptor) {
    if (!core_) throw ChannelClosedError("endpoint handle not bound");
    std::lock_guard<std::mutex> lk(core_->mu);
    core_->acceptor = std::move(acceptor);
}

void Endpoint::close() {
    if (core_) core_->close();
}

bool Endpoint::isOpen() const { return core_ && !core_->closed.load(); }

namespace {

// Reader loop for one TCP connection; owns a shared reference to the core so
// the connection outlives dropped user handles.
void runTcpReader(std::shared_ptr<EndpointCore> core) {
    std::vector<std::uint8_t> buffer;
    std::size_t start = 0;
    std::uint8_t chunk[64 * 1024];
    for (;;) {
        ssize_t n = ::recv(core->fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.insert(buffer.end(), chunk, chunk + n);
        bool fatal = false;
        for (;;) {
            auto res = decodeFrame(std::span<const std::uint8_t>(buffer.data() + start, buffer.size() - start));
            if (res.status == DecodeStatus::ok) {
                start += res.consumed;
                core->route(std::move(res.frame));
                continue;
            }
            if (res.status == DecodeStatus::need_more) break;
            fatal = true;  // protocol violation: drop the connection
            break;
        }
        if (fatal) break;
        if (start == buffer.size()) {
            buffer.clear();
            start = 0;
        } else if (start > (1u << 20)) {
            buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(start));
            start = 0;
        }
    }
    core->close();
}

std::shared_ptr<EndpointCore> makeTcpCore(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto core = std::make_shared<EndpointCore>(EndpointCore::TransportKind::tcp);
    core->fd = fd;
    return core;
}

void startTcpReader(const std::shared_ptr<EndpointCore>& core) {
    std::thread(runTcpReader, core).detach();
}

}  // namespace

Endpoint Endpoint::connect(const std::string& address) {
    auto [host, port] = parseHostPort(address);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* results = nullptr;
    std::string port_text = std::to_string(port);
    int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &results);
    if (rc != 0) {
        throw ConnectFailureError("cannot resolve " + address + ": " + gai_strerror(rc));
    }
    int fd = -1;
    int saved_errno = 0;
    for (addrinfo* ai = results; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            saved_errno = errno;
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        saved_errno = errno;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(results);
    if (fd < 0) {
        throw ConnectFailureError("connect to " + address + " failed: " +
                                  std::strerror(saved_errno ? saved_errno : ECONNREFUSED));
    }
    auto core = makeTcpCore(fd);
    startTcpReader(core);
    return Endpoint(core);
}

// ---------------------------------------------------------------------------
// Listener

struct Listener::Impl {
    int fd = -1;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};
    ConnectionHandler handler;
    std::mutex mu;
    std::vector<std::shared_ptr<EndpointCore>> accepted;
};

std::unique_ptr<Listener> Listener::listen(std::uint16_t port, ConnectionHandler handler) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConnectFailureError("cannot create listening socket");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(fd);
        throw ConnectFailureError("cannot bind port " + std::to_string(port) + ": " +
                                  std::strerror(err));
    }
    if (::listen(fd, 64) != 0) {
        int err = errno;
        ::close(fd);
        throw ConnectFailureError(std::string("listen failed: ") + std::strerror(err));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

    auto listener = std::unique_ptr<Listener>(new Listener());
    listener->port_ = ntohs(addr.sin_port);
    listener->impl_ = std::make_unique<Impl>();
    Impl* impl = listener->impl_.get();
    impl->fd = fd;
    impl->handler = std::move(handler);
    impl->accept_thread = std::thread([impl] {
        for (;;) {
            int conn = ::accept(impl->fd, nullptr, nullptr);
            if (conn < 0) {
                if (errno == EINTR) continue;
                return;  // listener stopped or failed
            }
            auto core = makeTcpCore(conn);
            {
                std::lock_guard<std::mutex> lk(impl->mu);
                if (impl->stopping.load()) {
                    core->close();
                    continue;
                }
                impl->accepted.push_back(core);
            }
            // Handler runs before the reader so acceptors are registered
            // ahead of the first inbound frame.
            if (impl->handler) impl->handler(Endpoint(core));
            startTcpReader(core);
        }
    });
    return listener;
}

void Listener::stop() {
    if (!impl_) return;
    if (impl_->stopping.exchange(true)) return;
    ::shutdown(impl_->fd, SHUT_RDWR);
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    ::close(impl_->fd);
    std::vector<std::shared_ptr<EndpointCore>> accepted;
    {
        std::lock_guard<std::mutex> lk(impl_->mu);
        accepted.swap(impl_->accepted);
    }
    for (auto& core : accepted) core->close();
}

Listener::~Listener() { stop(); }

// ---------------------------------------------------------------------------
// Process-wide channel rendezvous

namespace {

struct ProcessRegistry {
    std::mutex mu;
    struct PairEntry {
        Endpoint a;
        Endpoint b;
        int claims = 0;
    };
    std::map<std::uint32_t, PairEntry> in_process;
    std::map<std::string, Endpoint> network_clients;
};

ProcessRegistry& processRegistry() {
    static ProcessRegistry* registry = new ProcessRegistry();
    return *registry;
}

}  // namespace

Channel openChannel(const Binding& binding, std::uint32_t channel_id) {
    auto& reg = processRegistry();
    if (binding.mode == BindingMode::in_process) {
        std::lock_guard<std::mutex> lk(reg.mu);
        auto& entry = reg.in_process[channel_id];
        if (entry.claims == 0) {
            auto [a, b] = Endpoint::inProcessPair();
            entry.a = a;
            entry.b = b;
            entry.claims = 1;
            return entry.a.openChannel(channel_id);
        }
        if (entry.claims == 1) {
            entry.claims = 2;
            return entry.b.openChannel(channel_id);
        }
        throw DuplicateChannelIdError("both ends of in-process channel already claimed: " +
                                      std::to_string(channel_id));
    }
    std::lock_guard<std::mutex> lk(reg.mu);
    auto it = reg.network_clients.find(binding.address);
    if (it == reg.network_clients.end() || !it->second.isOpen()) {
        reg.network_clients[binding.address] = Endpoint::connect(binding.address);
        it = reg.network_clients.find(binding.address);
    }
    return it->second.openChannel(channel_id);
}

namespace detail {

void resetProcessChannelRegistry() {
    auto& reg = processRegistry();
    std::lock_guard<std::mutex> lk(reg.mu);
    for (auto& [id, entry] : reg.in_process) {
        entry.a.close();
        entry.b.close();
    }
    reg.in_process.clear();
    for (auto& [addr, ep] : reg.network_clients) ep.close();
    reg.network_clients.clear();
}

}  // namespace detail

}  // namespace plantbus::session
