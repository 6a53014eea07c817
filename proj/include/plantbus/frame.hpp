// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plantbus/errors.hpp"

// The wire unit carrying all four session patterns. Header is 20 bytes,
// big-endian: magic 0x50 0x42 ("PB"), version 0x01, kind, channel_id (4),
// correlation_id (8), payload_length (4); then the payload.

namespace plantbus::session {

enum class FrameKind : std::uint8_t {
    rpc_req = 0x01,
    rpc_resp = 0x02,
    rpc_err = 0x03,
    event = 0x04,
    stream_open = 0x05,
    stream_data = 0x06,
    stream_close = 0x07,
    file_meta = 0x08,
    file_chunk = 0x09,
    file_done = 0x0A,
    ack = 0x0B,
};

inline constexpr std::size_t kFrameHeaderSize = 20;
inline constexpr std::size_t kMaxPayloadSize = 16 * 1024 * 1024;
inline constexpr std::uint8_t kMagic0 = 0x50;
inline constexpr std::uint8_t kMagic1 = 0x42;
inline constexpr std::uint8_t kProtocolVersion = 0x01;

struct Frame {
    FrameKind kind = FrameKind::event;
    std::uint32_t channel_id = 0;
    std::uint64_t correlation_id = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

class PayloadTooLargeError : public Error {
public:
    using Error::Error;
};

std::vector<std::uint8_t> encodeFrame(const Frame& frame);

enum class DecodeStatus {
    ok,
    need_more,  // the input holds a prefix of a valid frame
    bad_magic,
    bad_version,
    unknown_kind,
    payload_too_large,
};

const char* toString(DecodeStatus status);

struct DecodeResult {
    DecodeStatus status = DecodeStatus::need_more;
    Frame frame;
    std::size_t consumed = 0;  // bytes consumed on ok, otherwise 0
};

/// Consumes exactly one frame from the front of `bytes`. Never reads past
/// the declared payload length.
DecodeResult decodeFrame(std::span<const std::uint8_t> bytes);

}  // namespace plantbus::session
