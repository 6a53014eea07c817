// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/frame.hpp"

#include "plantbus/bytes.hpp"

namespace plantbus::session {

const char* toString(DecodeStatus status) {
    switch (status) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::need_more: return "need_more";
        case DecodeStatus::bad_magic: return "bad_magic";
        case DecodeStatus::bad_version: return "bad_version";
        case DecodeStatus::unknown_kind: return "unknown_kind";
        case DecodeStatus::payload_too_large: return "payload_too_large";
    }
    return "?";
}

namespace {

bool isKnownKind(std::uint8_t k) {
    return k >= static_cast<std::uint8_t>(FrameKind::rpc_req) &&
           k <= static_cast<std::uint8_t>(FrameKind::ack);
}

}  // namespace

std::vector<std::uint8_t> encodeFrame(const Frame& frame) {
    if (frame.payload.size() > kMaxPayloadSize)
        throw PayloadTooLargeError("payload of " + std::to_string(frame.payload.size()) +
                                   " bytes exceeds the 16 MiB cap");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + frame.payload.size());
    bytes::putU8(out, kMagic0);
    bytes::putU8(out, kMagic1);
    bytes::putU8(out, kProtocolVersion);
    bytes::putU8(out, static_cast<std::uint8_t>(frame.kind));
    bytes::putU32(out, frame.channel_id);
    bytes::putU64(out, frame.correlation_id);
    bytes::putU32(out, static_cast<std::uint32_t>(frame.payload.size()));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

DecodeResult decodeFrame(std::span<const std::uint8_t> bytes) {
    DecodeResult result;
    if (bytes.size() < 2) {
        // Reject a wrong first byte immediately; otherwise it is a prefix.
        if (bytes.size() >= 1 && bytes[0] != kMagic0) {
            result.status = DecodeStatus::bad_magic;
            return result;
        }
        result.status = DecodeStatus::need_more;
        return result;
    }
    if (bytes[0] != kMagic0 || bytes[1] != kMagic1) {
        result.status = DecodeStatus::bad_magic;
        return result;
    }
    if (bytes.size() < 3) {
        result.status = DecodeStatus::need_more;
        return result;
    }
    if (bytes[2] != kProtocolVersion) {
        result.status = DecodeStatus::bad_version;
        return result;
    }
    if (bytes.size() < 4) {
        result.status = DecodeStatus::need_more;
        return result;
    }
    if (!isKnownKind(bytes[3])) {
        result.status = DecodeStatus::unknown_kind;
        return result;
    }
    if (bytes.size() < kFrameHeaderSize) {
        result.status = DecodeStatus::need_more;
        return result;
    }
    plantbus::bytes::Reader reader(bytes.subspan(4, 16));
    const std::uint32_t channel_id = reader.u32();
    const std::uint64_t correlation_id = reader.u64();
    const std::uint32_t payload_len = reader.u32();
    if (payload_len > kMaxPayloadSize) {
        result.status = DecodeStatus::payload_too_large;
        return result;
    }
    if (bytes.size() < kFrameHeaderSize + payload_len) {
        result.status = DecodeStatus::need_more;
        return result;
    }
    result.status = DecodeStatus::ok;
    result.frame.kind = static_cast<FrameKind>(bytes[3]);
    result.frame.channel_id = channel_id;
    result.frame.correlation_id = correlation_id;
    result.frame.payload.assign(bytes.begin() + kFrameHeaderSize,
                                bytes.begin() + kFrameHeaderSize + payload_len);
    result.consumed = kFrameHeaderSize + payload_len;
    return result;
}

}  // namespace plantbus::session
