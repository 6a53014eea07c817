// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/wire.hpp"

namespace plantbus::wire {

namespace {

rtdb::Quality qualityFromByte(std::uint8_t b) {
    switch (b) {
        case 0: return rtdb::Quality::good;
        case 1: return rtdb::Quality::uncertain;
        case 2: return rtdb::Quality::bad;
        default: throw WireError("invalid quality byte");
    }
}

rtdb::VarKind kindFromByte(std::uint8_t b) {
    switch (b) {
        case 0: return rtdb::VarKind::raw;
        case 1: return rtdb::VarKind::computed;
        default: throw WireError("invalid variable kind byte");
    }
}

}  // namespace

void encodeSample(std::vector<std::uint8_t>& out, const rtdb::Sample& sample) {
    bytes::putString(out, sample.variable.name);
    bytes::putU8(out, sample.variable.kind == rtdb::VarKind::raw ? 0 : 1);
    bytes::putI64(out, sample.timestamp_ms);
    bytes::putF64(out, sample.value);
    bytes::putU8(out, static_cast<std::uint8_t>(sample.quality));
}

rtdb::Sample decodeSample(bytes::Reader& reader) {
    rtdb::Sample sample;
    sample.variable.name = reader.str();
    sample.variable.kind = kindFromByte(reader.u8());
    sample.timestamp_ms = reader.i64();
    sample.value = reader.f64();
    sample.quality = qualityFromByte(reader.u8());
    if (!reader.ok()) throw WireError("truncated sample");
    return sample;
}

std::vector<std::uint8_t> encodeSampleList(const std::vector<rtdb::Sample>& samples) {
    std::vector<std::uint8_t> out;
    bytes::putU32(out, static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) encodeSample(out, s);
    return out;
}

std::vector<rtdb::Sample> decodeSampleList(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    std::uint32_t count = reader.u32();
    if (!reader.ok()) throw WireError("truncated sample list");
    std::vector<rtdb::Sample> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(decodeSample(reader));
    return out;
}

std::vector<std::uint8_t> encodeOptionalSample(const std::optional<rtdb::Sample>& sample) {
    std::vector<std::uint8_t> out;
    bytes::putU8(out, sample ? 1 : 0);
    if (sample) encodeSample(out, *sample);
    return out;
}

std::optional<rtdb::Sample> decodeOptionalSample(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    std::uint8_t has = reader.u8();
    if (!reader.ok()) throw WireError("truncated optional sample");
    if (has == 0) return std::nullopt;
    return decodeSample(reader);
}

std::vector<std::uint8_t> encodeRegisterArgs(const std::string& name, rtdb::VarKind kind) {
    std::vector<std::uint8_t> out;
    bytes::putString(out, name);
    bytes::putU8(out, kind == rtdb::VarKind::raw ? 0 : 1);
    return out;
}

std::pair<std::string, rtdb::VarKind> decodeRegisterArgs(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    std::string name = reader.str();
    rtdb::VarKind kind = kindFromByte(reader.u8());
    if (!reader.ok()) throw WireError("truncated register arguments");
    return {std::move(name), kind};
}

std::vector<std::uint8_t> encodeRangeArgs(const std::string& name, std::int64_t t0, std::int64_t t1) {
    std::vector<std::uint8_t> out;
    bytes::putString(out, name);
    bytes::putI64(out, t0);
    bytes::putI64(out, t1);
    return out;
}

RangeArgs decodeRangeArgs(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    RangeArgs args;
    args.name = reader.str();
    args.t0 = reader.i64();
    args.t1 = reader.i64();
    if (!reader.ok()) throw WireError("truncated range arguments");
    return args;
}

std::vector<std::uint8_t> encodeNameArg(const std::string& name) {
    std::vector<std::uint8_t> out;
    bytes::putString(out, name);
    return out;
}

std::string decodeNameArg(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    std::string name = reader.str();
    if (!reader.ok()) throw WireError("truncated name argument");
    return name;
}

std::vector<std::uint8_t> encodeBool(bool value) { return {static_cast<std::uint8_t>(value ? 1 : 0)}; }

bool decodeBool(std::span<const std::uint8_t> payload) {
    bytes::Reader reader(payload);
    std::uint8_t v = reader.u8();
    if (!reader.ok() || v > 1) throw WireError("truncated boolean");
    return v == 1;
}

}  // namespace plantbus::wire
