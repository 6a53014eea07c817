// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plantbus/bytes.hpp"
#include "plantbus/errors.hpp"
#include "plantbus/rtdb.hpp"

// Payload codecs for samples and the store's RPC methods. Values travel as
// raw IEEE-754 bits, so a sample survives any number of hops bit-exactly.

namespace plantbus::wire {

class WireError : public Error {
public:
    using Error::Error;
};

void encodeSample(std::vector<std::uint8_t>& out, const rtdb::Sample& sample);
rtdb::Sample decodeSample(bytes::Reader& reader);

std::vector<std::uint8_t> encodeSampleList(const std::vector<rtdb::Sample>& samples);
std::vector<rtdb::Sample> decodeSampleList(std::span<const std::uint8_t> payload);

/// One optional sample, as "latest" answers: empty or a single sample.
std::vector<std::uint8_t> encodeOptionalSample(const std::optional<rtdb::Sample>& sample);
std::optional<rtdb::Sample> decodeOptionalSample(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encodeRegisterArgs(const std::string& name, rtdb::VarKind kind);
std::pair<std::string, rtdb::VarKind> decodeRegisterArgs(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encodeRangeArgs(const std::string& name, std::int64_t t0, std::int64_t t1);
struct RangeArgs {
    std::string name;
    std::int64_t t0 = 0;
    std::int64_t t1 = 0;
};
RangeArgs decodeRangeArgs(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encodeNameArg(const std::string& name);
std::string decodeNameArg(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encodeBool(bool value);
bool decodeBool(std::span<const std::uint8_t> payload);

}  // namespace plantbus::wire
