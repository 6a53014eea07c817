// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <span>

namespace plantbus::session {

/// CRC-32 as in ISO 3309: polynomial 0x04C11DB7 reflected, initial value
/// 0xFFFFFFFF, final XOR 0xFFFFFFFF. Empty input yields 0.
std::uint32_t crc32(std::span<const std::uint8_t> data);

}  // namespace plantbus::session
