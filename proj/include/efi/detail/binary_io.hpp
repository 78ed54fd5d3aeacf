#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>

namespace efi::detail {

// Little-endian field access independent of host byte order.
template <typename T>
T load_le(const unsigned char* p) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    if constexpr (sizeof(T) == 8) {
        T v;
        std::memcpy(&v, &bits, 8);
        return v;
    } else {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                     std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>;
        const U narrow = static_cast<U>(bits);
        T v;
        std::memcpy(&v, &narrow, sizeof(T));
        return v;
    }
}

template <typename T>
void store_le(unsigned char* p, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        p[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
}

} // namespace efi::detail
