#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace mobprof {

using RegionId = std::int32_t;  // arrondissement id
using ZoneId = std::int32_t;    // livelihood-zone id

inline constexpr int kMonths = 12;

/// One value per calendar month, January first; empty slots are missing.
template <class T>
using MonthSlots = std::array<std::optional<T>, kMonths>;

template <class T>
int count_missing(const MonthSlots<T>& slots) {
    int n = 0;
    for (const auto& s : slots) n += s ? 0 : 1;
    return n;
}

}  // namespace mobprof
