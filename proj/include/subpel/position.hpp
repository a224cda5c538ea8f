#ifndef SUBPEL_POSITION_HPP
#define SUBPEL_POSITION_HPP

#include <array>
#include <string>

#include "subpel/errors.hpp"

namespace subpel {

// One of the 15 fractional sample positions on the quarter-pel grid.
// Offsets fx, fy are in quarter-pel units (0..3), not both zero. A position
// is half-pel iff both offsets are even. The canonical ordering used for
// network heads, dataset targets and plane sets is row-major over (fy, fx),
// i.e. ascending index() = fy*4 + fx.
struct FracPos {
    int fx = 0;
    int fy = 0;

    constexpr int index() const { return fy * 4 + fx; }
    constexpr bool is_half() const { return fx % 2 == 0 && fy % 2 == 0; }

    constexpr bool operator==(const FracPos&) const = default;

    std::string name() const {
        return "f" + std::to_string(index());
    }

    static FracPos from_index(int idx) {
        if (idx < 1 || idx > 15) {
            throw ContractError("fractional position index must be 1..15, got " +
                                std::to_string(idx));
        }
        return FracPos{idx % 4, idx / 4};
    }
};

// Half-pel positions: f2 = (1/2, 0), f8 = (0, 1/2), f10 = (1/2, 1/2).
inline const std::array<FracPos, 3>& half_positions() {
    static const std::array<FracPos, 3> p = {FracPos{2, 0}, FracPos{0, 2}, FracPos{2, 2}};
    return p;
}

// The 12 quarter-pel positions in canonical order.
inline const std::array<FracPos, 12>& quarter_positions() {
    static const std::array<FracPos, 12> p = [] {
        std::array<FracPos, 12> q{};
        int k = 0;
        for (int idx = 1; idx <= 15; ++idx) {
            FracPos pos = FracPos::from_index(idx);
            if (!pos.is_half()) q[k++] = pos;
        }
        return q;
    }();
    return p;
}

// All 15 positions in canonical order.
inline const std::array<FracPos, 15>& all_positions() {
    static const std::array<FracPos, 15> p = [] {
        std::array<FracPos, 15> a{};
        for (int idx = 1; idx <= 15; ++idx) a[idx - 1] = FracPos::from_index(idx);
        return a;
    }();
    return p;
}

} // namespace subpel

#endif
