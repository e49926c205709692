#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

namespace navagent {

// Grid coordinates: row 0 is the top row, col 0 the leftmost column.
struct Cell {
    int row = 0;
    int col = 0;

    bool operator==(const Cell& o) const { return row == o.row && col == o.col; }
    bool operator!=(const Cell& o) const { return !(*this == o); }
    bool operator<(const Cell& o) const {
        return row != o.row ? row < o.row : col < o.col;
    }
};

inline std::string to_string(const Cell& c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

// Inclusive cell rectangle [r0..r1] x [c0..c1].
struct Rect {
    int r0 = 0;
    int c0 = 0;
    int r1 = 0;
    int c1 = 0;

    bool contains(const Cell& c) const {
        return c.row >= r0 && c.row <= r1 && c.col >= c0 && c.col <= c1;
    }
    bool overlaps(const Rect& o) const {
        return !(r1 < o.r0 || o.r1 < r0 || c1 < o.c0 || o.c1 < c0);
    }
    Cell center() const { return Cell{(r0 + r1) / 2, (c0 + c1) / 2}; }
    bool operator==(const Rect& o) const {
        return r0 == o.r0 && c0 == o.c0 && r1 == o.r1 && c1 == o.c1;
    }
};

// 4-neighbourhood in the fixed expansion order N, E, S, W.
inline std::vector<Cell> neighbors4(const Cell& c) {
    return {{c.row - 1, c.col}, {c.row, c.col + 1}, {c.row + 1, c.col}, {c.row, c.col - 1}};
}

inline std::vector<Cell> neighbors8(const Cell& c) {
    std::vector<Cell> out;
    out.reserve(8);
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
            if (dr != 0 || dc != 0) out.push_back(Cell{c.row + dr, c.col + dc});
    return out;
}

inline int manhattan(const Cell& a, const Cell& b) {
    return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

inline double euclidean(const Cell& a, const Cell& b) {
    const double dr = a.row - b.row;
    const double dc = a.col - b.col;
    return std::sqrt(dr * dr + dc * dc);
}

// All cells touched by the segment between the centres of a and b.
// When the segment passes exactly through a lattice corner, both flanking
// cells are included, so a diagonal pair of obstacles cannot be seen
// through. Output is ordered from a to b.
std::vector<Cell> supercover_line(const Cell& a, const Cell& b);

// splitmix64: tiny fully-specified generator so seeded streams are
// identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        // rejection sampling keeps the distribution exactly uniform
        const std::uint64_t threshold = (~bound + 1) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    int next_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Stateless mix of several values into one 64-bit hash (for seeded
// per-event noise decisions).
std::uint64_t mix_hash(std::uint64_t a, std::uint64_t b, const std::string& s);

}  // namespace navagent

template <>
struct std::hash<navagent::Cell> {
    std::size_t operator()(const navagent::Cell& c) const noexcept {
        return std::hash<long long>()((static_cast<long long>(c.row) << 32) ^
                                      static_cast<unsigned>(c.col));
    }
};
