#include "navagent/geometry.hpp"

namespace navagent {

namespace {
int sgn(int v) { return (v > 0) - (v < 0); }
}  // namespace

std::vector<Cell> supercover_line(const Cell& a, const Cell& b) {
    // Dedu's supercover variant of Bresenham. Axes are symmetric, so we
    // treat (row, col) exactly like (y, x).
    std::vector<Cell> out;
    int y = a.row, x = a.col;
    int dy = b.row - a.row, dx = b.col - a.col;
    const int ystep = sgn(dy), xstep = sgn(dx);
    dy = std::abs(dy);
    dx = std::abs(dx);
    out.push_back(a);

    const int ddy = 2 * dy, ddx = 2 * dx;
    if (ddx >= ddy) {
        int errorprev = dx, error = dx;
        for (int i = 0; i < dx; ++i) {
            x += xstep;
            error += ddy;
            if (error > ddx) {
                y += ystep;
                error -= ddx;
                if (error + errorprev < ddx) {
                    out.push_back(Cell{y - ystep, x});
                } else if (error + errorprev > ddx) {
                    out.push_back(Cell{y, x - xstep});
                } else {
                    // exact corner crossing: both flanking cells
                    out.push_back(Cell{y - ystep, x});
                    out.push_back(Cell{y, x - xstep});
                }
            }
            out.push_back(Cell{y, x});
            errorprev = error;
        }
    } else {
        int errorprev = dy, error = dy;
        for (int i = 0; i < dy; ++i) {
            y += ystep;
            error += ddx;
            if (error > ddy) {
                x += xstep;
                error -= ddy;
                if (error + errorprev < ddy) {
                    out.push_back(Cell{y, x - xstep});
                } else if (error + errorprev > ddy) {
                    out.push_back(Cell{y - ystep, x});
                } else {
                    out.push_back(Cell{y, x - xstep});
                    out.push_back(Cell{y - ystep, x});
                }
            }
            out.push_back(Cell{y, x});
            errorprev = error;
        }
    }
    return out;
}

std::uint64_t mix_hash(std::uint64_t a, std::uint64_t b, const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    feed(a);
    feed(b);
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace navagent
