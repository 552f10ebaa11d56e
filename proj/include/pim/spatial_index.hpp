#pragma once

#include "pim/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace pim {

/// Uniform bucket grid over a fixed point set. Query results are sorted by
/// index (radius queries) or by (distance, index) (nearest-neighbor queries),
/// so every caller sees a deterministic order.
class GridIndex {
public:
    GridIndex(const std::vector<Point>& points, double cell_size) : pts_(&points) {
        require(cell_size > 0.0 && std::isfinite(cell_size), "grid cell size must be positive");
        lo_ = Point::Constant(std::numeric_limits<double>::infinity());
        Point hi = -lo_;
        for (const auto& p : points) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        if (points.empty()) lo_ = hi = Point::Zero();
        // Keep the cell count linear in the point count.
        const double max_cells = 8.0 * static_cast<double>(points.size()) + 64.0;
        h_ = cell_size;
        for (;;) {
            double cells = 1.0;
            for (int c = 0; c < 3; ++c) cells *= std::floor((hi[c] - lo_[c]) / h_) + 1.0;
            if (cells <= max_cells) break;
            h_ *= 1.5;
        }
        for (int c = 0; c < 3; ++c) dims_[c] = static_cast<long>(std::floor((hi[c] - lo_[c]) / h_)) + 1;
        const long ncell = dims_[0] * dims_[1] * dims_[2];
        start_.assign(static_cast<std::size_t>(ncell) + 1, 0);
        std::vector<long> cell_of(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of[i] = flat(coord(points[i]));
            ++start_[static_cast<std::size_t>(cell_of[i]) + 1];
        }
        for (long c = 0; c < ncell; ++c) start_[c + 1] += start_[c];
        items_.resize(points.size());
        std::vector<Index> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i)
            items_[fill[static_cast<std::size_t>(cell_of[i])]++] = static_cast<Index>(i);
    }

    /// Indices j with ‖points[j] − q‖ ≤ radius, ascending.
    std::vector<Index> radius_query(const Point& q, double radius) const {
        std::vector<Index> out;
        const double r2 = radius * radius;
        const long reach = static_cast<long>(std::ceil(radius / h_));
        visit_box(q, reach, [&](Index j) {
            if (((*pts_)[j] - q).squaredNorm() <= r2) out.push_back(j);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// The k nearest points to q ordered by (distance, index), skipping `exclude`.
    std::vector<std::pair<double, Index>> knn(const Point& q, std::size_t k, Index exclude = -1) const {
        std::vector<std::pair<double, Index>> best;
        const std::size_t available = pts_->size() - (exclude >= 0 ? 1 : 0);
        k = std::min(k, available);
        if (k == 0) return best;
        for (long reach = 1;; reach *= 2) {
            best.clear();
            visit_box(q, reach, [&](Index j) {
                if (j != exclude) best.emplace_back(((*pts_)[j] - q).squaredNorm(), j);
            });
            // Everything within reach·h of q has been seen, so the first k are exact
            // once the k-th distance is inside that ball.
            const bool covers_all = reach >= std::max({dims_[0], dims_[1], dims_[2]});
            if (best.size() >= k) {
                std::nth_element(best.begin(), best.begin() + static_cast<long>(k - 1), best.end());
                const double kth = best[k - 1].first;
                const double safe = static_cast<double>(reach) * h_;
                if (covers_all || kth <= safe * safe) break;
            } else if (covers_all) {
                break;
            }
        }
        std::sort(best.begin(), best.end());
        best.resize(k);
        for (auto& [d, j] : best) d = std::sqrt(d);
        return best;
    }

private:
    std::array<long, 3> coord(const Point& p) const {
        std::array<long, 3> c{};
        for (int a = 0; a < 3; ++a)
            c[a] = std::clamp(static_cast<long>(std::floor((p[a] - lo_[a]) / h_)), 0L, dims_[a] - 1);
        return c;
    }

    long flat(const std::array<long, 3>& c) const { return (c[2] * dims_[1] + c[1]) * dims_[0] + c[0]; }

    template <class F>
    void visit_box(const Point& q, long reach, F&& f) const {
        const auto c = coord(q);
        std::array<long, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::max(0L, c[a] - reach);
            hi[a] = std::min(dims_[a] - 1, c[a] + reach);
        }
        for (long z = lo[2]; z <= hi[2]; ++z)
            for (long y = lo[1]; y <= hi[1]; ++y)
                for (long x = lo[0]; x <= hi[0]; ++x) {
                    const long cell = flat({x, y, z});
                    for (Index s = start_[cell]; s < start_[cell + 1]; ++s) f(items_[s]);
                }
    }

    const std::vector<Point>* pts_;
    Point lo_;
    double h_ = 1.0;
    std::array<long, 3> dims_{1, 1, 1};
    std::vector<Index> start_;
    std::vector<Index> items_;
};

} // namespace pim
