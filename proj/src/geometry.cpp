#include "vibrancy/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace vibrancy {

namespace {
constexpr double kEarthRadiusM = 6371008.8;
constexpr double kDegToRad = 0.017453292519943295;
}  // namespace

void BoundingBox::expand(const LonLat& p) {
    min_lon = std::min(min_lon, p.lon);
    min_lat = std::min(min_lat, p.lat);
    max_lon = std::max(max_lon, p.lon);
    max_lat = std::max(max_lat, p.lat);
}

bool BoundingBox::contains(const LonLat& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
}

BoundingBox ring_bbox(const std::vector<LonLat>& ring) {
    BoundingBox box;
    for (const auto& p : ring) box.expand(p);
    return box;
}

BoundingBox group_bbox(const BlockGroup& bg) {
    BoundingBox box;
    for (const auto& ring : bg.rings) {
        for (const auto& p : ring) box.expand(p);
    }
    return box;
}

bool point_on_ring_boundary(const LonLat& p, const std::vector<LonLat>& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const LonLat& a = ring[i];
        const LonLat& b = ring[i + 1];
        const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
        if (cross != 0.0) continue;
        if (p.lon < std::min(a.lon, b.lon) || p.lon > std::max(a.lon, b.lon)) continue;
        if (p.lat < std::min(a.lat, b.lat) || p.lat > std::max(a.lat, b.lat)) continue;
        return true;
    }
    return false;
}

bool group_contains(const BlockGroup& bg, const LonLat& p) {
    bool inside = false;
    for (const auto& ring : bg.rings) {
        if (point_on_ring_boundary(p, ring)) return true;
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const LonLat& a = ring[i];
            const LonLat& b = ring[i + 1];
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double t = (p.lat - a.lat) / (b.lat - a.lat);
                const double x = a.lon + t * (b.lon - a.lon);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

double ring_area_sqm(const std::vector<LonLat>& ring) {
    if (ring.size() < 4) return 0.0;
    double mean_lat = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) mean_lat += ring[i].lat;
    mean_lat /= static_cast<double>(ring.size() - 1);
    const double kx = kEarthRadiusM * kDegToRad * std::cos(mean_lat * kDegToRad);
    const double ky = kEarthRadiusM * kDegToRad;
    double twice_area = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x0 = ring[i].lon * kx, y0 = ring[i].lat * ky;
        const double x1 = ring[i + 1].lon * kx, y1 = ring[i + 1].lat * ky;
        twice_area += x0 * y1 - x1 * y0;
    }
    return 0.5 * twice_area;
}

SpatialIndex::SpatialIndex(const std::vector<BlockGroup>& groups) : groups_(&groups) {
    bboxes_.reserve(groups.size());
    std::vector<double> extents;
    extents.reserve(groups.size());
    for (const auto& bg : groups) {
        BoundingBox box = group_bbox(bg);
        bboxes_.push_back(box);
        for (const auto& ring : bg.rings) {
            for (const auto& p : ring) extent_.expand(p);
        }
        extents.push_back(std::max(box.width(), box.height()));
    }
    if (groups.empty() || !(extent_.width() >= 0.0)) {
        extent_ = BoundingBox{0, 0, 1, 1};
    }
    if (!extents.empty()) {
        std::nth_element(extents.begin(), extents.begin() + extents.size() / 2, extents.end());
        cell_size_ = extents[extents.size() / 2];
    }
    if (!(cell_size_ > 0.0)) cell_size_ = std::max(extent_.width(), extent_.height());
    if (!(cell_size_ > 0.0)) cell_size_ = 1.0;
    nx_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(std::max(extent_.width(), 1e-12) / cell_size_)), 1, 4096);
    ny_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(std::max(extent_.height(), 1e-12) / cell_size_)), 1, 4096);
    cells_.resize(nx_ * ny_);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const BoundingBox& box = bboxes_[g];
        const std::size_t c0 = cell_of(box.min_lon, box.min_lat);
        const std::size_t c1 = cell_of(box.max_lon, box.max_lat);
        const std::size_t x0 = c0 % nx_, y0 = c0 / nx_;
        const std::size_t x1 = c1 % nx_, y1 = c1 / nx_;
        for (std::size_t y = y0; y <= y1; ++y) {
            for (std::size_t x = x0; x <= x1; ++x) {
                cells_[y * nx_ + x].push_back(static_cast<std::uint32_t>(g));
            }
        }
    }
}

std::size_t SpatialIndex::cell_of(double lon, double lat) const {
    const double fx = (lon - extent_.min_lon) / cell_size_;
    const double fy = (lat - extent_.min_lat) / cell_size_;
    const std::size_t x = std::min(nx_ - 1, static_cast<std::size_t>(std::max(0.0, fx)));
    const std::size_t y = std::min(ny_ - 1, static_cast<std::size_t>(std::max(0.0, fy)));
    return y * nx_ + x;
}

std::size_t SpatialIndex::locate(const LonLat& p) const {
    if (!extent_.contains(p)) return npos;
    std::size_t best = npos;
    for (std::uint32_t g : cells_[cell_of(p.lon, p.lat)]) {
        if (!bboxes_[g].contains(p)) continue;
        if (!group_contains((*groups_)[g], p)) continue;
        if (best == npos || (*groups_)[g].id < (*groups_)[best].id) best = g;
    }
    return best;
}

}  // namespace vibrancy
