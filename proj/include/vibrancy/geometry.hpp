#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "vibrancy/types.hpp"

namespace vibrancy {

struct BoundingBox {
    double min_lon = std::numeric_limits<double>::infinity();
    double min_lat = std::numeric_limits<double>::infinity();
    double max_lon = -std::numeric_limits<double>::infinity();
    double max_lat = -std::numeric_limits<double>::infinity();

    void expand(const LonLat& p);
    bool contains(const LonLat& p) const;
    double width() const { return max_lon - min_lon; }
    double height() const { return max_lat - min_lat; }
};

BoundingBox ring_bbox(const std::vector<LonLat>& ring);
BoundingBox group_bbox(const BlockGroup& bg);

// True when p lies exactly on a ring edge.
bool point_on_ring_boundary(const LonLat& p, const std::vector<LonLat>& ring);

// Even-odd ray-casting containment over all rings of the group; boundary
// points count as contained. Geometry is evaluated on raw lon/lat, which is
// adequate at block-group scale.
bool group_contains(const BlockGroup& bg, const LonLat& p);

// Signed shoelace area of one ring after equirectangular projection to meters
// about the ring's mean latitude. Positive for counterclockwise rings.
double ring_area_sqm(const std::vector<LonLat>& ring);

// Uniform grid over the block groups' joint bounding box. Cell size tracks the
// median polygon bbox extent; each cell stores the groups whose bbox overlaps
// it. Lookups test only those candidates, so results match the naive
// all-pairs scan exactly.
class SpatialIndex {
public:
    explicit SpatialIndex(const std::vector<BlockGroup>& groups);

    // Index into the construction vector of the containing group with the
    // lexicographically smallest id, or npos when no group contains p.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t locate(const LonLat& p) const;

private:
    const std::vector<BlockGroup>* groups_;
    std::vector<BoundingBox> bboxes_;
    BoundingBox extent_;
    double cell_size_ = 1.0;
    std::size_t nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::uint32_t>> cells_;

    std::size_t cell_of(double lon, double lat) const;
};

}  // namespace vibrancy
