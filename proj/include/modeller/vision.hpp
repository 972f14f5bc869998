#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "modeller/spn.hpp"

namespace modeller {

struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<float> px;  // row-major, values in [0,1]

    float at(int r, int c) const { return px[static_cast<std::size_t>(r * cols + c)]; }
};

struct BinaryImage {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> px;

    bool at(int r, int c) const { return px[static_cast<std::size_t>(r * cols + c)] != 0; }
    // Out-of-bounds reads as background.
    bool at_clamped(int r, int c) const {
        return r >= 0 && c >= 0 && r < rows && c < cols && at(r, c);
    }
    std::size_t count() const;
};

struct ImageSet {
    std::vector<Image> images;
    std::vector<int> labels;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ImageSet load_idx(const std::string& images_path, const std::string& labels_path);

BinaryImage binarize(const Image& img, double threshold = 0.5);

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

struct ContourPolygon {
    std::vector<Point> pts;
    bool hole = false;
};

// Border following, then Ramer-Douglas-Peucker with eps = eps_frac * arc length.
std::vector<ContourPolygon> approximate_contours(const BinaryImage& bin, double eps_frac = 0.01);
// Closed-curve Ramer-Douglas-Peucker; every dropped point lies within eps.
std::vector<Point> simplify_closed(const std::vector<Point>& loop, double eps);
// Raw border-following contours, before simplification.
std::vector<ContourPolygon> raw_contours(const BinaryImage& bin);

struct FeatureNode {
    std::string type;  // e.g. "cx_ypos_yneg"
    double x = 0.0;
    double y = 0.0;
    std::size_t contour = 0;
    bool operator==(const FeatureNode&) const = default;
};

// Gradient points toward the foreground: outward edges of a shape have the
// gradient on their inner side, hole edges on their outer side.
std::vector<FeatureNode> gradient_change_nodes(const ContourPolygon& poly, std::size_t contour = 0);

inline const std::vector<std::string>& spn_keys() {
    static const std::vector<std::string> k{"contour_h", "contour_v", "inner_h", "inner_v",
                                            "outer_h",   "outer_v",   "all_h",   "all_v"};
    return k;
}

// Region of the open segment between two points: 1 inside, 0 outside, -1 mixed.
int segment_region(const BinaryImage& bin, Point a, Point b);

// Nodes must be listed in traversal order per contour.
Spn build_observation_spn(const std::vector<FeatureNode>& nodes, const BinaryImage& bin);

// Full pipeline for one image.
Spn image_to_spn(const Image& img);

}  // namespace modeller
