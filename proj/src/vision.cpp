#include "modeller/vision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

namespace modeller {

std::size_t BinaryImage::count() const {
    std::size_t n = 0;
    for (auto v : px) n += v != 0;
    return n;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path + ": truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    return in;
}

}  // namespace

ImageSet load_idx(const std::string& images_path, const std::string& labels_path) {
    auto im = open_binary(images_path);
    if (read_be32(im, images_path) != 0x00000803) throw FormatError(images_path + ": bad magic");
    const auto n = read_be32(im, images_path);
    const auto rows = read_be32(im, images_path);
    const auto cols = read_be32(im, images_path);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) throw FormatError(images_path + ": bad dimensions");

    auto lb = open_binary(labels_path);
    if (read_be32(lb, labels_path) != 0x00000801) throw FormatError(labels_path + ": bad magic");
    if (read_be32(lb, labels_path) != n) throw FormatError(labels_path + ": count differs from images");

    ImageSet out;
    const std::size_t sz = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(sz);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!im.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(sz)))
            throw FormatError(images_path + ": truncated data");
        Image img{static_cast<int>(rows), static_cast<int>(cols), std::vector<float>(sz)};
        for (std::size_t j = 0; j < sz; ++j) img.px[j] = static_cast<float>(buf[j]) / 255.0f;
        out.images.push_back(std::move(img));
        char l;
        if (!lb.get(l)) throw FormatError(labels_path + ": truncated data");
        const int label = static_cast<unsigned char>(l);
        if (label > 9) throw FormatError(labels_path + ": label out of range");
        out.labels.push_back(label);
    }
    return out;
}

BinaryImage binarize(const Image& img, double threshold) {
    BinaryImage b{img.rows, img.cols, std::vector<std::uint8_t>(img.px.size())};
    for (std::size_t i = 0; i < img.px.size(); ++i) b.px[i] = img.px[i] >= threshold ? 1 : 0;
    return b;
}

namespace {

std::vector<std::vector<cv::Point>> find(const BinaryImage& bin, std::vector<cv::Vec4i>& hier) {
    // Zero border so shapes touching the frame still close.
    cv::Mat m(bin.rows + 2, bin.cols + 2, CV_8UC1, cv::Scalar(0));
    for (int r = 0; r < bin.rows; ++r)
        for (int c = 0; c < bin.cols; ++c) m.at<std::uint8_t>(r + 1, c + 1) = bin.at(r, c) ? 255 : 0;
    std::vector<std::vector<cv::Point>> cs;
    cv::findContours(m, cs, hier, cv::RETR_CCOMP, cv::CHAIN_APPROX_NONE);
    for (auto& c : cs)
        for (auto& p : c) p -= cv::Point(1, 1);
    return cs;
}

ContourPolygon to_polygon(const std::vector<cv::Point>& c, bool hole) {
    ContourPolygon p;
    p.hole = hole;
    for (const auto& q : c) p.pts.push_back({static_cast<double>(q.x), static_cast<double>(q.y)});
    return p;
}

}  // namespace

std::vector<ContourPolygon> raw_contours(const BinaryImage& bin) {
    std::vector<cv::Vec4i> hier;
    const auto cs = find(bin, hier);
    std::vector<ContourPolygon> out;
    for (std::size_t i = 0; i < cs.size(); ++i) out.push_back(to_polygon(cs[i], hier[i][3] >= 0));
    return out;
}

namespace {

double point_seg(const Point& p, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double l2 = dx * dx + dy * dy;
    if (l2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / l2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Ramer-Douglas-Peucker on pts[lo..hi], marking kept points.
void rdp(const std::vector<Point>& pts, std::size_t lo, std::size_t hi, double eps, std::vector<bool>& keep) {
    if (hi <= lo + 1) return;
    double dmax = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = point_seg(pts[i], pts[lo], pts[hi]);
        if (d > dmax) {
            dmax = d;
            at = i;
        }
    }
    if (dmax <= eps) return;
    keep[at] = true;
    rdp(pts, lo, at, eps, keep);
    rdp(pts, at, hi, eps, keep);
}

}  // namespace

std::vector<Point> simplify_closed(const std::vector<Point>& loop, double eps) {
    const std::size_t n = loop.size();
    if (n < 3) return loop;
    // Split at the first point and the point farthest from it.
    std::size_t far = 0;
    double dmax = -1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = std::hypot(loop[i].x - loop[0].x, loop[i].y - loop[0].y);
        if (d > dmax) {
            dmax = d;
            far = i;
        }
    }
    std::vector<Point> pts(loop);
    pts.push_back(loop[0]);
    std::vector<bool> keep(pts.size(), false);
    keep[0] = keep[far] = true;
    rdp(pts, 0, far, eps, keep);
    rdp(pts, far, n, eps, keep);
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(loop[i]);
    return out;
}

std::vector<ContourPolygon> approximate_contours(const BinaryImage& bin, double eps_frac) {
    std::vector<ContourPolygon> out;
    for (auto& raw : raw_contours(bin)) {
        double len = 0.0;
        for (std::size_t i = 0; i < raw.pts.size(); ++i) {
            const auto& a = raw.pts[i];
            const auto& b = raw.pts[(i + 1) % raw.pts.size()];
            len += std::hypot(b.x - a.x, b.y - a.y);
        }
        raw.pts = simplify_closed(raw.pts, eps_frac * len);
        if (raw.pts.size() < 3) continue;
        out.push_back(std::move(raw));
    }
    return out;
}

namespace {

int sgn(double v) { return (v > 0) - (v < 0); }

std::string sign_name(char axis, int s) { return std::string(1, axis) + (s > 0 ? "pos" : "neg"); }

}  // namespace

std::vector<FeatureNode> gradient_change_nodes(const ContourPolygon& poly, std::size_t contour) {
    std::vector<FeatureNode> out;
    // Vertices with zero-length edges dropped.
    std::vector<Point> v;
    for (const auto& p : poly.pts)
        if (v.empty() || !(p == v.back())) v.push_back(p);
    while (v.size() > 1 && v.front() == v.back()) v.pop_back();
    const std::size_t n = v.size();
    if (n < 3) return out;

    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % n];
        area2 += a.x * b.y - b.x * a.y;
    }
    // Traverse with the foreground on the (y-down) right-hand normal so both
    // orientations of a loop give the same nodes.
    if (sgn(area2) == 0) return out;
    if (sgn(area2) * (poly.hole ? -1 : 1) < 0) std::reverse(v.begin(), v.end());
    const int s = 1;

    struct E {
        double dx, dy;
        int gx, gy;
    };
    std::vector<E> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = v[(i + 1) % n].x - v[i].x;
        const double dy = v[(i + 1) % n].y - v[i].y;
        e[i] = {dx, dy, sgn(s * -dy), sgn(s * dx)};
    }

    // Vertex i joins edge i-1 and edge i. A zero gradient component keeps the
    // last nonzero sign along the traversal.
    std::vector<std::pair<std::size_t, FeatureNode>> found;
    for (int axis = 0; axis < 2; ++axis) {
        auto g = [&](std::size_t i) { return axis == 0 ? e[i].gx : e[i].gy; };
        std::size_t start = n;
        for (std::size_t i = 0; i < n; ++i)
            if (g(i) != 0) {
                start = i;
                break;
            }
        if (start == n) continue;
        int carried = g(start);
        for (std::size_t k = 1; k <= n; ++k) {
            const std::size_t i = (start + k) % n;
            const int cur = g(i);
            if (cur == 0 || cur == carried) continue;
            const auto& a = e[(i + n - 1) % n];
            const auto& b = e[i];
            const bool convex = (a.dx * b.dy - a.dy * b.dx) * s > 0;
            const char ax = axis == 0 ? 'x' : 'y';
            FeatureNode node{std::string(convex ? "cx" : "cc") + "_" + sign_name(ax, carried) + "_" +
                                 sign_name(ax, cur),
                             v[i].x, v[i].y, contour};
            // Traversal order; x before y at a shared vertex.
            found.emplace_back(i * 2 + static_cast<std::size_t>(axis), node);
            carried = cur;
        }
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, node] : found) out.push_back(node);
    return out;
}

int segment_region(const BinaryImage& bin, Point a, Point b) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.25)));
    const int ar = static_cast<int>(std::lround(a.y)), ac = static_cast<int>(std::lround(a.x));
    const int br = static_cast<int>(std::lround(b.y)), bc = static_cast<int>(std::lround(b.x));
    int fg = 0, total = 0;
    for (int i = 1; i < steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const int r = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
        const int c = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
        // Endpoint pixels lie on the border and say nothing about the region.
        if ((r == ar && c == ac) || (r == br && c == bc)) continue;
        ++total;
        fg += bin.at_clamped(r, c);
    }
    if (total == 0) return 1;
    if (fg * 10 >= total * 9) return 1;
    if ((total - fg) * 10 >= total * 9) return 0;
    return -1;
}

Spn build_observation_spn(const std::vector<FeatureNode>& nodes, const BinaryImage& bin) {
    Spn p;
    for (const auto& k : spn_keys()) p.net(k);
    std::vector<NodeId> ids;
    for (const auto& n : nodes) ids.push_back(p.add_node(n.type, n.x, n.y));

    auto link = [&](const std::string& base, std::size_t i, std::size_t j) {
        const auto& a = nodes[i];
        const auto& b = nodes[j];
        if (a.x < b.x) p.net(base + "_h").edges[{ids[i], ids[j]}] = {};
        if (b.x < a.x) p.net(base + "_h").edges[{ids[j], ids[i]}] = {};
        if (a.y < b.y) p.net(base + "_v").edges[{ids[i], ids[j]}] = {};
        if (b.y < a.y) p.net(base + "_v").edges[{ids[j], ids[i]}] = {};
    };

    // Contour neighbours, cyclic per contour.
    std::map<std::size_t, std::vector<std::size_t>> per;
    for (std::size_t i = 0; i < nodes.size(); ++i) per[nodes[i].contour].push_back(i);
    for (const auto& [_, idx] : per) {
        if (idx.size() < 2) continue;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t j = (k + 1) % idx.size();
            if (idx.size() == 2 && k == 1) break;
            link("contour", idx[k], idx[j]);
        }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            link("all", i, j);
            const int r = segment_region(bin, {nodes[i].x, nodes[i].y}, {nodes[j].x, nodes[j].y});
            if (r == 1) link("inner", i, j);
            if (r == 0) link("outer", i, j);
        }
    return p;
}

Spn image_to_spn(const Image& img) {
    const auto bin = binarize(img);
    std::vector<FeatureNode> nodes;
    const auto polys = approximate_contours(bin);
    for (std::size_t c = 0; c < polys.size(); ++c)
        for (auto& n : gradient_change_nodes(polys[c], c)) nodes.push_back(n);
    return build_observation_spn(nodes, bin);
}

}  // namespace modeller
