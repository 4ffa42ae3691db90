#pragma once

// Builders for synthetic inputs shared by the unit, integration and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reseq/frameset.hpp"
#include "reseq/image_io.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "reseq") {
        std::random_device rd;
        path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::vector<std::string> numbered_ids(std::size_t n, const std::string& prefix = "f") {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
    return ids;
}

// Weights on a 2^-12 grid in [1/4096, 1]: sums of up to a few thousand of them
// are exact in double, so different summation orders agree bit for bit.
inline reseq::DistanceMatrix random_matrix(std::size_t n, std::uint64_t seed, const std::string& prefix = "f") {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> q(1, 4096);
    reseq::DistanceMatrix m(numbered_ids(n, prefix), "test");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) m.set_symmetric(i, j, static_cast<float>(q(rng)) / 4096.0f);
    }
    return m;
}

// Euclidean distances between points.
inline reseq::DistanceMatrix matrix_from_points(const std::vector<std::vector<double>>& pts,
                                                const std::string& prefix = "f") {
    reseq::DistanceMatrix m(numbered_ids(pts.size(), prefix), "l2-points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < pts[i].size(); ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
            m.set_symmetric(i, j, static_cast<float>(std::sqrt(s)));
        }
    }
    return m;
}

// n-1 points uniform in the unit square plus one far-off point at index `planted`.
inline reseq::DistanceMatrix planted_outlier_matrix(std::size_t n, std::size_t planted, std::uint64_t seed,
                                                   double far = 40.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i + 1 < n; ++i) pts.push_back({u(rng), u(rng)});
    pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(planted), std::vector<double>{far, far});
    return matrix_from_points(pts);
}

inline reseq::FeatureArchive random_archive(std::size_t frames, std::vector<reseq::LayerSpec> layers,
                                            std::uint64_t seed, bool normalize) {
    reseq::FeatureArchive a(numbered_ids(frames), std::move(layers), false);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (float& v : a.data()) v = g(rng);
    if (normalize) a = reseq::channel_unit_normalize(a);
    return a;
}

// A soft blob whose position and the background brightness both advance with t in [0,1].
inline reseq::Raster blob_frame(int w, int h, double t, std::uint64_t style) {
    std::mt19937_64 rng(style);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x0 = 0.15 * w + u(rng) * 0.1 * w;
    const double y0 = 0.2 * h + u(rng) * 0.6 * h;
    const double x1 = 0.85 * w - u(rng) * 0.1 * w;
    const double y1 = 0.2 * h + u(rng) * 0.6 * h;
    const double hue[3] = {u(rng), u(rng), u(rng)};
    const double cx = x0 + t * (x1 - x0);
    const double cy = y0 + t * (y1 - y0);
    const double sigma = 0.12 * std::min(w, h);
    reseq::Raster r = reseq::Raster::filled(w, h, 0.0f, 0.0f, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double blob = std::exp(-d2 / (2.0 * sigma * sigma));
            for (int c = 0; c < 3; ++c) {
                const double v = 0.1 + 0.3 * t * (x + 1.0) / w + 0.6 * blob * hue[c];
                r.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return r;
}

// Writes frames as 8-bit PNGs named <prefix><index>.png, returning the paths.
inline std::vector<fs::path> write_frames(const fs::path& dir, const std::vector<reseq::Raster>& frames,
                                          const std::string& prefix = "f") {
    fs::create_directories(dir);
    std::vector<fs::path> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s%02zu.png", prefix.c_str(), i);
        out.push_back(dir / name);
        reseq::write_png(frames[i], out.back());
    }
    return out;
}

// Solid-grey frames with brightness (i+1)/(n+1): a colinear chain under l2-image.
inline std::vector<reseq::Raster> grey_ramp(std::size_t n, int w = 4, int h = 4) {
    std::vector<reseq::Raster> out;
    for (std::size_t i = 0; i < n; ++i) {
        const float v = static_cast<float>(i + 1) / static_cast<float>(n + 1);
        out.push_back(reseq::Raster::filled(w, h, v, v, v));
    }
    return out;
}

}  // namespace fixtures
