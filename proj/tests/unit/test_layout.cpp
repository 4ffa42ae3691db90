#include <doctest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reseq/errors.hpp"
#include "reseq/image_io.hpp"
#include "reseq/layout.hpp"

using namespace reseq;

namespace {

struct TreeCase {
    DistanceMatrix m;
    MstTree tree;
};

// Matrix whose MST is exactly `edges`: tree edges get their weight, every
// other pair gets a large value.
TreeCase tree_case(std::size_t n, const std::vector<WeightedEdge>& edges) {
    DistanceMatrix m(fixtures::numbered_ids(n), "t");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) m.set_symmetric(i, j, 100.0f);
    }
    for (const auto& e : edges) m.set_symmetric(e.u, e.v, static_cast<float>(e.weight));
    auto tree = minimum_spanning_tree(build_graph(m));
    return {std::move(m), std::move(tree)};
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

FrameCollection solid_frames(std::size_t n, int w, int h) {
    FrameCollection fc;
    for (std::size_t i = 0; i < n; ++i) {
        const float v = static_cast<float>(10 * (i + 1)) / 255.0f;
        fc.frames.push_back({"f" + std::to_string(i), Raster::filled(w, h, v, 1.0f - v, 0.0f), std::nullopt});
    }
    return fc;
}

}  // namespace

TEST_CASE("two frames embed symmetrically on the x axis") {
    const auto c = tree_case(2, {{0, 1, 3.0}});
    const auto e = embed_mst_2d(c.tree, c.m);
    CHECK(e.degenerate);
    CHECK(std::abs(e.xy[0][0]) == doctest::Approx(1.5));
    CHECK(e.xy[0][0] == doctest::Approx(-e.xy[1][0]));
    CHECK(e.xy[1][0] > 0.0);
    CHECK(e.xy[0][1] == 0.0);
    CHECK(e.xy[1][1] == 0.0);
}

TEST_CASE("three-node path embeds at -1, 0, 1") {
    const auto c = tree_case(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    const auto e = embed_mst_2d(c.tree, c.m);
    CHECK(e.degenerate);
    CHECK(e.xy[0][0] == doctest::Approx(-1.0));
    CHECK(e.xy[1][0] == doctest::Approx(0.0).scale(1.0));
    CHECK(e.xy[2][0] == doctest::Approx(1.0));
    for (const auto& p : e.xy) CHECK(p[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(e.stress == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("stress is zero exactly when the tree metric fits the plane") {
    SUBCASE("colinear path") {
        const auto c = tree_case(5, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 0.5}, {3, 4, 1.5}});
        const auto e = embed_mst_2d(c.tree, c.m);
        CHECK(e.stress < 1e-9);
        const auto geo = tree_geodesics(c.tree);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) CHECK(dist(e.xy[i], e.xy[j]) == doctest::Approx(geo[i * 5 + j]).scale(1.0));
        }
    }
    SUBCASE("three-armed star") {
        const auto c = tree_case(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
        const auto e = embed_mst_2d(c.tree, c.m);
        CHECK_FALSE(e.degenerate);
        CHECK(e.stress > 1e-3);
    }
}

TEST_CASE("embedding is centred, canonical and deterministic") {
    const auto m = fixtures::random_matrix(20, 6);
    const auto t = minimum_spanning_tree(build_graph(m));
    const auto a = embed_mst_2d(t, m);
    const auto b = embed_mst_2d(t, m);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < a.xy.size(); ++i) {
        CHECK(a.xy[i] == b.xy[i]);
        sx += a.xy[i][0];
        sy += a.xy[i][1];
    }
    CHECK(std::abs(sx) < 1e-9);
    CHECK(std::abs(sy) < 1e-9);
    for (int axis = 0; axis < 2; ++axis) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < a.xy.size(); ++i) {
            if (std::abs(a.xy[i][axis]) > std::abs(a.xy[arg][axis])) arg = i;
        }
        CHECK(a.xy[arg][axis] > 0.0);
    }
    CHECK(a.ids == m.frame_ids());

    const auto raw = embed_mst_2d(t, m, {.use_matrix_distances = true});
    CHECK(raw.xy != a.xy);

    const auto j = nlohmann::json::parse(embedding_to_json(a));
    CHECK(j.size() == 21);
    CHECK(j["f3"][0].get<double>() == a.xy[3][0]);
    CHECK(j["stress"].get<double>() == a.stress);

    const auto other = fixtures::random_matrix(20, 6, "g");
    CHECK_THROWS_AS(embed_mst_2d(t, other), ContractError);
}

TEST_CASE("linear layout geometry") {
    FrameCollection fc = solid_frames(3, 10, 6);
    fc.frames[1].pixels = Raster::filled(14, 8, 0.5f, 0.5f, 0.5f);
    const std::vector<std::string> order{"f2", "f0", "f1"};
    const auto s = compute_layout(order, fc, LayoutStyle::linear);
    CHECK(s.page_width == 10 + 10 + 14 + 2 * 8);
    CHECK(s.page_height == 8);
    REQUIRE(s.placements.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.placements[i].id == order[i]);
    CHECK(s.placements[0].cx == doctest::Approx(5.0));
    CHECK(s.placements[1].cx == doctest::Approx(23.0));
    CHECK(s.placements[2].cx == doctest::Approx(43.0));
    CHECK(s.placements[0].cy == doctest::Approx(4.0));

    LayoutOptions wide;
    wide.gutter = 3;
    wide.margin = 2;
    const auto w = compute_layout(order, fc, LayoutStyle::linear, wide);
    CHECK(w.page_width == 34 + 2 * 3 + 4);
}

TEST_CASE("single-frame linear composite is the frame") {
    fixtures::TempDir dir;
    Raster r = Raster::filled(7, 5, 0, 0, 0);
    for (std::size_t k = 0; k < r.rgb.size(); ++k) r.rgb[k] = static_cast<float>(k % 256) / 255.0f;
    FrameCollection fc;
    fc.frames.push_back({"only", r, std::nullopt});
    SequenceResult seq;
    seq.order = {"only"};
    render_layout(seq, fc, LayoutStyle::linear, dir / "out.png");
    const Raster back = decode_image_file(dir / "out.png");
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    for (std::size_t k = 0; k < r.rgb.size(); ++k) CHECK(back.rgb[k] == doctest::Approx(r.rgb[k]).epsilon(1e-6));
}

TEST_CASE("linear composite reads back in sequence order") {
    const auto fc = solid_frames(5, 6, 4);
    const std::vector<std::string> order{"f3", "f1", "f4", "f0", "f2"};
    const auto s = compute_layout(order, fc, LayoutStyle::linear);
    const auto img = compose_layout(s, fc);
    for (const auto& p : s.placements) {
        const auto& src = *fc.frames[fc.index_of(p.id)].pixels;
        CHECK(img.at(static_cast<int>(p.cx), static_cast<int>(p.cy), 0) == src.at(0, 0, 0));
    }
    // gutter pixels keep the background
    CHECK(img.at(7, 2, 0) == 1.0f);
}

TEST_CASE("radial layout angles") {
    const auto fc = solid_frames(4, 10, 10);
    const std::vector<std::string> order{"f0", "f1", "f2", "f3"};
    const auto s = compute_layout(order, fc, LayoutStyle::radial);
    CHECK(s.radius == doctest::Approx(4.0 * 10.0 / (2.0 * std::numbers::pi)));
    const double c = s.page_width / 2.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& p = s.placements[i];
        const double deg = p.angle * 180.0 / std::numbers::pi;
        CHECK(deg == doctest::Approx(90.0 * i));
        double at = std::atan2(c - p.cy, p.cx - c) * 180.0 / std::numbers::pi;
        if (at < -1e-9) at += 360.0;
        CHECK(at == doctest::Approx(90.0 * i).scale(1.0));
    }
}

TEST_CASE("radial composite reads back counterclockwise") {
    const auto fc = solid_frames(6, 10, 10);
    const std::vector<std::string> order{"f5", "f2", "f0", "f4", "f1", "f3"};
    const auto s = compute_layout(order, fc, LayoutStyle::radial);
    const auto img = compose_layout(s, fc);
    CHECK(img.width == s.page_width);
    double prev = -1.0;
    for (const auto& p : s.placements) {
        CHECK(p.angle > prev);
        prev = p.angle;
        const auto& src = *fc.frames[fc.index_of(p.id)].pixels;
        CHECK(img.at(static_cast<int>(std::lround(p.cx)), static_cast<int>(std::lround(p.cy)), 0) == src.at(0, 0, 0));
    }
}

TEST_CASE("layout needs pixels") {
    FrameCollection fc = solid_frames(2, 4, 4);
    fc.frames.push_back({"ghost", std::nullopt, std::nullopt});
    const std::vector<std::string> order{"f0", "ghost"};
    try {
        compute_layout(order, fc, LayoutStyle::linear);
        FAIL("expected a contract error");
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
    CHECK(parse_layout_style("radial") == LayoutStyle::radial);
    CHECK_THROWS_AS(parse_layout_style("spiral"), ContractError);
}
