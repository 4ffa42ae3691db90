#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "reseq/errors.hpp"
#include "reseq/kernels.hpp"
#include "reseq/metrics.hpp"

using namespace reseq;

namespace {

// Independent reading of the weighted layer distance: explicit loops over
// layers, rows, columns and channels, indexing the archive's CHW buffer by hand.
double lpips_oracle(const FeatureArchive& a, std::size_t i, std::size_t j, const CalibrationWeights& w) {
    double total = 0.0;
    const auto fi = a.frame_values(i);
    const auto fj = a.frame_values(j);
    std::size_t base = 0;
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
        const auto& s = a.layers()[l];
        double layer = 0.0;
        for (std::uint32_t y = 0; y < s.h; ++y) {
            for (std::uint32_t x = 0; x < s.w; ++x) {
                for (std::uint32_t c = 0; c < s.c; ++c) {
                    const std::size_t at = base + (static_cast<std::size_t>(c) * s.h + y) * s.w + x;
                    const double d = w.per_layer[l][c] * (static_cast<double>(fi[at]) - fj[at]);
                    layer += d * d;
                }
            }
        }
        total += layer / (static_cast<double>(s.h) * s.w);
        base += s.size();
    }
    return total;
}

FeatureArchive one_by_one(std::vector<float> yi, std::vector<float> yj) {
    FeatureArchive a({"i", "j"}, {{"l", static_cast<std::uint32_t>(yi.size()), 1, 1}}, true);
    std::copy(yi.begin(), yi.end(), a.data().begin());
    std::copy(yj.begin(), yj.end(), a.data().begin() + static_cast<std::ptrdiff_t>(yi.size()));
    return a;
}

FrameRecord frame(const std::string& id, Raster r) { return {id, std::move(r), std::nullopt}; }

}  // namespace

TEST_CASE("metric names") {
    for (Metric m : {Metric::lpips, Metric::cosine, Metric::l2_image, Metric::l2_feature}) {
        CHECK(parse_metric(metric_name(m)) == m);
    }
    CHECK_THROWS_AS(parse_metric("l1"), ContractError);
}

TEST_CASE("lpips hand examples") {
    const auto a = one_by_one({1, 0}, {0, 1});
    const auto ones = CalibrationWeights::uniform(a);
    CHECK(lpips_distance(a, 0, 1, ones) == 2.0);
    CHECK(lpips_distance(a, 0, 0, ones) == 0.0);
    CHECK(lpips_distance(a, 0, 1, CalibrationWeights::uniform(a, 0.0)) == 0.0);
    auto w = ones;
    w.per_layer[0] = {2.0, 0.0};
    CHECK(lpips_distance(a, 0, 1, w) == 4.0);
}

TEST_CASE("lpips matches the triple-loop oracle on random tensors") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_int_distribution<int> nl(1, 3);
    std::uniform_real_distribution<double> wv(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LayerSpec> layers;
        const int L = nl(rng);
        for (int l = 0; l < L; ++l) {
            layers.push_back({"l" + std::to_string(l), static_cast<std::uint32_t>(dim(rng)),
                              static_cast<std::uint32_t>(dim(rng)), static_cast<std::uint32_t>(dim(rng))});
        }
        const auto a = fixtures::random_archive(3, layers, rng(), true);
        auto w = CalibrationWeights::uniform(a);
        for (auto& layer : w.per_layer) {
            for (double& x : layer) x = wv(rng);
        }
        for (const auto* table : kernels::available_tables()) {
            kernels::set_active(table);
            const double got = lpips_distance(a, 0, 2, w);
            const double want = lpips_oracle(a, 0, 2, w);
            CHECK(got == doctest::Approx(want).epsilon(1e-5));
        }
        kernels::set_active(nullptr);

        // Unit weights give the plain sum of spatially averaged squared differences.
        double plain = 0.0;
        for (std::size_t l = 0; l < a.layers().size(); ++l) {
            const auto x = a.tensor(1, l);
            const auto y = a.tensor(2, l);
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (static_cast<double>(x[k]) - y[k]) * (x[k] - y[k]);
            plain += s / static_cast<double>(a.layers()[l].spatial());
        }
        CHECK(lpips_distance(a, 1, 2, CalibrationWeights::uniform(a)) == doctest::Approx(plain).epsilon(1e-5));
    }
}

TEST_CASE("lpips rejects unnormalized archives and mismatched weights") {
    auto raw = fixtures::random_archive(2, {{"l", 2, 1, 1}}, 1, false);
    CHECK_THROWS_AS(lpips_distance(raw, 0, 1, CalibrationWeights::uniform(raw)), ContractError);
    const auto a = fixtures::random_archive(2, {{"l", 2, 1, 1}}, 1, true);
    CalibrationWeights bad = CalibrationWeights::uniform(a);
    bad.per_layer[0].push_back(1.0);
    CHECK_THROWS_AS(lpips_distance(a, 0, 1, bad), ContractError);
    bad = CalibrationWeights::uniform(a);
    bad.per_layer[0][0] = -1.0;
    CHECK_THROWS_AS(lpips_distance(a, 0, 1, bad), ContractError);
}

TEST_CASE("cosine hand examples") {
    CHECK(cosine_distance(one_by_one({1, 0}, {0, 1}), 0, 1) == 1.0);
    CHECK(cosine_distance(one_by_one({1, 0}, {-1, 0}), 0, 1) == 2.0);
    const auto a = fixtures::random_archive(2, {{"a", 3, 2, 2}, {"b", 4, 1, 3}}, 8, true);
    CHECK(cosine_distance(a, 1, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("l2 image and feature examples") {
    const auto zeros = frame("z", Raster::filled(5, 3, 0, 0, 0));
    const auto ones = frame("o", Raster::filled(5, 3, 1, 1, 1));
    CHECK(l2_image_distance(zeros, ones) == doctest::Approx(std::sqrt(45.0)));
    CHECK(l2_image_distance(ones, ones) == 0.0);
    CHECK(l2_image_distance(frame("a", Raster::filled(1, 1, 0, 0, 0)), frame("b", Raster::filled(1, 1, 1, 0, 0))) == 1.0);
    CHECK_THROWS_AS(l2_image_distance(zeros, frame("s", Raster::filled(2, 2, 0, 0, 0))), ContractError);

    const std::vector<float> a{0, 0};
    const std::vector<float> b{3, 4};
    CHECK(l2_feature_distance(a, b) == 5.0);
    const std::vector<float> c{-1};
    const std::vector<float> d{2};
    CHECK(l2_feature_distance(c, d) == 3.0);
    CHECK(l2_feature_distance(b, b) == 0.0);
}

TEST_CASE("distance matrices") {
    SUBCASE("single frame") {
        FrameCollection one;
        one.frames.push_back(frame("only", Raster::filled(2, 2, 0.3f, 0.3f, 0.3f)));
        const auto m = compute_distance_matrix(one, Metric::l2_image);
        REQUIRE(m.size() == 1);
        CHECK(m(0, 0) == 0.0f);
    }
    SUBCASE("identical frames give zeros for every metric") {
        FeatureArchive a({"a", "b", "c"}, {{"l", 2, 2, 1}}, false);
        for (std::size_t f = 0; f < 3; ++f) {
            auto t = a.tensor(f, 0);
            t[0] = 1.0f;
            t[1] = 2.0f;
            t[2] = -1.0f;
            t[3] = 0.5f;
        }
        const auto n = channel_unit_normalize(a);
        for (Metric m : {Metric::lpips, Metric::cosine, Metric::l2_feature}) {
            const auto d = compute_distance_matrix(n, m);
            for (float v : d.values()) CHECK(v == doctest::Approx(0.0f).scale(1.0).epsilon(1e-6));
        }
        FrameCollection same;
        for (const char* id : {"a", "b", "c"}) same.frames.push_back(frame(id, Raster::filled(2, 2, 0.4f, 0.1f, 0.9f)));
        const auto d = compute_distance_matrix(same, Metric::l2_image);
        for (float v : d.values()) CHECK(v == 0.0f);
    }
    SUBCASE("entries equal the single-pair computation") {
        const auto a = fixtures::random_archive(3, {{"x", 3, 2, 2}, {"y", 2, 3, 1}}, 5, true);
        const auto w = CalibrationWeights::uniform(a, 0.7);
        const auto m = compute_distance_matrix(a, Metric::lpips, &w);
        CHECK(m(0, 2) == static_cast<float>(lpips_distance(a, 0, 2, w)));
        CHECK(m(2, 0) == m(0, 2));
        CHECK(m.metric_tag() == "lpips");
        const auto cm = compute_distance_matrix(a, Metric::cosine);
        CHECK(cm(1, 2) == static_cast<float>(cosine_distance(a, 1, 2)));
        const auto fm = compute_distance_matrix(a, Metric::l2_feature);
        CHECK(fm(0, 1) == static_cast<float>(l2_feature_distance(a.frame_values(0), a.frame_values(1))));
    }
    SUBCASE("wrong source for the metric") {
        const auto a = fixtures::random_archive(2, {{"x", 2, 1, 1}}, 5, true);
        CHECK_THROWS_AS(compute_distance_matrix(a, Metric::l2_image), ContractError);
        FrameCollection frames;
        frames.frames.push_back(frame("a", Raster::filled(1, 1, 0, 0, 0)));
        CHECK_THROWS_AS(compute_distance_matrix(frames, Metric::lpips), ContractError);
    }
}

TEST_CASE("matrices do not depend on the thread count") {
    const auto a = fixtures::random_archive(17, {{"x", 8, 3, 3}, {"y", 4, 2, 2}}, 12, true);
    for (Metric metric : {Metric::lpips, Metric::cosine, Metric::l2_feature}) {
        const auto one = compute_distance_matrix(a, metric, nullptr, {1});
        for (unsigned t : {2u, 3u, 8u}) CHECK(compute_distance_matrix(a, metric, nullptr, {t}) == one);
    }
    FrameCollection frames;
    for (int i = 0; i < 9; ++i) frames.frames.push_back(frame("b" + std::to_string(i), fixtures::blob_frame(12, 10, i / 8.0, 4)));
    const auto one = compute_distance_matrix(frames, Metric::l2_image, {1});
    CHECK(compute_distance_matrix(frames, Metric::l2_image, {4}) == one);
}

TEST_CASE("judge values") {
    const JudgeNetParams g;
    CHECK(judge(g, 0.3, 0.3) == 0.5);
    CHECK(judge(g, 2.0, 1.0) == doctest::Approx(0.7310585786));
    CHECK(judge(g, 60.0, 0.0) > 0.999999);
    CHECK(judge({1.0, 0.0}, 0.0, 60.0) < 1e-6);
}

TEST_CASE("judgment loss is minimized at the target probability") {
    const JudgeNetParams g;
    CHECK(judgment_loss(g, 1.0, 1.0, 0.5) == doctest::Approx(std::log(2.0)));
    for (double d0 : {0.0, 0.5, 2.0, 9.0}) CHECK(judgment_loss(g, d0, 1.0, 0.5) >= std::log(2.0) - 1e-12);
    CHECK(std::isfinite(judgment_loss(g, 1e4, 0.0, 0.0)));
}

namespace {

struct CalibrationSet {
    FeatureArchive archive;
    std::vector<JudgmentTriple> judgments;
};

// Reference frames with a close and a far distortion each. h is the share of
// raters who judged distorted1 closer.
CalibrationSet calibration_set(std::size_t refs, std::uint64_t seed, bool separable) {
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < refs; ++r) {
        for (const char* s : {"ref", "near", "far"}) ids.push_back(std::string(s) + std::to_string(r));
    }
    FeatureArchive a(ids, {{"l1", 3, 2, 2}, {"l2", 4, 1, 2}}, false);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (std::size_t r = 0; r < refs; ++r) {
        const auto base = a.frame_values(3 * r);
        std::vector<float> ref(base.size());
        for (float& v : ref) v = g(rng);
        for (std::size_t k = 0; k < 3; ++k) {
            const float amp = k == 0 ? 0.0f : (k == 1 ? 0.1f : 0.8f);
            float* dst = a.data().data() + (3 * r + k) * a.frame_stride();
            for (std::size_t i = 0; i < ref.size(); ++i) dst[i] = ref[i] + amp * g(rng);
        }
    }
    CalibrationSet out{channel_unit_normalize(a), {}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t r = 0; r < refs; ++r) {
        const std::string n = std::to_string(r);
        const double h = separable ? 1.0 : u(rng);
        out.judgments.push_back({"ref" + n, "far" + n, "near" + n, h});
    }
    return out;
}

std::vector<double> flat_params(const CalibrationWeights& w, const JudgeNetParams& g) {
    std::vector<double> p;
    for (const auto& l : w.per_layer) p.insert(p.end(), l.begin(), l.end());
    p.push_back(g.slope);
    p.push_back(g.bias);
    return p;
}

void unflatten(std::span<const double> p, CalibrationWeights& w, JudgeNetParams& g) {
    std::size_t k = 0;
    for (auto& l : w.per_layer) {
        for (double& x : l) x = p[k++];
    }
    g.slope = p[k++];
    g.bias = p[k];
}

}  // namespace

TEST_CASE("calibration gradient matches central finite differences") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto set = calibration_set(6, seed, false);
        auto w = CalibrationWeights::uniform(set.archive);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.2, 1.5);
        for (auto& l : w.per_layer) {
            for (double& x : l) x = u(rng);
        }
        JudgeNetParams g{1.7, -0.3};
        const auto grad = calibration_gradient(set.archive, set.judgments, w, g);
        const auto p0 = flat_params(w, g);
        REQUIRE(grad.size() == p0.size());
        for (std::size_t k = 0; k < p0.size(); ++k) {
            const double h = 1e-6;
            auto p = p0;
            CalibrationWeights wp = w;
            JudgeNetParams gp = g;
            p[k] = p0[k] + h;
            unflatten(p, wp, gp);
            const double up = calibration_loss(set.archive, set.judgments, wp, gp);
            p[k] = p0[k] - h;
            unflatten(p, wp, gp);
            const double down = calibration_loss(set.archive, set.judgments, wp, gp);
            const double fd = (up - down) / (2.0 * h);
            CAPTURE(k);
            CHECK(std::abs(grad[k] - fd) <= 1e-3 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("calibration fit on a separable set predicts every judgment") {
    const auto set = calibration_set(12, 5, true);
    CalibrationConfig cfg;
    cfg.epochs = 150;
    const auto r = fit_calibration(set.archive, set.judgments, cfg);
    CHECK(r.final_loss <= r.initial_loss);
    for (const auto& t : set.judgments) {
        const double d0 = lpips_distance(set.archive, set.archive.index_of(t.ref_id), set.archive.index_of(t.distorted0_id), r.weights);
        const double d1 = lpips_distance(set.archive, set.archive.index_of(t.ref_id), set.archive.index_of(t.distorted1_id), r.weights);
        CHECK(judge(r.judge, d0, d1) > 0.5);
    }
    for (const auto& l : r.weights.per_layer) {
        for (double x : l) CHECK(x >= 0.0);
    }
}

TEST_CASE("calibration is deterministic for a fixed seed") {
    const auto set = calibration_set(10, 9, false);
    CalibrationConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 3;
    cfg.seed = 42;
    const auto a = fit_calibration(set.archive, set.judgments, cfg);
    const auto b = fit_calibration(set.archive, set.judgments, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.judge.slope == b.judge.slope);
    CHECK(a.final_loss == b.final_loss);
    CHECK(a.final_loss <= a.initial_loss);
}

TEST_CASE("weights JSON round-trips and is checked against the archive") {
    const auto a = fixtures::random_archive(2, {{"conv1", 3, 1, 1}, {"conv2", 2, 1, 1}}, 2, true);
    CalibrationWeights w = CalibrationWeights::uniform(a);
    w.per_layer[0] = {0.25, 1.0 / 3.0, 0.0};
    w.per_layer[1] = {2.0, 1e-300};
    const auto back = weights_from_json(weights_to_json(w), a);
    CHECK(back == w);
    CHECK_THROWS_AS(weights_from_json(R"({"conv1":[1,1,1]})", a), ContractError);
    CHECK_THROWS_AS(weights_from_json(R"({"conv1":[1,1],"conv2":[1,1]})", a), ContractError);
    CHECK_THROWS_AS(weights_from_json(R"({"conv1":[1,1,1],"conv2":[1,-1]})", a), ContractError);
    CHECK_THROWS_AS(weights_from_json(R"({"conv1":[1,1,1],"conv2":[1,1],"conv3":[1]})", a), ContractError);
    CHECK_THROWS_AS(weights_from_json("[1,2]", a), FormatError);
    CHECK_THROWS_AS(weights_from_json("{", a), FormatError);
}
