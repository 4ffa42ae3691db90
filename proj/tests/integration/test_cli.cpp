#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reseq/outliers.hpp"

using namespace reseq;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the reseq binary with the given arguments; stderr goes through a temp file.
Run run_reseq(const std::vector<std::string>& args) {
    static fixtures::TempDir scratch("reseq-cli");
    const fs::path errfile = scratch / "stderr.txt";
    std::string cmd = quote(RESEQ_CLI);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " 2>" + quote(errfile.string());
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(errfile);
    return r;
}

// Solid grey frames f0..f(n-1) with increasing brightness.
fs::path grey_dir(const fixtures::TempDir& dir, std::size_t n, const std::string& name = "frames") {
    const fs::path out = dir / name;
    fs::create_directories(out);
    const auto frames = fixtures::grey_ramp(n);
    for (std::size_t i = 0; i < n; ++i) write_png(frames[i], out / ("f" + std::to_string(i) + ".png"));
    return out;
}

}  // namespace

TEST_CASE("dist writes an n x n matrix and is reproducible") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 3);
    const auto out = (dir / "m.pdm1").string();
    const auto r = run_reseq({"dist", "--images", frames.string(), "--out", out});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    const auto m = load_matrix(out);
    CHECK(m.size() == 3);
    CHECK(m.frame_ids() == std::vector<std::string>{"f0", "f1", "f2"});
    CHECK(m(0, 1) > 0.0f);

    const auto again = (dir / "m2.pdm1").string();
    CHECK(run_reseq({"dist", "--images", frames.string(), "--out", again, "--threads", "3"}).code == 0);
    CHECK(slurp(out) == slurp(again));
}

TEST_CASE("metric prerequisites and usage errors") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 3);
    const auto out = (dir / "m.pdm1").string();

    auto r = run_reseq({"dist", "--images", frames.string(), "--metric", "lpips", "--out", out});
    CHECK(r.code == 2);
    CHECK(r.err.find("feature archive") != std::string::npos);
    CHECK(r.err.rfind("reseq: contract error:", 0) == 0);

    r = run_reseq({"--json-errors", "dist", "--images", frames.string(), "--metric", "lpips", "--out", out});
    CHECK(r.code == 2);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["error"]["kind"] == "contract");
    CHECK(j["error"]["exit_code"] == 2);

    r = run_reseq({"--json-errors", "dist", "--images", (dir / "absent").string(), "--out", out});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "ingest");
    CHECK(nlohmann::json::parse(r.err)["error"].contains("path"));

    write_file_bytes(dir / "bad.pdm1", std::vector<std::uint8_t>{'N', 'O', 'P', 'E', 0, 0, 0, 0});
    r = run_reseq({"--json-errors", "path", "--matrix", (dir / "bad.pdm1").string(), "--no-prune"});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["offset"] == 0);

    r = run_reseq({"dist", "--images", frames.string()});
    CHECK(r.code == 2);
    r = run_reseq({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(run_reseq({"--help"}).code == 0);
}

TEST_CASE("path over a colinear chain returns the chain") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 10);
    const auto r = run_reseq({"path", "--images", frames.string(), "--start", "f0", "--end", "f9", "--no-prune"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "path");
    CHECK(j["order"] == nlohmann::json::array({"f0", "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9"}));
    CHECK(j["constraints"]["start"] == "f0");

    const auto exported = dir / "export";
    CHECK(run_reseq({"path", "--images", frames.string(), "--start", "f9", "--no-prune", "--export-frames", exported.string(),
                 "--out", (dir / "p.json").string()})
              .code == 0);
    CHECK(slurp(exported / "000001.png") == slurp(frames / "f9.png"));
    CHECK(slurp(exported / "000010.png") == slurp(frames / "f0.png"));
}

TEST_CASE("cycle and keyframes") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 3);
    auto r = run_reseq({"cycle", "--images", frames.string(), "--no-prune"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "cycle");
    CHECK(j["order"].size() == 3);
    CHECK(j["order"][0] == "f0");

    r = run_reseq({"keyframes", "--images", frames.string(), "--no-prune", "--frames", "f0,f1"});
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["order"] == nlohmann::json::array({"f0", "f1"}));

    r = run_reseq({"keyframes", "--images", frames.string(), "--no-prune", "--frames", "f0,f2"});
    CHECK(nlohmann::json::parse(r.out)["order"] == nlohmann::json::array({"f0", "f1", "f2"}));

    r = run_reseq({"keyframes", "--images", frames.string(), "--no-prune", "--frames", "f0,zz"});
    CHECK(r.code == 2);
}

TEST_CASE("prune reports and its failure exit code") {
    fixtures::TempDir dir;
    const auto planted = fixtures::planted_outlier_matrix(30, 12, 4);
    save_matrix(planted, dir / "m.pdm1");
    auto r = run_reseq({"prune", "--matrix", (dir / "m.pdm1").string(), "--out", (dir / "kept.pdm1").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["removed"] == nlohmann::json::array({"f12"}));
    CHECK(load_matrix(dir / "kept.pdm1").size() == 29);

    // Find a matrix whose threshold leaves fewer than two frames at q = 1e-9.
    PruneConfig cfg;
    cfg.q = 1e-9;
    std::optional<DistanceMatrix> doomed;
    for (std::uint64_t seed = 1; seed <= 12 && !doomed; ++seed) {
        auto m = fixtures::random_matrix(10 + seed, seed);
        try {
            prune_outliers(m, cfg);
        } catch (const PruneError&) {
            doomed = std::move(m);
        }
    }
    REQUIRE(doomed);
    save_matrix(*doomed, dir / "doomed.pdm1");
    r = run_reseq({"prune", "--matrix", (dir / "doomed.pdm1").string(), "--q", "1e-9"});
    CHECK(r.code == 3);
    CHECK(r.err.find("prune error") != std::string::npos);
}

TEST_CASE("layout writes a composite and an embedding") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 4);
    const auto seq = (dir / "seq.json").string();
    REQUIRE(run_reseq({"path", "--images", frames.string(), "--no-prune", "--out", seq}).code == 0);
    const auto png = (dir / "strip.png").string();
    const auto emb = (dir / "emb.json").string();
    const auto r = run_reseq({"layout", "--images", frames.string(), "--no-prune", "--sequence", seq, "--style", "linear",
                          "--gutter", "2", "--out", png, "--embedding", emb});
    REQUIRE(r.code == 0);
    const auto img = decode_image_file(png);
    CHECK(img.width == 4 * 4 + 3 * 2);
    CHECK(img.height == 4);
    const auto j = nlohmann::json::parse(slurp(emb));
    CHECK(j.size() == 5);
    CHECK(j.contains("stress"));

    CHECK(run_reseq({"layout", "--images", frames.string(), "--sequence", seq, "--style", "spiral", "--out", png}).code == 2);
}

TEST_CASE("eval over a case directory") {
    fixtures::TempDir dir;
    grey_dir(dir, 6, "cases/ramp");
    std::vector<Raster> blobs;
    for (int i = 0; i < 10; ++i) blobs.push_back(fixtures::blob_frame(16, 12, i / 9.0, 5));
    fixtures::write_frames(dir / "cases" / "blob", blobs);
    grey_dir(dir, 4, "cases/skipme");
    const auto cases = (dir / "cases").string();
    const auto csv1 = (dir / "a.csv").string();
    const auto csv2 = (dir / "b.csv").string();
    const auto r = run_reseq({"eval", "--cases", cases, "--metrics", "l2-image", "--exclude-case", "skipme", "--csv", csv1,
                          "--shuffle-seed", "3"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["cases"].size() == 2);
    CHECK(j["excluded"] == nlohmann::json::array({"skipme"}));
    CHECK(j["means"]["l2-image"]["cases"] == 2);
    REQUIRE(run_reseq({"eval", "--cases", cases, "--metrics", "l2-image", "--exclude-case", "skipme", "--csv", csv2,
                   "--shuffle-seed", "3", "--out", (dir / "r.json").string()})
                .code == 0);
    const std::string csv = slurp(csv1);
    CHECK(csv == slurp(csv2));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("calibrate fits weights from judgments") {
    fixtures::TempDir dir;
    const auto archive = fixtures::random_archive(6, {{"a", 3, 2, 2}, {"b", 2, 2, 1}}, 8, false);
    save_archive(archive, dir / "f.pfa1");
    nlohmann::json judgments = nlohmann::json::array();
    for (int t = 0; t < 12; ++t) {
        judgments.push_back({{"ref", "f" + std::to_string(t % 6)},
                             {"d0", "f" + std::to_string((t + 1) % 6)},
                             {"d1", "f" + std::to_string((t + 3) % 6)},
                             {"h", (t % 4) / 3.0}});
    }
    std::ofstream(dir / "j.json") << judgments.dump();
    const auto r = run_reseq({"calibrate", "--features", (dir / "f.pfa1").string(), "--judgments",
                          (dir / "j.json").string(), "--out", (dir / "w.json").string(), "--epochs", "50"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["final_loss"].get<double>() <= j["initial_loss"].get<double>());
    const auto w = nlohmann::json::parse(slurp(dir / "w.json"));
    CHECK(!w.empty());
}

TEST_CASE("serve refuses a port that is already taken") {
    fixtures::TempDir dir;
    const auto frames = grey_dir(dir, 3);
    httplib::Server blocker;
    blocker.set_socket_options([](socket_t) {});
    const int port = blocker.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    const auto r = run_reseq({"--json-errors", "serve", "--images", frames.string(), "--no-prune", "--port", std::to_string(port)});
    CHECK(r.code == 4);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "bind");
}

TEST_CASE("config file with flag overrides") {
    fixtures::TempDir dir;
    grey_dir(dir, 5);
    std::ofstream(dir / "project.json") << R"({"images": "frames", "no_prune": true, "exclude": ["f4"]})";
    auto r = run_reseq({"path", "--config", (dir / "project.json").string(), "--start", "f0"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["order"].size() == 4);
    r = run_reseq({"path", "--config", (dir / "project.json").string(), "--exclude", "f3,f4"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["order"].size() == 3);
    std::ofstream(dir / "typo.json") << R"({"imagez": "frames"})";
    CHECK(run_reseq({"path", "--config", (dir / "typo.json").string()}).code == 2);
}
