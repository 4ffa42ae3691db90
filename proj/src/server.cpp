#include "reseq/server.hpp"

#include <httplib.h>

#include "reseq/image_io.hpp"
#include "reseq/json_util.hpp"

namespace reseq {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const char* kind, const std::string& message) {
    nlohmann::ordered_json j = {{"error", {{"kind", kind}, {"message", message}}}};
    res.status = status;
    res.set_content(j.dump() + "\n", kJson);
}

// Runs a handler and turns engine errors into JSON error responses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const ContractError& e) {
        send_error(res, 400, e.kind(), e.what());
    } catch (const Error& e) {
        send_error(res, 422, e.kind(), e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

std::string mime_for(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    return "image/png";
}

}  // namespace

EngineServer::EngineServer(std::shared_ptr<const EngineSnapshot> initial, Builder rebuild)
    : http_(std::make_unique<httplib::Server>()), rebuild_(std::move(rebuild)), snapshot_(std::move(initial)) {
    install_routes();
}

EngineServer::~EngineServer() { stop(); }

std::shared_ptr<const EngineSnapshot> EngineServer::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void EngineServer::replace(std::shared_ptr<const EngineSnapshot> next) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
}

int EngineServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw BindError("cannot listen on " + host + ":" + std::to_string(port) + " (port in use?)");
    return bound;
}

void EngineServer::run() { http_->listen_after_bind(); }

void EngineServer::stop() {
    if (http_) http_->stop();
}

void EngineServer::wait_until_ready() const { http_->wait_until_ready(); }

void EngineServer::install_routes() {
    auto& s = *http_;
    // httplib's default adds SO_REUSEPORT, which lets a second server share a
    // busy port silently. Keep only SO_REUSEADDR so a taken port fails to bind.
    s.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Get("/api/frames", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { res.set_content(frames_json(*snapshot()), kJson); });
    });
    s.Get("/api/mst", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { res.set_content(mst_json(snapshot()->tree), kJson); });
    });
    s.Get("/api/embedding", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { res.set_content(embedding_to_json(snapshot()->embedding), kJson); });
    });
    s.Get("/api/outliers", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { res.set_content(outliers_json(*snapshot()), kJson); });
    });
    s.Post("/api/sequence", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            nlohmann::json body;
            try {
                body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::parse_error& e) {
                throw ContractError(std::string("request body is not valid JSON: ") + e.what());
            }
            const auto snap = snapshot();
            res.set_content(sequence_to_json(solve_request(*snap, body)), kJson);
        });
    });
    s.Post("/api/reload", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            std::lock_guard lock(reload_mutex_);
            if (!rebuild_) throw ContractError("this server has no reload source");
            auto next = rebuild_();
            const std::size_t n = next->graph.node_count();
            replace(std::move(next));
            res.set_content(dump_json({{"reloaded", true}, {"frames", n}}), kJson);
        });
    });
    s.Get(R"(/frames/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto snap = snapshot();
            const std::string id = req.matches[1];
            const auto& frames = snap->frames;
            std::optional<std::size_t> idx;
            for (std::size_t i = 0; i < frames.size(); ++i) {
                if (frames.frames[i].id == id) idx = i;
            }
            if (!idx) return send_error(res, 404, "not_found", "unknown frame id '" + id + "'");
            const auto& rec = frames.frames[*idx];
            if (rec.source_path) {
                const auto bytes = read_file_bytes(*rec.source_path);
                res.set_content(std::string(bytes.begin(), bytes.end()), mime_for(*rec.source_path));
            } else if (rec.pixels) {
                const auto bytes = encode_png(*rec.pixels);
                res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
            } else {
                send_error(res, 404, "not_found", "frame '" + id + "' has no image");
            }
        });
    });
}

}  // namespace reseq
