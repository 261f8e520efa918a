#include "sketchpix/eval_server.hpp"

#include "httplib.h"
#include "json.hpp"
#include "sketchpix/latent.hpp"

namespace sketchpix::eval {
namespace {

using nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    reply(res, status, {{"error", msg}, {"code", code}});
}

json proportion_json(const Proportion& p) {
    return {{"human", p.human}, {"total", p.total}, {"proportion", p.value()}};
}

json stats_json(const TuringStats& s) {
    json out;
    out["participants_total"] = s.participants_total;
    out["participants_retained"] = s.participants_retained;
    out["per_source"] = json::object();
    for (const auto& [src, p] : s.per_source) out["per_source"][src] = proportion_json(p);
    out["per_source_category"] = json::array();
    for (const auto& [key, p] : s.per_source_category) {
        json row = proportion_json(p);
        row["source"] = key.first;
        row["category"] = key.second;
        out["per_source_category"].push_back(row);
    }
    // Keyed by id only; which source an id belongs to stays hidden.
    out["per_sketch"] = json::object();
    for (const auto& [id, p] : s.per_sketch) out["per_sketch"][id] = proportion_json(p);
    return out;
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const EvalError& e) {
        switch (e.kind()) {
            case EvalError::Kind::UnknownSession: return fail(res, 404, "unknown_session", e.what());
            case EvalError::Kind::UnknownSketch: return fail(res, 404, "unknown_sketch", e.what());
            case EvalError::Kind::NotServed: return fail(res, 409, "not_served", e.what());
            case EvalError::Kind::AlreadyTagged: return fail(res, 409, "already_tagged", e.what());
            case EvalError::Kind::NotComplete: return fail(res, 409, "not_complete", e.what());
        }
    } catch (const json::exception& e) {
        fail(res, 400, "bad_request", e.what());
    } catch (const std::invalid_argument& e) {
        fail(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
        fail(res, 500, "internal", e.what());
    }
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

}  // namespace

EvalServer::EvalServer(EvalStore& store, ServerOptions options, const GenerationBackend* generation)
    : store_(store), options_(std::move(options)), generation_(generation),
      http_(std::make_unique<httplib::Server>()) {
    if (generation_ && generation_->generator)
        for (const auto& [cat, seq] : generation_->exemplars)
            latents_[cat] = generation_->generator->encode(seq);
    routes();
}

EvalServer::~EvalServer() { stop(); }

void EvalServer::routes() {
    auto& s = *http_;

    s.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json b = body_json(req);
            std::optional<std::uint64_t> seed;
            if (b.contains("seed")) seed = b.at("seed").get<std::uint64_t>();
            const std::string token = store_.create_session(seed);
            reply(res, 201, {{"session", token}, {"total", store_.pool().items.size()}});
        });
    });

    s.Get(R"(/session/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const SessionInfo info = store_.session(req.matches[1]);
            reply(res, 200, {{"session", info.token}, {"served", info.served}, {"tagged", info.tagged},
                             {"total", info.total}, {"complete", info.complete()}});
        });
    });

    s.Get(R"(/session/([0-9a-f]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const NextSketch n = store_.next_sketch(req.matches[1]);
            if (n.exhausted) return reply(res, 200, {{"status", "exhausted"}, {"total", n.total}});
            reply(res, 200, {{"status", "ok"}, {"id", n.id}, {"svg", n.svg}, {"position", n.position},
                             {"total", n.total}});
        });
    });

    s.Post(R"(/session/([0-9a-f]+)/tag)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json b = body_json(req);
            const std::string token = req.matches[1];
            store_.record_tag(token, b.at("sketch").get<std::string>(), parse_tag(b.at("tag").get<std::string>()));
            const SessionInfo info = store_.session(token);
            reply(res, 200, {{"ok", true}, {"tagged", info.tagged}, {"total", info.total}});
        });
    });

    s.Get(R"(/session/([0-9a-f]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto recs = store_.session_records(req.matches[1]);
            json items = json::array();
            for (const auto& r : recs) {
                const SketchItem& it = store_.pool().get(r.sketch_id);
                items.push_back({{"id", it.id}, {"source", it.source}, {"category", it.category},
                                 {"tag", tag_name(r.tag)}});
            }
            const TuringStats st = compute_stats(recs, store_.pool());
            json per = json::object();
            for (const auto& [src, p] : st.per_source) per[src] = proportion_json(p);
            reply(res, 200, {{"items", items}, {"per_source", per}});
        });
    });

    s.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            const auto recs = store_.records();
            reply(res, 200, {{"filtered", stats_json(filtered_stats(recs, store_.pool()))},
                             {"unfiltered", stats_json(compute_stats(recs, store_.pool()))}});
        });
    });

    s.Get("/exemplars", [this](const httplib::Request&, httplib::Response& res) {
        if (latents_.empty()) return fail(res, 404, "no_generator", "generation backend not loaded");
        json cats = json::array();
        for (const auto& [c, z] : latents_) cats.push_back(c);
        json pairs = json::array();
        for (const auto& [a, b] : default_interpolation_pairs())
            if (latents_.count(a) && latents_.count(b)) pairs.push_back({a, b});
        reply(res, 200, {{"categories", cats}, {"pairs", pairs}});
    });

    s.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
        if (latents_.empty()) return fail(res, 404, "no_generator", "generation backend not loaded");
        guarded(res, [&] {
            const json b = body_json(req);
            const std::string first = b.at("first"), second = b.at("second");
            const double w1 = b.at("w1").get<double>();
            if (!(w1 >= 0.0 && w1 <= 1.0)) throw std::invalid_argument("w1 must lie in [0, 1]");
            auto a = latents_.find(first), c = latents_.find(second);
            if (a == latents_.end() || c == latents_.end())
                throw std::invalid_argument("no exemplar for '" + (a == latents_.end() ? first : second) + "'");
            LatentVector z(a->second.size());
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = w1 * a->second[i] + (1.0 - w1) * c->second[i];
            SampleConfig cfg = generation_->sample;
            cfg.seed = b.value("seed", cfg.seed);
            cfg.temperature = b.value("temperature", cfg.temperature);
            const SketchSequence seq = generation_->generator->generate(z, cfg);
            reply(res, 200, {{"w1", w1}, {"svg", to_svg(seq)}, {"points", json::parse(sequence_to_json(seq))["points"]}});
        });
    });

    if (options_.ui_dir && !s.set_mount_point("/", options_.ui_dir->string()))
        throw std::runtime_error("UI directory " + options_.ui_dir->string() + " does not exist");
}

int EvalServer::bind() {
    const int port = options_.port == 0 ? http_->bind_to_any_port(options_.host)
                                        : (http_->bind_to_port(options_.host, options_.port) ? options_.port : -1);
    if (port < 0) throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port;
}

void EvalServer::run() { http_->listen_after_bind(); }

void EvalServer::stop() {
    if (http_) http_->stop();
}

}  // namespace sketchpix::eval
