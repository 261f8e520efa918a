#pragma once
// JSON-over-HTTP front end for the Turing-test store, plus an optional
// generation endpoint for the interpolation explorer.
//
//   POST /session                  {"seed"?}          -> 201 {"session", "total"}
//   GET  /session/{id}                                -> {"session","served","tagged","total","complete"}
//   GET  /session/{id}/next                           -> {"status":"ok","id","svg","position","total"}
//                                                        | {"status":"exhausted","total"}
//   POST /session/{id}/tag         {"sketch","tag"}   -> {"ok":true,"tagged","total"}
//   GET  /session/{id}/results     (complete only)    -> {"items":[...],"per_source":{...}}
//   GET  /stats                                       -> {"filtered":{...},"unfiltered":{...}}
//   GET  /exemplars                                   -> {"categories":[...],"pairs":[...]}
//   POST /generate  {"first","second","w1","seed"?,"temperature"?} -> {"svg","points","w1"}
//
// Errors are {"error": message, "code": short-name}: 400 bad request, 404
// unknown session/sketch or no generation backend, 409 double tag, unserved
// sketch or incomplete session.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "sketchpix/eval_store.hpp"
#include "sketchpix/generation.hpp"

namespace httplib {
class Server;
}

namespace sketchpix::eval {

struct GenerationBackend {
    const Generator* generator = nullptr;
    std::map<std::string, SketchSequence> exemplars;  // raw units
    SampleConfig sample;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> ui_dir;
};

class EvalServer {
public:
    EvalServer(EvalStore& store, ServerOptions options, const GenerationBackend* generation = nullptr);
    ~EvalServer();

    // Binds and returns the port; run() then serves until stop().
    int bind();
    void run();
    void stop();

private:
    void routes();

    EvalStore& store_;
    ServerOptions options_;
    std::map<std::string, LatentVector> latents_;
    const GenerationBackend* generation_;
    std::unique_ptr<httplib::Server> http_;
};

}  // namespace sketchpix::eval
