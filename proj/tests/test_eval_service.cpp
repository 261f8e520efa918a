#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "sketchpix/eval_server.hpp"
#include "support/toy_model.hpp"
#include "support/turing_fixture.hpp"

using namespace sketchpix;
using namespace sketchpix::eval;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("skpx-eval-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Pool small_pool(std::size_t n) {
    Pool p;
    for (std::size_t i = 0; i < n; ++i)
        p.items.push_back({"k" + std::to_string(i), known_sources()[i % 5], i % 2 ? "cat" : "bus",
                           "<svg id='" + std::to_string(i) + "'/>"});
    return p;
}

std::vector<std::string> serve_all(EvalStore& store, const std::string& token, Tag tag = Tag::Computer) {
    std::vector<std::string> order;
    for (;;) {
        const NextSketch n = store.next_sketch(token);
        if (n.exhausted) break;
        order.push_back(n.id);
        store.record_tag(token, n.id, tag);
    }
    return order;
}

}  // namespace

TEST_CASE("engineered tag log reproduces its target proportions exactly after filtering") {
    const auto f = testing::turing_fixture();
    const TuringStats s = filtered_stats(f.records, f.pool);
    CHECK(s.participants_total == 61);
    CHECK(s.participants_retained == 59);
    REQUIRE(s.per_source.size() == 5);
    for (const auto& [src, p] : f.expected) {
        CAPTURE(src);
        CHECK(s.per_source.at(src).value() == p);
    }
    // Unfiltered numbers include the extreme taggers and so differ.
    const TuringStats u = compute_stats(f.records, f.pool);
    CHECK(u.participants_retained == 61);
    CHECK(u.per_source.at("Human").value() != 0.58);
}

TEST_CASE("filter keeps the 0.1 and 0.9 boundaries and drops beyond them") {
    std::vector<TagRecord> r;
    auto add = [&](const std::string& who, int human, int total) {
        for (int i = 0; i < total; ++i)
            r.push_back({who, "x" + std::to_string(i), i < human ? Tag::Human : Tag::Computer, 0});
    };
    add("nine-tenths", 9, 10);
    add("one-tenth", 1, 10);
    add("over", 10, 11);
    add("under", 1, 11);
    add("all-human", 5, 5);
    add("none-human", 0, 5);
    add("middle", 1, 2);
    const auto keep = filter_participants(r);
    CHECK(keep == std::set<std::string>{"nine-tenths", "one-tenth", "middle"});
}

TEST_CASE("all Computer tags give zero proportions") {
    const Pool pool = testing::fixture_pool();
    std::vector<TagRecord> r;
    for (const auto& it : pool.items) r.push_back({"a", it.id, Tag::Computer, 0});
    const TuringStats s = compute_stats(r, pool);
    for (const auto& [k, p] : s.per_source) CHECK(p.value() == 0.0);
    for (const auto& [k, p] : s.per_source_category) CHECK(p.value() == 0.0);
    for (const auto& [k, p] : s.per_sketch) CHECK(p.value() == 0.0);
}

TEST_CASE("per-category proportions average back to the per-source value") {
    const auto f = testing::turing_fixture();
    for (const TuringStats& s : {filtered_stats(f.records, f.pool), compute_stats(f.records, f.pool)}) {
        std::map<std::string, double> weighted, count;
        for (const auto& [key, p] : s.per_source_category) {
            weighted[key.first] += p.value() * double(p.total);
            count[key.first] += double(p.total);
        }
        for (const auto& [src, p] : s.per_source) CHECK(std::abs(weighted[src] / count[src] - p.value()) < 1e-12);
        for (const auto& [id, p] : s.per_sketch) {
            CHECK(p.value() >= 0.0);
            CHECK(p.value() <= 1.0);
        }
    }
}

TEST_CASE("filter then stats does not depend on record order") {
    auto f = testing::turing_fixture();
    const TuringStats a = filtered_stats(f.records, f.pool);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        std::shuffle(f.records.begin(), f.records.end(), rng);
        const TuringStats b = filtered_stats(f.records, f.pool);
        CHECK(b.participants_retained == a.participants_retained);
        for (const auto& [src, p] : a.per_source) {
            CHECK(b.per_source.at(src).human == p.human);
            CHECK(b.per_source.at(src).total == p.total);
        }
        CHECK(b.per_source_category.size() == a.per_source_category.size());
        for (const auto& [k, p] : a.per_sketch) CHECK(b.per_sketch.at(k).human == p.human);
    }
}

TEST_CASE("a 150-item session serves every sketch once then reports exhaustion") {
    TempDir dir;
    EvalStore store(testing::fixture_pool(), dir.path / "events.jsonl");
    const std::string token = store.create_session(11);
    CHECK(token.size() == 32);
    const auto order = serve_all(store, token);
    CHECK(order.size() == 150);
    CHECK(std::set<std::string>(order.begin(), order.end()).size() == 150);
    const NextSketch again = store.next_sketch(token);
    CHECK(again.exhausted);
    CHECK(again.id.empty());
    CHECK(store.session(token).complete());
}

TEST_CASE("next_sketch repeats the pending sketch until it is tagged") {
    TempDir dir;
    EvalStore store(small_pool(5), dir.path / "events.jsonl");
    const std::string t = store.create_session(3);
    const NextSketch a = store.next_sketch(t), b = store.next_sketch(t);
    CHECK(a.id == b.id);
    CHECK(a.position == 1);
    CHECK(store.session(t).served == 1);
    store.record_tag(t, a.id, Tag::Human);
    CHECK(store.next_sketch(t).id != a.id);
}

TEST_CASE("session seeds drive the serving order") {
    TempDir dir;
    EvalStore store(testing::fixture_pool(), dir.path / "events.jsonl");
    const auto a = serve_all(store, store.create_session(1));
    const auto b = serve_all(store, store.create_session(2));
    const auto c = serve_all(store, store.create_session(1));
    CHECK(a != b);
    CHECK(a == c);
    // Roughly uniform: the first sketch over many sessions hits many items.
    std::set<std::string> firsts;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto t = store.create_session(100 + s);
        firsts.insert(store.next_sketch(t).id);
    }
    CHECK(firsts.size() > 50);
}

TEST_CASE("tag rejections leave the counts unchanged") {
    TempDir dir;
    EvalStore store(small_pool(4), dir.path / "events.jsonl");
    const std::string t = store.create_session(9);
    CHECK_THROWS_AS(store.next_sketch("deadbeef"), EvalError);
    const NextSketch n = store.next_sketch(t);
    std::string other;
    for (const auto& it : store.pool().items)
        if (it.id != n.id) other = it.id;
    try {
        store.record_tag(t, other, Tag::Human);
        FAIL("unserved tag accepted");
    } catch (const EvalError& e) {
        CHECK(e.kind() == EvalError::Kind::NotServed);
    }
    store.record_tag(t, n.id, Tag::Human);
    CHECK(store.records().size() == 1);
    try {
        store.record_tag(t, n.id, Tag::Computer);
        FAIL("double tag accepted");
    } catch (const EvalError& e) {
        CHECK(e.kind() == EvalError::Kind::AlreadyTagged);
    }
    CHECK(store.records().size() == 1);
    CHECK(store.live_source_counts().at(store.pool().get(n.id).source).total == 1);
    CHECK_THROWS_AS(store.session_records(t), EvalError);
}

TEST_CASE("live counters match stats recomputed from the log") {
    TempDir dir;
    const fs::path log = dir.path / "events.jsonl";
    std::map<std::string, Proportion> before;
    {
        EvalStore store(testing::fixture_pool(), log);
        std::mt19937_64 rng(4);
        for (int p = 0; p < 6; ++p) {
            const auto t = store.create_session(rng());
            for (int i = 0; i < 40; ++i) {
                const NextSketch n = store.next_sketch(t);
                store.record_tag(t, n.id, rng() % 3 ? Tag::Human : Tag::Computer);
            }
        }
        before = store.live_source_counts();
        const TuringStats s = compute_stats(store.records(), store.pool());
        for (const auto& [src, p] : s.per_source) {
            CHECK(before.at(src).human == p.human);
            CHECK(before.at(src).total == p.total);
        }
    }
    EvalStore reopened(testing::fixture_pool(), log);
    CHECK(reopened.records().size() == 240);
    CHECK(reopened.session_count() == 6);
    for (const auto& [src, p] : before) {
        CHECK(reopened.live_source_counts().at(src).human == p.human);
        CHECK(reopened.live_source_counts().at(src).total == p.total);
    }
}

TEST_CASE("restart after SIGKILL keeps exactly the acknowledged tags") {
    TempDir dir;
    const fs::path log = dir.path / "events.jsonl";
    const std::size_t k = 17;
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    const pid_t child = ::fork();
    REQUIRE(child >= 0);
    if (child == 0) {
        ::close(fds[0]);
        EvalStore store(testing::fixture_pool(), log);
        const std::string t = store.create_session(21);
        if (::write(fds[1], t.data(), t.size()) != ssize_t(t.size())) ::_exit(2);
        for (std::size_t i = 0; i < k; ++i) {
            const NextSketch n = store.next_sketch(t);
            store.record_tag(t, n.id, i % 2 ? Tag::Human : Tag::Computer);
            const char ack = 'a';
            if (::write(fds[1], &ack, 1) != 1) ::_exit(2);
        }
        store.next_sketch(t);  // a serve in flight, never tagged
        ::raise(SIGKILL);
        ::_exit(3);
    }
    ::close(fds[1]);
    std::string token(32, '\0');
    REQUIRE(::read(fds[0], token.data(), 32) == 32);
    std::size_t acks = 0;
    char c;
    while (::read(fds[0], &c, 1) == 1) ++acks;
    ::close(fds[0]);
    int status = 0;
    ::waitpid(child, &status, 0);
    REQUIRE(WIFSIGNALED(status));
    CHECK(WTERMSIG(status) == SIGKILL);
    CHECK(acks == k);

    EvalStore store(testing::fixture_pool(), log);
    CHECK(store.records().size() == k);
    const SessionInfo info = store.session(token);
    CHECK(info.tagged == k);
    CHECK(info.served == k + 1);
    REQUIRE(info.pending.has_value());
    CHECK(store.next_sketch(token).id == *info.pending);
}

TEST_CASE("a torn final log line is dropped and damage elsewhere is reported") {
    TempDir dir;
    const fs::path log = dir.path / "events.jsonl";
    std::string token;
    {
        EvalStore store(small_pool(6), log);
        token = store.create_session(1);
        for (int i = 0; i < 3; ++i) store.record_tag(token, store.next_sketch(token).id, Tag::Human);
    }
    std::ofstream(log, std::ios::app) << R"({"type":"tag","session":")" << token.substr(0, 7);
    {
        EvalStore store(small_pool(6), log);
        CHECK(store.records().size() == 3);
        store.record_tag(token, store.next_sketch(token).id, Tag::Computer);
    }
    {
        EvalStore store(small_pool(6), log);
        CHECK(store.records().size() == 4);
    }
    std::string text;
    {
        std::ifstream in(log);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    text.insert(text.find('\n') + 1, "garbage\n");
    std::ofstream(log, std::ios::trunc) << text;
    CHECK_THROWS_AS(EvalStore(small_pool(6), log), std::runtime_error);
}

TEST_CASE("pool files round trip and reject bad pools") {
    TempDir dir;
    Pool pool = small_pool(5);
    write_pool(dir.path, pool);
    const Pool back = load_pool(dir.path);
    REQUIRE(back.items.size() == 5);
    CHECK(back.items[3].svg == pool.items[3].svg);
    CHECK(back.items[3].source == pool.items[3].source);
    pool.items[1].id = pool.items[0].id;
    CHECK_THROWS_AS(validate_pool(pool), std::invalid_argument);
    pool = small_pool(2);
    pool.items[0].source = "GAN";
    CHECK_THROWS_AS(validate_pool(pool), std::invalid_argument);
    std::ofstream(dir.path / "pool.json") << R"([{"id":"a","source":"CNN−KL","category":"cat","svg":""}])";
    CHECK(load_pool(dir.path).items[0].source == "CNN-KL");
}

namespace {

struct RunningServer {
    EvalServer server;
    int port;
    std::thread thread;
    RunningServer(EvalStore& store, const GenerationBackend* gen = nullptr)
        : server(store, ServerOptions{"127.0.0.1", 0, std::nullopt}, gen), port(server.bind()),
          thread([this] { server.run(); }) {}
    ~RunningServer() {
        server.stop();
        thread.join();
    }
};

json body(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_CASE("http api runs a blinded session end to end") {
    TempDir dir;
    EvalStore store(small_pool(6), dir.path / "events.jsonl");
    RunningServer srv(store);
    httplib::Client cli("127.0.0.1", srv.port);

    auto created = cli.Post("/session", R"({"seed": 5})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string token = body(created)["session"];
    const std::string base = "/session/" + token;

    CHECK(cli.Get("/session/0123abcd/next")->status == 404);
    CHECK(cli.Get(base + "/results")->status == 409);

    std::set<std::string> seen;
    for (int i = 0; i < 6; ++i) {
        auto n = cli.Get(base + "/next");
        REQUIRE(n);
        REQUIRE(n->status == 200);
        const json j = body(n);
        std::set<std::string> keys;
        for (const auto& [k, v] : j.items()) keys.insert(k);
        CHECK(keys == std::set<std::string>{"status", "id", "svg", "position", "total"});
        CHECK(n->body.find("source") == std::string::npos);
        seen.insert(j["id"].get<std::string>());
        const json tag{{"sketch", j["id"]}, {"tag", i % 2 ? "Human" : "Computer"}};
        auto t = cli.Post(base + "/tag", tag.dump(), "application/json");
        REQUIRE(t);
        CHECK(t->status == 200);
        CHECK(body(t)["tagged"] == i + 1);
        auto dup = cli.Post(base + "/tag", tag.dump(), "application/json");
        CHECK(dup->status == 409);
        CHECK(body(dup)["code"] == "already_tagged");
        if (i < 5) CHECK(cli.Get(base + "/results")->status == 409);
    }
    CHECK(seen.size() == 6);
    CHECK(body(cli.Get(base + "/next"))["status"] == "exhausted");
    CHECK(cli.Post(base + "/tag", R"({"sketch":"k0","tag":"Maybe"})", "application/json")->status == 400);
    CHECK(cli.Post(base + "/tag", "{", "application/json")->status == 400);

    const json info = body(cli.Get(base));
    CHECK(info["complete"] == true);
    CHECK(info["tagged"] == 6);

    const json res = body(cli.Get(base + "/results"));
    CHECK(res["items"].size() == 6);
    CHECK(res["items"][0].contains("source"));

    const json stats = body(cli.Get("/stats"));
    CHECK(stats["unfiltered"]["participants_total"] == 1);
    CHECK(stats["filtered"]["participants_retained"] == 1);
    CHECK(stats["unfiltered"]["per_sketch"].size() == 6);
    CHECK(cli.Get("/exemplars")->status == 404);
    CHECK(cli.Post("/generate", R"({"first":"a","second":"b","w1":0.5})", "application/json")->status == 404);
}

TEST_CASE("generation endpoint interpolates between exemplar latents") {
    ModelConfig cfg = testing::toy_config(Variant::RnnNoKl, 16);
    auto model = std::make_unique<SketchModel>(cfg, 3);
    testing::jitter_params(*model, 4);
    Generator gen(std::move(model), 2.0);
    GenerationBackend backend;
    backend.generator = &gen;
    backend.exemplars["bus"] = {{{4.0, 2.0, Pen::Down}, {-2.0, 1.0, Pen::Up}, Stroke5Point::terminal()}, "bus"};
    backend.exemplars["cat"] = {{{-1.0, 3.0, Pen::Up}, Stroke5Point::terminal()}, "cat"};
    backend.sample = {0.5, 16, 7};

    TempDir dir;
    EvalStore store(small_pool(2), dir.path / "events.jsonl");
    RunningServer srv(store, &backend);
    httplib::Client cli("127.0.0.1", srv.port);

    const json ex = body(cli.Get("/exemplars"));
    CHECK(ex["categories"] == json::array({"bus", "cat"}));
    CHECK(ex["pairs"] == json::array({json::array({"bus", "cat"})}));

    auto r = cli.Post("/generate", R"({"first":"bus","second":"cat","w1":1.0})", "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const SketchSequence direct = gen.generate(gen.encode(backend.exemplars["bus"]), backend.sample);
    CHECK(body(r)["svg"] == to_svg(direct));
    CHECK(body(r)["points"].size() == direct.points.size());

    CHECK(cli.Post("/generate", R"({"first":"bus","second":"dog","w1":0.5})", "application/json")->status == 400);
    CHECK(cli.Post("/generate", R"({"first":"bus","second":"cat","w1":1.5})", "application/json")->status == 400);
}
