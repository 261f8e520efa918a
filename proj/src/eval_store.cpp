#include "sketchpix/eval_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sketchpix/model.hpp"

namespace sketchpix::eval {
namespace {

using nlohmann::json;

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string canonical_source(const std::string& s) {
    if (s == "Human" || s == "human") return "Human";
    return variant_name(parse_variant(s));
}

std::string random_token() {
    std::random_device rd;
    char buf[33];
    std::uint64_t hi = (std::uint64_t(rd()) << 32) | rd();
    std::uint64_t lo = (std::uint64_t(rd()) << 32) | rd();
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return buf;
}

std::uint64_t random_seed() {
    std::random_device rd;
    return (std::uint64_t(rd()) << 32) | rd();
}

void write_all(int fd, const std::string& s) {
    const char* p = s.data();
    std::size_t left = s.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("event log write failed: ") + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

}  // namespace

std::string tag_name(Tag t) { return t == Tag::Human ? "Human" : "Computer"; }

Tag parse_tag(const std::string& s) {
    if (s == "Human" || s == "human") return Tag::Human;
    if (s == "Computer" || s == "computer") return Tag::Computer;
    throw std::invalid_argument("tag must be Human or Computer, got '" + s + "'");
}

const std::vector<std::string>& known_sources() {
    static const std::vector<std::string> s = [] {
        std::vector<std::string> out{"Human"};
        for (Variant v : {Variant::CnnNoKl, Variant::CnnKl, Variant::RnnNoKl, Variant::RnnKl})
            out.push_back(variant_name(v));
        return out;
    }();
    return s;
}

const SketchItem* Pool::find(const std::string& id) const {
    for (const auto& it : items)
        if (it.id == id) return &it;
    return nullptr;
}

const SketchItem& Pool::get(const std::string& id) const {
    if (const auto* p = find(id)) return *p;
    throw std::out_of_range("no sketch '" + id + "' in the pool");
}

void validate_pool(const Pool& pool) {
    if (pool.items.empty()) throw std::invalid_argument("sketch pool is empty");
    std::set<std::string> ids;
    for (const auto& it : pool.items) {
        if (it.id.empty()) throw std::invalid_argument("pool item with empty id");
        if (!ids.insert(it.id).second) throw std::invalid_argument("duplicate pool id '" + it.id + "'");
        const auto& ks = known_sources();
        if (std::find(ks.begin(), ks.end(), it.source) == ks.end())
            throw std::invalid_argument("unknown source '" + it.source + "' for '" + it.id + "'");
    }
}

Pool load_pool(const std::filesystem::path& dir) {
    const auto path = std::filesystem::is_directory(dir) ? dir / "pool.json" : dir;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pool " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    Pool pool;
    for (const auto& e : j) {
        SketchItem it;
        it.id = e.at("id").get<std::string>();
        it.source = canonical_source(e.at("source").get<std::string>());
        it.category = e.at("category").get<std::string>();
        it.svg = e.at("svg").get<std::string>();
        pool.items.push_back(std::move(it));
    }
    validate_pool(pool);
    return pool;
}

void write_pool(const std::filesystem::path& dir, const Pool& pool) {
    validate_pool(pool);
    std::filesystem::create_directories(dir);
    json j = json::array();
    for (const auto& it : pool.items)
        j.push_back({{"id", it.id}, {"source", it.source}, {"category", it.category}, {"svg", it.svg}});
    std::ofstream out(dir / "pool.json");
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("cannot write " + (dir / "pool.json").string());
}

std::set<std::string> filter_participants(const std::vector<TagRecord>& records) {
    std::map<std::string, Proportion> by;
    for (const auto& r : records) {
        auto& p = by[r.participant];
        ++p.total;
        if (r.tag == Tag::Human) ++p.human;
    }
    std::set<std::string> keep;
    // Integer comparisons so 9/10 sits exactly on the boundary.
    for (const auto& [who, p] : by)
        if (10 * p.human <= 9 * p.total && 10 * p.human >= p.total) keep.insert(who);
    return keep;
}

TuringStats compute_stats(const std::vector<TagRecord>& records, const Pool& pool,
                          const std::set<std::string>* retained) {
    TuringStats s;
    std::set<std::string> everyone;
    std::set<std::string> counted;
    std::map<std::string, const SketchItem*> lookup;
    for (const auto& it : pool.items) lookup[it.id] = &it;
    for (const auto& r : records) {
        everyone.insert(r.participant);
        if (retained && !retained->count(r.participant)) continue;
        counted.insert(r.participant);
        auto f = lookup.find(r.sketch_id);
        if (f == lookup.end()) throw std::out_of_range("tag for unknown sketch '" + r.sketch_id + "'");
        const SketchItem& it = *f->second;
        const std::size_t h = r.tag == Tag::Human ? 1 : 0;
        for (Proportion* p : {&s.per_source[it.source], &s.per_source_category[{it.source, it.category}],
                              &s.per_sketch[it.id]}) {
            ++p->total;
            p->human += h;
        }
    }
    s.participants_total = everyone.size();
    s.participants_retained = counted.size();
    return s;
}

TuringStats filtered_stats(const std::vector<TagRecord>& records, const Pool& pool) {
    const auto keep = filter_participants(records);
    auto s = compute_stats(records, pool, &keep);
    return s;
}

EvalStore::EvalStore(Pool pool, std::filesystem::path log_path)
    : pool_(std::move(pool)), log_path_(std::move(log_path)) {
    validate_pool(pool_);
    for (std::size_t i = 0; i < pool_.items.size(); ++i) index_[pool_.items[i].id] = i;
    if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
    replay();
    fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0)
        throw std::runtime_error("cannot open event log " + log_path_.string() + ": " + std::strerror(errno));
}

EvalStore::~EvalStore() {
    if (fd_ >= 0) ::close(fd_);
}

void EvalStore::replay() {
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) return;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::size_t pos = 0, line_no = 0, good_end = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        const bool last = nl == std::string::npos;
        const std::string line = text.substr(pos, last ? std::string::npos : nl - pos);
        json e;
        try {
            e = json::parse(line);
        } catch (const json::exception&) {
            // Only an unterminated last line can be a torn write.
            if (last) break;
            throw std::runtime_error(log_path_.string() + ":" + std::to_string(line_no) +
                                     ": corrupt event log entry");
        }
        const std::string type = e.at("type");
        const std::string token = e.at("session");
        if (type == "session") {
            sessions_[token].seed = e.at("seed").get<std::uint64_t>();
        } else if (type == "serve") {
            Session& s = get(token);
            const std::string id = e.at("sketch");
            if (!index_.count(id)) throw std::runtime_error("event log serves unknown sketch '" + id + "'");
            s.served.push_back(id);
            s.served_set.insert(id);
            s.pending = id;
        } else if (type == "tag") {
            TagRecord r{token, e.at("sketch").get<std::string>(), parse_tag(e.at("tag")),
                        e.value("t", std::int64_t{0})};
            apply_tag(get(token), r);
        } else {
            throw std::runtime_error("unknown event type '" + type + "'");
        }
        if (last) {
            good_end = text.size();
            break;
        }
        pos = nl + 1;
        good_end = pos;
    }
    if (good_end < text.size()) std::filesystem::resize_file(log_path_, good_end);
    else if (!text.empty() && text.back() != '\n') {
        // Complete final record lacking its newline: terminate it so the next append starts clean.
        std::ofstream(log_path_, std::ios::app) << '\n';
    }
}

void EvalStore::apply_tag(Session& s, const TagRecord& r) {
    if (!s.served_set.count(r.sketch_id))
        throw EvalError(EvalError::Kind::NotServed, "sketch '" + r.sketch_id + "' was not served to this session");
    if (s.tagged.count(r.sketch_id))
        throw EvalError(EvalError::Kind::AlreadyTagged, "sketch '" + r.sketch_id + "' is already tagged");
    s.tagged.insert(r.sketch_id);
    if (s.pending == r.sketch_id) s.pending.reset();
    records_.push_back(r);
    auto& p = live_[pool_.items[index_.at(r.sketch_id)].source];
    ++p.total;
    if (r.tag == Tag::Human) ++p.human;
}

void EvalStore::append(const std::string& line) {
    write_all(fd_, line + "\n");
    if (::fsync(fd_) != 0)
        throw std::runtime_error(std::string("event log fsync failed: ") + std::strerror(errno));
}

EvalStore::Session& EvalStore::get(const std::string& token) {
    auto it = sessions_.find(token);
    if (it == sessions_.end()) throw EvalError(EvalError::Kind::UnknownSession, "unknown session");
    return it->second;
}

const EvalStore::Session& EvalStore::get(const std::string& token) const {
    auto it = sessions_.find(token);
    if (it == sessions_.end()) throw EvalError(EvalError::Kind::UnknownSession, "unknown session");
    return it->second;
}

std::string EvalStore::create_session(std::optional<std::uint64_t> seed) {
    std::unique_lock lock(mu_);
    std::string token;
    do token = random_token();
    while (sessions_.count(token));
    const std::uint64_t sd = seed ? *seed : random_seed();
    append(json{{"type", "session"}, {"session", token}, {"seed", sd}, {"t", now_ms()}}.dump());
    sessions_[token].seed = sd;
    return token;
}

SessionInfo EvalStore::session(const std::string& token) const {
    std::shared_lock lock(mu_);
    const Session& s = get(token);
    return {token, s.served.size(), s.tagged.size(), pool_.items.size(), s.pending};
}

std::string EvalStore::draw(const Session& s) const {
    std::vector<const std::string*> open;
    for (const auto& it : pool_.items)
        if (!s.served_set.count(it.id)) open.push_back(&it.id);
    std::seed_seq sq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                     static_cast<std::uint32_t>(s.served.size())};
    std::mt19937_64 rng(sq);
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return *open[pick(rng)];
}

NextSketch EvalStore::next_sketch(const std::string& token) {
    std::unique_lock lock(mu_);
    Session& s = get(token);
    NextSketch out;
    out.total = pool_.items.size();
    if (!s.pending) {
        if (s.served.size() == pool_.items.size()) {
            out.exhausted = true;
            out.position = s.served.size();
            return out;
        }
        const std::string id = draw(s);
        append(json{{"type", "serve"}, {"session", token}, {"sketch", id}, {"t", now_ms()}}.dump());
        s.served.push_back(id);
        s.served_set.insert(id);
        s.pending = id;
    }
    const SketchItem& it = pool_.items[index_.at(*s.pending)];
    out.id = it.id;
    out.svg = it.svg;
    out.position = s.served.size();
    return out;
}

void EvalStore::record_tag(const std::string& token, const std::string& sketch_id, Tag tag) {
    std::unique_lock lock(mu_);
    Session& s = get(token);
    if (!index_.count(sketch_id)) throw EvalError(EvalError::Kind::UnknownSketch, "unknown sketch '" + sketch_id + "'");
    if (!s.served_set.count(sketch_id))
        throw EvalError(EvalError::Kind::NotServed, "sketch '" + sketch_id + "' was not served to this session");
    if (s.tagged.count(sketch_id))
        throw EvalError(EvalError::Kind::AlreadyTagged, "sketch '" + sketch_id + "' is already tagged");
    TagRecord r{token, sketch_id, tag, now_ms()};
    append(json{{"type", "tag"}, {"session", token}, {"sketch", sketch_id}, {"tag", tag_name(tag)},
                {"t", r.timestamp_ms}}
               .dump());
    apply_tag(s, r);
}

std::vector<TagRecord> EvalStore::records() const {
    std::shared_lock lock(mu_);
    return records_;
}

std::vector<TagRecord> EvalStore::session_records(const std::string& token) const {
    std::shared_lock lock(mu_);
    const Session& s = get(token);
    if (s.tagged.size() != pool_.items.size())
        throw EvalError(EvalError::Kind::NotComplete, "results are available once every sketch is tagged");
    std::vector<TagRecord> out;
    for (const auto& r : records_)
        if (r.participant == token) out.push_back(r);
    return out;
}

std::map<std::string, Proportion> EvalStore::live_source_counts() const {
    std::shared_lock lock(mu_);
    return live_;
}

std::size_t EvalStore::session_count() const {
    std::shared_lock lock(mu_);
    return sessions_.size();
}

}  // namespace sketchpix::eval
