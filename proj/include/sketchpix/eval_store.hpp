#pragma once
// Turing-test bookkeeping: a blinded sketch pool, participant sessions, and an
// append-only event log from which all state is rebuilt on startup.
//
// Log format, one JSON object per line:
//   {"type":"session","session":<token>,"seed":<u64>,"t":<ms>}
//   {"type":"serve","session":<token>,"sketch":<id>,"t":<ms>}
//   {"type":"tag","session":<token>,"sketch":<id>,"tag":"Human"|"Computer","t":<ms>}

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchpix::eval {

enum class Tag { Human, Computer };
std::string tag_name(Tag t);
Tag parse_tag(const std::string& s);

// Human plus the four model variants.
const std::vector<std::string>& known_sources();

struct SketchItem {
    std::string id;
    std::string source;
    std::string category;
    std::string svg;
};

struct Pool {
    std::vector<SketchItem> items;
    const SketchItem& get(const std::string& id) const;
    const SketchItem* find(const std::string& id) const;
};

// <dir>/pool.json: [{"id", "source", "category", "svg"}, ...]
Pool load_pool(const std::filesystem::path& dir);
void write_pool(const std::filesystem::path& dir, const Pool& pool);
// Ids must be unique and sources known.
void validate_pool(const Pool& pool);

struct TagRecord {
    std::string participant;
    std::string sketch_id;
    Tag tag = Tag::Computer;
    std::int64_t timestamp_ms = 0;
};

struct Proportion {
    std::size_t human = 0;
    std::size_t total = 0;
    double value() const { return total ? double(human) / double(total) : 0.0; }
};

struct TuringStats {
    std::size_t participants_total = 0;
    std::size_t participants_retained = 0;
    std::map<std::string, Proportion> per_source;
    std::map<std::pair<std::string, std::string>, Proportion> per_source_category;
    std::map<std::string, Proportion> per_sketch;
};

// Drops participants whose Human fraction is > 0.9 or < 0.1; 0.9 and 0.1
// themselves are kept.
std::set<std::string> filter_participants(const std::vector<TagRecord>& records);

// Proportions over the given records, optionally restricted to `retained`.
TuringStats compute_stats(const std::vector<TagRecord>& records, const Pool& pool,
                          const std::set<std::string>* retained = nullptr);
// filter_participants then compute_stats.
TuringStats filtered_stats(const std::vector<TagRecord>& records, const Pool& pool);

class EvalError : public std::runtime_error {
public:
    enum class Kind { UnknownSession, UnknownSketch, NotServed, AlreadyTagged, NotComplete };
    EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct SessionInfo {
    std::string token;
    std::size_t served = 0;
    std::size_t tagged = 0;
    std::size_t total = 0;
    std::optional<std::string> pending;  // served, not yet tagged
    bool complete() const { return tagged == total; }
};

struct NextSketch {
    bool exhausted = false;
    std::string id;  // blinded: no source
    std::string svg;
    std::size_t position = 0;  // 1-based index of this sketch in the session
    std::size_t total = 0;
};

class EvalStore {
public:
    // Replays `log_path` if it exists. A torn final line (crash mid-append) is
    // dropped; damage anywhere else is an error.
    EvalStore(Pool pool, std::filesystem::path log_path);
    ~EvalStore();
    EvalStore(const EvalStore&) = delete;
    EvalStore& operator=(const EvalStore&) = delete;

    std::string create_session(std::optional<std::uint64_t> seed = std::nullopt);
    SessionInfo session(const std::string& token) const;

    // Returns the pending sketch if there is one, otherwise draws uniformly
    // from this session's unserved sketches. The draw is seeded by
    // (session seed, serve count), so it survives restarts.
    NextSketch next_sketch(const std::string& token);

    // Durable (fsync'd) before returning.
    void record_tag(const std::string& token, const std::string& sketch_id, Tag tag);

    std::vector<TagRecord> records() const;
    std::vector<TagRecord> session_records(const std::string& token) const;  // complete sessions only
    // Counters maintained as tags arrive, unfiltered, per source.
    std::map<std::string, Proportion> live_source_counts() const;

    const Pool& pool() const { return pool_; }
    std::size_t session_count() const;

private:
    struct Session {
        std::uint64_t seed = 0;
        std::vector<std::string> served;
        std::set<std::string> served_set;
        std::set<std::string> tagged;
        std::optional<std::string> pending;
    };

    void replay();
    void append(const std::string& line);
    std::string draw(const Session& s) const;
    Session& get(const std::string& token);
    const Session& get(const std::string& token) const;
    void apply_tag(Session& s, const TagRecord& r);

    Pool pool_;
    std::map<std::string, std::size_t> index_;
    std::filesystem::path log_path_;
    int fd_ = -1;
    mutable std::shared_mutex mu_;
    std::map<std::string, Session> sessions_;
    std::vector<TagRecord> records_;
    std::map<std::string, Proportion> live_;
};

}  // namespace sketchpix::eval
