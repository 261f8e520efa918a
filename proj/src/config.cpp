#include "sketchpix/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sketchpix {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <class T>
T number(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T out{};
    if (!(is >> out) || !(is >> std::ws).eof())
        throw ConfigError("config key '" + key + "': '" + v + "' is not a valid number");
    return out;
}

std::size_t positive(const std::string& key, const std::string& v) {
    const auto n = number<long long>(key, v);
    if (n <= 0) throw ConfigError("config key '" + key + "' must be positive");
    return static_cast<std::size_t>(n);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');)
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
}

}  // namespace

double RunConfig::learning_rate_at(std::uint64_t step) const {
    return (learning_rate - min_learning_rate) * std::pow(lr_decay, double(step)) + min_learning_rate;
}

double RunConfig::kl_weight_at(std::uint64_t step) const {
    return objective(model.variant) == Objective::WithKl ? kl.weight(step) : 0.0;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"variant", [&](auto&, auto& v) { c.model.variant = parse_variant(v); }},
        {"categories", [&](auto&, auto& v) { c.categories = split_list(v); }},
        {"dataset", [&](auto&, auto& v) { c.dataset = v; }},
        {"output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
        {"latent_dim", [&](auto& k, auto& v) { c.model.encoder.latent_dim = positive(k, v); }},
        {"conv_stack", [&](auto&, auto& v) { c.model.encoder.conv = parse_conv_stack(v); }},
        {"conv_padding",
         [&](auto& k, auto& v) {
             if (v != "same" && v != "valid") throw ConfigError(k + " must be same or valid");
             c.model.encoder.padding = v == "same" ? Padding::Same : Padding::Valid;
         }},
        {"brnn_hidden", [&](auto& k, auto& v) { c.model.encoder.brnn_hidden = positive(k, v); }},
        {"dec_hidden", [&](auto& k, auto& v) { c.model.decoder.hidden = positive(k, v); }},
        {"mixtures", [&](auto& k, auto& v) { c.model.decoder.mixtures = positive(k, v); }},
        {"max_seq_len", [&](auto& k, auto& v) { c.model.decoder.max_seq_len = positive(k, v); }},
        {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = number<double>(k, v); }},
        {"lr_decay", [&](auto& k, auto& v) { c.lr_decay = number<double>(k, v); }},
        {"min_learning_rate", [&](auto& k, auto& v) { c.min_learning_rate = number<double>(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { c.batch_size = positive(k, v); }},
        {"steps", [&](auto& k, auto& v) { c.steps = number<std::uint64_t>(k, v); }},
        {"seed", [&](auto& k, auto& v) { c.seed = number<std::uint64_t>(k, v); }},
        {"clip", [&](auto& k, auto& v) { c.clip = number<double>(k, v); }},
        {"kl_start", [&](auto& k, auto& v) { c.kl.start = number<double>(k, v); }},
        {"kl_decay", [&](auto& k, auto& v) { c.kl.decay = number<double>(k, v); }},
        {"checkpoint_every", [&](auto& k, auto& v) { c.checkpoint_every = number<std::uint64_t>(k, v); }},
        {"validate_every", [&](auto& k, auto& v) { c.validate_every = number<std::uint64_t>(k, v); }},
        {"valid_size", [&](auto& k, auto& v) { c.valid_size = number<std::size_t>(k, v); }},
    };
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second(key, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    c.model.encoder.kind = encoder_kind(c.model.variant);
    if (c.categories.empty()) throw ConfigError("config needs at least one category");
    if (!(c.clip > 0)) throw ConfigError("clip threshold must be positive");
    if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_text(const RunConfig& c) {
    std::ostringstream os;
    os << "variant = " << variant_name(c.model.variant) << "\n"
       << "categories = " << join(c.categories) << "\n"
       << "dataset = " << c.dataset.string() << "\n"
       << "output_dir = " << c.output_dir.string() << "\n"
       << "latent_dim = " << c.model.encoder.latent_dim << "\n"
       << "conv_stack = " << conv_stack_str(c.model.encoder.conv) << "\n"
       << "conv_padding = " << (c.model.encoder.padding == Padding::Same ? "same" : "valid") << "\n"
       << "brnn_hidden = " << c.model.encoder.brnn_hidden << "\n"
       << "dec_hidden = " << c.model.decoder.hidden << "\n"
       << "mixtures = " << c.model.decoder.mixtures << "\n"
       << "max_seq_len = " << c.model.decoder.max_seq_len << "\n"
       << "learning_rate = " << fmt(c.learning_rate) << "\n"
       << "lr_decay = " << fmt(c.lr_decay) << "\n"
       << "min_learning_rate = " << fmt(c.min_learning_rate) << "\n"
       << "batch_size = " << c.batch_size << "\n"
       << "steps = " << c.steps << "\n"
       << "seed = " << c.seed << "\n"
       << "clip = " << fmt(c.clip) << "\n"
       << "kl_start = " << fmt(c.kl.start) << "\n"
       << "kl_decay = " << fmt(c.kl.decay) << "\n"
       << "checkpoint_every = " << c.checkpoint_every << "\n"
       << "validate_every = " << c.validate_every << "\n"
       << "valid_size = " << c.valid_size << "\n";
    return os.str();
}

std::map<std::string, std::string> effective_settings(const RunConfig& cfg) {
    std::map<std::string, std::string> out;
    std::istringstream in(run_config_text(cfg));
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    out.erase("variant");
    out["encoder"] = encoder_kind(cfg.model.variant) == EncoderKind::Cnn ? "cnn" : "brnn";
    out["objective"] = objective(cfg.model.variant) == Objective::WithKl ? "with_kl" : "without_kl";
    return out;
}

}  // namespace sketchpix
