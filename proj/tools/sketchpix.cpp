// Command-line front end: data preparation, training, sampling, latent tools
// and the Turing-test server.

#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sketchpix/dataset.hpp"
#include "sketchpix/eval_server.hpp"
#include "sketchpix/kernels.hpp"
#include "sketchpix/latent.hpp"
#include "sketchpix/synth.hpp"
#include "sketchpix/trainer.hpp"

using namespace sketchpix;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

// Stroke-5 JSON, or line `index` of a QuickDraw ndjson file.
SketchSequence read_sketch(const fs::path& path, std::size_t index) {
    if (path.extension() == ".ndjson") {
        std::ifstream in(path);
        std::string line;
        for (std::size_t i = 0; std::getline(in, line); ++i)
            if (i == index) return parse_quickdraw_line(line, i + 1);
        throw std::runtime_error(path.string() + " has no line " + std::to_string(index));
    }
    return sequence_from_json(slurp(path));
}

// The index-th test sketch of each category, in raw units.
std::map<std::string, SketchSequence> dataset_exemplars(const DatasetSplit& data, std::size_t index) {
    std::map<std::string, SketchSequence> out;
    std::map<std::string, std::size_t> seen;
    for (const auto& s : data.test)
        if (seen[s.category]++ == index) out[s.category] = denormalize(s, data.scale);
    return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_synth(const std::vector<std::string>& cats, std::size_t n, std::uint64_t seed, const fs::path& out) {
    fs::create_directories(out);
    for (const auto& c : cats) {
        std::mt19937_64 rng(std::hash<std::string>{}(c) ^ seed);
        std::ofstream f(out / (c + ".ndjson"));
        for (std::size_t i = 0; i < n; ++i) f << synth::quickdraw_line(c, rng) << "\n";
        std::cout << "wrote " << n << " " << c << " sketches to " << (out / (c + ".ndjson")).string() << "\n";
    }
    return 0;
}

int cmd_prepare(const std::vector<fs::path>& inputs, const fs::path& out, SplitSizes sizes,
                std::size_t max_len, std::uint64_t seed) {
    std::map<std::string, std::vector<SketchSequence>> by;
    for (const auto& in : inputs)
        for (auto& s : parse_quickdraw_file(in)) by[s.category].push_back(std::move(s));
    DatasetSplit data = normalize(make_split(by, sizes, max_len, seed));
    write_dataset(out, data);
    json counts;
    for (const auto& [c, n] : data.category_counts()) counts[c] = {{"train", n[0]}, {"valid", n[1]}, {"test", n[2]}};
    print_json({{"dataset", out.string()}, {"scale", data.scale}, {"max_seq_len", data.max_seq_len}, {"counts", counts}});
    return 0;
}

int cmd_train(const fs::path& config, bool resume, bool quiet) {
    RunConfig cfg = load_run_config(config);
    const DatasetSplit data = read_dataset(cfg.dataset);
    std::unique_ptr<Trainer> trainer;
    const fs::path ckpt = cfg.output_dir / "checkpoint.skpx";
    if (resume && fs::exists(ckpt)) {
        trainer = Trainer::resume(ckpt, data, cfg);
        std::cerr << "resuming at step " << trainer->current_step() << "\n";
    } else {
        trainer = std::make_unique<Trainer>(cfg, data);
    }
    std::cerr << "isa " << kernels::isa_name(kernels::active().isa) << ", " << trainer->model().params().scalar_count()
              << " parameters, " << trainer->train_set().sequences.size() << " training sketches\n";
    try {
        trainer->run(quiet ? nullptr : &std::cerr);
    } catch (const TrainingAborted& e) {
        std::cerr << "training aborted at step " << e.step() << ": " << e.what() << "\n"
                  << "last good checkpoint: " << e.last_good_checkpoint().string() << "\n";
        return 2;
    }
    std::cout << trainer->checkpoint_path().string() << "\n";
    return 0;
}

struct SampleArgs {
    fs::path checkpoint, input, out = "samples";
    std::size_t index = 0, n = 1, max_points = 250;
    double temperature = 0.25;
    std::uint64_t seed = 0;
    bool stochastic = false;
};

int cmd_sample(const SampleArgs& a) {
    const Generator gen = Generator::load(a.checkpoint);
    EncodeOptions eo{a.stochastic, a.seed};
    LatentVector z;
    if (a.input.extension() == ".pgm") z = gen.encode(read_pgm(a.input), eo);
    else z = gen.encode(read_sketch(a.input, a.index), eo);
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < a.n; ++i) {
        const SketchSequence s = gen.generate(z, {a.temperature, a.max_points, a.seed + i});
        const std::string stem = "sample_" + std::to_string(i);
        spit(a.out / (stem + ".svg"), to_svg(s));
        spit(a.out / (stem + ".json"), sequence_to_json(s));
    }
    std::cout << "wrote " << a.n << " samples to " << a.out.string() << "\n";
    return 0;
}

struct InterpArgs {
    fs::path checkpoint, dataset, exemplars, out = "interpolation";
    std::string pairs;
    std::size_t index = 0, max_points = 250;
    double step = 0.1, temperature = 0.25;
    std::uint64_t seed = 0;
};

int cmd_interpolate(const InterpArgs& a) {
    const Generator gen = Generator::load(a.checkpoint);
    std::map<std::string, SketchSequence> ex;
    if (!a.exemplars.empty()) {
        for (const auto& [c, v] : json::parse(slurp(a.exemplars)).items()) ex[c] = sequence_from_json(v.dump());
    } else {
        ex = dataset_exemplars(read_dataset(a.dataset), a.index);
    }
    std::vector<CategoryPair> pairs;
    if (a.pairs.empty()) pairs = default_interpolation_pairs();
    else
        for (const auto& p : split_list(a.pairs)) pairs.push_back(parse_category_pair(p));
    const InterpolationGrid g = interpolation_grid(gen, ex, pairs, a.step, {a.temperature, a.max_points, a.seed});
    fs::create_directories(a.out);
    spit(a.out / "grid.svg", to_svg_grid(g.cells));
    json j{{"weights", g.weights}, {"rows", json::array()}};
    for (std::size_t r = 0; r < g.pairs.size(); ++r) {
        json row{{"z1", g.pairs[r].first}, {"z2", g.pairs[r].second}, {"sketches", json::array()}};
        for (const auto& s : g.cells[r]) row["sketches"].push_back(json::parse(sequence_to_json(s)));
        j["rows"].push_back(row);
    }
    spit(a.out / "grid.json", j.dump());
    std::cout << "wrote " << g.sketch_count() << " sketches (" << g.pairs.size() << " pairs x " << g.weights.size()
              << " weights) to " << a.out.string() << "\n";
    return 0;
}

int cmd_export(const fs::path& ckpt, const fs::path& dataset, const std::string& split, const std::string& cats,
               std::size_t n, std::uint64_t seed, const fs::path& out) {
    const Generator gen = Generator::load(ckpt);
    const DatasetSplit data = read_dataset(dataset);
    const std::vector<SketchSequence>& src =
        split == "train" ? data.train : split == "valid" ? data.valid : split == "test" ? data.test
                                                                                          : throw CLI::ValidationError("split must be train, valid or test");
    std::vector<SketchSequence> seqs;
    for (const auto& s : src) seqs.push_back(scale_offsets(s, data.scale / gen.data_scale()));
    const auto categories = cats.empty() ? data.categories : split_list(cats);
    const LatentExport e = export_latents(gen.model(), seqs, categories, n, seed);
    write_latents(out, e);
    std::cout << "wrote " << e.rows.size() << " latents of dim " << e.dim << " to " << out.string() << "\n";
    return 0;
}

int cmd_project(const fs::path& latents, const fs::path& out) {
    const LatentExport e = read_latents(latents);
    const Projection p = project_2d(e);
    spit(out, projection_to_csv(p));
    json j{{"points", p.points.size()},
           {"explained", {p.variances[0] / p.total_variance, p.variances[1] / p.total_variance}}};
    std::set<std::string> distinct(p.categories.begin(), p.categories.end());
    if (distinct.size() >= 2) j["separation"] = separation_metric(e);
    print_json(j);
    return 0;
}

struct PoolArgs {
    fs::path dataset, out = "pool";
    std::vector<std::string> checkpoints;  // VARIANT=path
    std::string categories = "cat,pig,rabbit";
    std::size_t per_category = 10, max_points = 250;
    double temperature = 0.25;
    std::uint64_t seed = 1;
};

int cmd_build_pool(const PoolArgs& a) {
    const DatasetSplit data = read_dataset(a.dataset);
    std::vector<std::pair<std::string, Generator>> models;
    for (const auto& spec : a.checkpoints) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--checkpoint expects VARIANT=path");
        models.emplace_back(variant_name(parse_variant(spec.substr(0, eq))), Generator::load(spec.substr(eq + 1)));
    }
    std::mt19937_64 rng(a.seed);
    eval::Pool pool;
    for (const auto& cat : split_list(a.categories)) {
        std::vector<const SketchSequence*> cands;
        for (const auto& s : data.test)
            if (s.category == cat) cands.push_back(&s);
        if (cands.size() < a.per_category) throw std::runtime_error("not enough test sketches for " + cat);
        std::shuffle(cands.begin(), cands.end(), rng);
        for (std::size_t i = 0; i < a.per_category; ++i) {
            const SketchSequence input = denormalize(*cands[i], data.scale);
            pool.items.push_back({"", "Human", cat, to_svg(input)});
            for (const auto& [name, gen] : models) {
                const SketchSequence s = gen.generate(gen.encode(input), {a.temperature, a.max_points, a.seed + i});
                pool.items.push_back({"", name, cat, to_svg(s)});
            }
        }
    }
    // Ids follow the shuffled order, so they carry no hint of source.
    for (std::size_t i = 0; i < pool.items.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "s%03zu", i);
        pool.items[i].id = buf;
    }
    eval::write_pool(a.out, pool);
    std::cout << "wrote " << pool.items.size() << " items to " << (a.out / "pool.json").string() << "\n";
    return 0;
}

eval::EvalServer* g_server = nullptr;

struct ServeArgs {
    fs::path pool = "pool", log, ui, checkpoint, dataset;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t index = 0, max_points = 250;
    double temperature = 0.25;
};

int cmd_serve(const ServeArgs& a) {
    eval::EvalStore store(eval::load_pool(a.pool), a.log.empty() ? a.pool / "events.jsonl" : a.log);
    std::optional<Generator> gen;
    eval::GenerationBackend backend;
    if (!a.checkpoint.empty()) {
        if (a.dataset.empty()) throw CLI::ValidationError("--checkpoint needs --dataset for exemplars");
        gen.emplace(Generator::load(a.checkpoint));
        backend.generator = &*gen;
        backend.exemplars = dataset_exemplars(read_dataset(a.dataset), a.index);
        backend.sample = {a.temperature, a.max_points, 0};
    }
    eval::ServerOptions opts{a.host, a.port, std::nullopt};
    if (!a.ui.empty()) opts.ui_dir = a.ui;
    eval::EvalServer server(store, opts, gen ? &backend : nullptr);
    const int port = server.bind();
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    std::cerr << "serving " << store.pool().items.size() << " sketches on http://" << a.host << ":" << port
              << (gen ? " with generation" : "") << "\n";
    server.run();
    g_server = nullptr;
    return 0;
}

int cmd_rasterize(const fs::path& input, std::size_t index, bool filtered, const fs::path& out) {
    RasterBitmap img = rasterize(read_sketch(input, index));
    if (filtered) img = highpass_filter(img);
    spit(out, to_pgm(img));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    retain_freed_memory();
    CLI::App app{"Sketch generation from pixels or strokes"};
    app.require_subcommand(1);

    std::vector<std::string> synth_cats = synth::categories();
    std::size_t synth_n = 1000;
    std::uint64_t synth_seed = 1;
    fs::path synth_out = "raw";
    auto* synth_cmd = app.add_subcommand("synth", "Write procedural QuickDraw-style ndjson files");
    synth_cmd->add_option("--categories", synth_cats)->delimiter(',');
    synth_cmd->add_option("--n", synth_n, "Sketches per category");
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--out", synth_out, "Output directory");

    std::vector<fs::path> prep_in;
    fs::path prep_out = "data.skds";
    SplitSizes sizes{70000, 2500, 2500};
    std::size_t prep_len = 250;
    std::uint64_t prep_seed = 1;
    auto* prep = app.add_subcommand("prepare", "Split and normalize QuickDraw ndjson into a dataset");
    prep->add_option("inputs", prep_in, "ndjson files")->required()->check(CLI::ExistingFile);
    prep->add_option("--out", prep_out);
    prep->add_option("--train", sizes.train, "Per category");
    prep->add_option("--valid", sizes.valid);
    prep->add_option("--test", sizes.test);
    prep->add_option("--max-seq-len", prep_len);
    prep->add_option("--seed", prep_seed);

    fs::path train_cfg;
    bool train_resume = false, train_quiet = false;
    auto* train = app.add_subcommand("train", "Train one variant from a config file");
    train->add_option("--config", train_cfg)->required()->check(CLI::ExistingFile);
    train->add_flag("--resume", train_resume, "Continue from output_dir/checkpoint.skpx");
    train->add_flag("--quiet", train_quiet);

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "Generate sketches conditioned on an input");
    sample->add_option("--checkpoint", sa.checkpoint)->required()->check(CLI::ExistingFile);
    sample->add_option("--input", sa.input, "Stroke-5 .json, QuickDraw .ndjson or .pgm")->required()->check(CLI::ExistingFile);
    sample->add_option("--index", sa.index, "Line of an ndjson input");
    sample->add_option("--temperature", sa.temperature)->check(CLI::PositiveNumber);
    sample->add_option("--n", sa.n);
    sample->add_option("--seed", sa.seed);
    sample->add_option("--max-points", sa.max_points);
    sample->add_flag("--stochastic", sa.stochastic, "Sample z instead of using the posterior mean");
    sample->add_option("--out", sa.out);

    InterpArgs ia;
    auto* interp = app.add_subcommand("interpolate", "Latent interpolation grid between category exemplars");
    interp->add_option("--checkpoint", ia.checkpoint)->required()->check(CLI::ExistingFile);
    interp->add_option("--dataset", ia.dataset, "Exemplars come from its test split");
    interp->add_option("--exemplars", ia.exemplars, "JSON object of category -> stroke-5 sketch");
    interp->add_option("--exemplar-index", ia.index);
    interp->add_option("--pairs", ia.pairs, "e.g. bus-cat,car-pig; default is the nine vehicle/animal pairs");
    interp->add_option("--step", ia.step);
    interp->add_option("--temperature", ia.temperature)->check(CLI::PositiveNumber);
    interp->add_option("--seed", ia.seed);
    interp->add_option("--max-points", ia.max_points);
    interp->add_option("--out", ia.out);

    fs::path ex_ckpt, ex_data, ex_out = "latents.csv";
    std::string ex_split = "test", ex_cats;
    std::size_t ex_n = 500;
    std::uint64_t ex_seed = 1;
    auto* exp = app.add_subcommand("export-latents", "Write posterior means for sampled sketches as CSV");
    exp->add_option("--checkpoint", ex_ckpt)->required()->check(CLI::ExistingFile);
    exp->add_option("--dataset", ex_data)->required()->check(CLI::ExistingFile);
    exp->add_option("--split", ex_split);
    exp->add_option("--categories", ex_cats);
    exp->add_option("--n", ex_n, "Per category");
    exp->add_option("--seed", ex_seed);
    exp->add_option("--out", ex_out);

    fs::path pr_in, pr_out = "projection.csv";
    auto* proj = app.add_subcommand("project", "2-D PCA of exported latents");
    proj->add_option("--latents", pr_in)->required()->check(CLI::ExistingFile);
    proj->add_option("--out", pr_out);

    PoolArgs pa;
    auto* pool = app.add_subcommand("build-pool", "Assemble a Turing-test sketch pool");
    pool->add_option("--dataset", pa.dataset)->required()->check(CLI::ExistingFile);
    pool->add_option("--checkpoint", pa.checkpoints, "VARIANT=path, repeatable");
    pool->add_option("--categories", pa.categories);
    pool->add_option("--per-category", pa.per_category);
    pool->add_option("--temperature", pa.temperature)->check(CLI::PositiveNumber);
    pool->add_option("--seed", pa.seed);
    pool->add_option("--max-points", pa.max_points);
    pool->add_option("--out", pa.out);

    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "Run the Turing-test HTTP service");
    serve->add_option("--pool", sv.pool, "Directory holding pool.json")->check(CLI::ExistingPath);
    serve->add_option("--port", sv.port);
    serve->add_option("--host", sv.host);
    serve->add_option("--log", sv.log, "Event log; defaults to <pool>/events.jsonl");
    serve->add_option("--ui", sv.ui, "Static UI bundle to serve at /")->check(CLI::ExistingDirectory);
    serve->add_option("--checkpoint", sv.checkpoint, "Enables /exemplars and /generate")->check(CLI::ExistingFile);
    serve->add_option("--dataset", sv.dataset)->check(CLI::ExistingFile);
    serve->add_option("--exemplar-index", sv.index);
    serve->add_option("--temperature", sv.temperature)->check(CLI::PositiveNumber);
    serve->add_option("--max-points", sv.max_points);

    fs::path ra_in, ra_out = "sketch.pgm";
    std::size_t ra_index = 0;
    bool ra_filtered = false;
    auto* rast = app.add_subcommand("rasterize", "Render a sketch to a 48x48 PGM");
    rast->add_option("--input", ra_in)->required()->check(CLI::ExistingFile);
    rast->add_option("--index", ra_index);
    rast->add_flag("--filtered", ra_filtered, "Apply the high-pass filter");
    rast->add_option("--out", ra_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) return cmd_synth(synth_cats, synth_n, synth_seed, synth_out);
        if (*prep) return cmd_prepare(prep_in, prep_out, sizes, prep_len, prep_seed);
        if (*train) return cmd_train(train_cfg, train_resume, train_quiet);
        if (*sample) return cmd_sample(sa);
        if (*interp) {
            if (ia.dataset.empty() && ia.exemplars.empty()) throw CLI::ValidationError("need --dataset or --exemplars");
            return cmd_interpolate(ia);
        }
        if (*exp) return cmd_export(ex_ckpt, ex_data, ex_split, ex_cats, ex_n, ex_seed, ex_out);
        if (*proj) return cmd_project(pr_in, pr_out);
        if (*pool) return cmd_build_pool(pa);
        if (*serve) return cmd_serve(sv);
        if (*rast) return cmd_rasterize(ra_in, ra_index, ra_filtered, ra_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
