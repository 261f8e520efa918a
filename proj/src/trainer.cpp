#include "sketchpix/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace sketchpix {

TrainingAborted::TrainingAborted(std::uint64_t step, std::filesystem::path last_good,
                                 const std::string& why)
    : std::runtime_error("training aborted at step " + std::to_string(step) + ": " + why +
                         (last_good.empty() ? std::string(" (no checkpoint written yet)")
                                            : "; last good checkpoint is " + last_good.string())),
      step_(step),
      last_good_(std::move(last_good)) {}

PreparedSet prepare_set(const std::vector<SketchSequence>& seqs, EncoderKind kind) {
    PreparedSet s{seqs, {}};
    if (kind == EncoderKind::Cnn) {
        s.views.reserve(seqs.size());
        for (const auto& q : seqs) s.views.push_back(encoder_view(q));
    }
    return s;
}

double evaluate_recon(const SketchModel& model, const PreparedSet& set, std::size_t batch_size) {
    if (set.sequences.empty()) throw std::invalid_argument("evaluate_recon: empty set");
    NoGradGuard guard;
    double total = 0.0;
    for (std::size_t i = 0; i < set.sequences.size(); i += batch_size) {
        const std::size_t end = std::min(set.sequences.size(), i + batch_size);
        const std::vector<SketchSequence> seqs(set.sequences.begin() + i, set.sequences.begin() + end);
        std::vector<RasterBitmap> views;
        if (!set.views.empty()) views.assign(set.views.begin() + i, set.views.begin() + end);
        const ModelBatch batch = model.make_batch(seqs, set.views.empty() ? nullptr : &views);
        const Tensor eps(Shape{seqs.size(), model.config().latent_dim()}, 0.0);
        total += model.loss(batch, eps, 0.0).values.recon * double(seqs.size());
    }
    return total / double(set.sequences.size());
}

std::map<std::string, std::string> run_config_to_meta(const RunConfig& cfg) {
    std::map<std::string, std::string> meta;
    std::istringstream in(run_config_text(cfg));
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        meta["run." + line.substr(0, eq)] = line.substr(eq + 3);
    }
    return meta;
}

RunConfig run_config_from_meta(const std::map<std::string, std::string>& meta) {
    std::string text;
    for (const auto& [k, v] : meta)
        if (k.rfind("run.", 0) == 0) text += k.substr(4) + " = " + v + "\n";
    if (text.empty()) throw ArchiveError("checkpoint has no run configuration");
    return parse_run_config(text);
}

namespace {

std::mt19937_64 step_rng(std::uint64_t seed, std::uint64_t step) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(step),
                      std::uint32_t(step >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace

Trainer::Trainer(RunConfig cfg, const DatasetSplit& data) : cfg_(std::move(cfg)) {
    for (const auto& c : cfg_.categories)
        if (!data.has_category(c))
            throw std::invalid_argument("config category '" + c + "' is not in the dataset");
    const DatasetSplit d = select_categories(data, cfg_.categories);
    if (d.train.empty()) throw std::invalid_argument("training split is empty");
    for (const auto& s : d.train)
        if (s.length() > cfg_.model.decoder.max_seq_len)
            throw std::invalid_argument("training sketch longer than max_seq_len " +
                                        std::to_string(cfg_.model.decoder.max_seq_len));
    scale_ = d.scale;
    const EncoderKind kind = encoder_kind(cfg_.model.variant);
    train_ = prepare_set(d.train, kind);
    std::vector<SketchSequence> valid = d.valid;
    if (cfg_.valid_size > 0 && valid.size() > cfg_.valid_size) valid.resize(cfg_.valid_size);
    valid_ = prepare_set(valid, kind);
    model_ = std::make_unique<SketchModel>(cfg_.model, cfg_.seed);
    adam_ = std::make_unique<Adam>(model_->params());
}

std::unique_ptr<Trainer> Trainer::resume(const std::filesystem::path& checkpoint,
                                         const DatasetSplit& data, std::optional<RunConfig> cfg) {
    const TensorArchive ar = read_archive(checkpoint);
    RunConfig stored = run_config_from_meta(ar.meta);
    if (cfg && !(cfg->model == stored.model))
        throw std::invalid_argument("resume: model settings differ from the checkpoint");
    auto t = std::make_unique<Trainer>(cfg ? *cfg : stored, data);
    t->load_state(ar);
    return t;
}

void Trainer::load_state(const TensorArchive& ar) {
    model_->params().load_from(ar);
    adam_->load_from(ar);
    step_ = std::stoull(ar.meta.at("train.step"));
}

StepRecord Trainer::step() {
    const std::size_t N = train_.sequences.size();
    const std::size_t B = std::min(cfg_.batch_size, N);
    auto rng = step_rng(cfg_.seed, step_);

    // Partial Fisher-Yates: B distinct training indices.
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < B; ++i)
        std::swap(idx[i], idx[i + std::uniform_int_distribution<std::size_t>(0, N - 1 - i)(rng)]);
    std::vector<SketchSequence> seqs;
    std::vector<RasterBitmap> views;
    for (std::size_t i = 0; i < B; ++i) {
        seqs.push_back(train_.sequences[idx[i]]);
        if (!train_.views.empty()) views.push_back(train_.views[idx[i]]);
    }
    const ModelBatch batch = model_->make_batch(seqs, views.empty() ? nullptr : &views);
    const Tensor eps = standard_normal({B, cfg_.model.latent_dim()}, rng);

    StepRecord rec;
    rec.step = step_;
    rec.learning_rate = cfg_.learning_rate_at(step_);
    model_->params().zero_grad();
    try {
        const LossTerms terms = model_->loss(batch, eps, cfg_.kl_weight_at(step_));
        rec.loss = terms.values;
        backward(terms.total);
    } catch (const NonFiniteError& e) {
        throw TrainingAborted(step_, checkpoint_path(), e.what());
    } catch (const DensityError& e) {
        throw TrainingAborted(step_, checkpoint_path(), e.what());
    }
    rec.grad_norm = clip_global_norm(model_->params(), cfg_.clip);
    if (!std::isfinite(rec.grad_norm))
        throw TrainingAborted(step_, checkpoint_path(), "gradient norm is not finite");
    adam_->step(rec.learning_rate);
    ++step_;
    return rec;
}

double Trainer::validate() const {
    if (valid_.sequences.empty()) return std::nan("");
    return evaluate_recon(*model_, valid_, cfg_.batch_size);
}

TensorArchive Trainer::checkpoint() const {
    TensorArchive ar;
    model_->save_to(ar);
    adam_->save_to(ar);
    for (const auto& [k, v] : run_config_to_meta(cfg_)) ar.meta[k] = v;
    ar.meta["train.step"] = std::to_string(step_);
    std::ostringstream sc;
    sc.precision(17);
    sc << scale_;
    ar.meta["data.scale"] = sc.str();
    std::string cats;
    for (const auto& c : cfg_.categories) cats += (cats.empty() ? "" : ",") + c;
    ar.meta["data.categories"] = cats;
    return ar;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
    write_archive(path, checkpoint());
}

std::filesystem::path Trainer::checkpoint_path() const {
    const auto p = cfg_.output_dir / "checkpoint.skpx";
    return std::filesystem::exists(p) ? p : std::filesystem::path{};
}

std::filesystem::path Trainer::log_path() const { return cfg_.output_dir / "train.jsonl"; }

void Trainer::run(std::ostream* progress) {
    std::filesystem::create_directories(cfg_.output_dir);
    std::ofstream log(log_path(), std::ios::app);
    const auto ckpt = cfg_.output_dir / "checkpoint.skpx";
    while (step_ < cfg_.steps) {
        const StepRecord r = step();
        nlohmann::json j{{"step", r.step},
                         {"recon", r.loss.recon},
                         {"offset", r.loss.offset},
                         {"pen", r.loss.pen},
                         {"kl", r.loss.kl},
                         {"kl_weight", r.loss.kl_weight},
                         {"total", r.loss.total},
                         {"lr", r.learning_rate},
                         {"grad_norm", r.grad_norm}};
        if (cfg_.validate_every && step_ % cfg_.validate_every == 0 && !valid_.sequences.empty()) {
            j["valid_recon"] = validate();
            if (progress)
                *progress << "step " << step_ << " recon " << r.loss.recon << " kl " << r.loss.kl
                          << " valid_recon " << j["valid_recon"].get<double>() << "\n";
        }
        log << j.dump() << "\n";
        log.flush();
        if ((cfg_.checkpoint_every && step_ % cfg_.checkpoint_every == 0) || step_ == cfg_.steps)
            save_checkpoint(ckpt);
    }
}

}  // namespace sketchpix
