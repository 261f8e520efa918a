#pragma once
// Training loop shared by all four variants.

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "sketchpix/config.hpp"
#include "sketchpix/dataset.hpp"
#include "sketchpix/model.hpp"
#include "sketchpix/optim.hpp"

namespace sketchpix {

struct StepRecord {
    std::uint64_t step = 0;  // index of the step just taken, from 0
    LossBreakdown loss;
    double learning_rate = 0;
    double grad_norm = 0;  // before clipping
};

class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(std::uint64_t step, std::filesystem::path last_good, const std::string& why);
    std::uint64_t step() const { return step_; }
    const std::filesystem::path& last_good_checkpoint() const { return last_good_; }

private:
    std::uint64_t step_;
    std::filesystem::path last_good_;
};

// Encoder inputs computed once per sketch.
struct PreparedSet {
    std::vector<SketchSequence> sequences;
    std::vector<RasterBitmap> views;  // filtered bitmaps, CNN variants only
};

PreparedSet prepare_set(const std::vector<SketchSequence>& seqs, EncoderKind kind);

// Mean reconstruction NLL over the set with z = mu, in batches.
double evaluate_recon(const SketchModel& model, const PreparedSet& set, std::size_t batch_size);

std::map<std::string, std::string> run_config_to_meta(const RunConfig& cfg);
RunConfig run_config_from_meta(const std::map<std::string, std::string>& meta);

class Trainer {
public:
    // Categories in cfg must all exist in data; other categories are dropped.
    // Throws std::invalid_argument on an empty training split.
    Trainer(RunConfig cfg, const DatasetSplit& data);

    // Restores model, optimizer, and step counter. cfg defaults to the one
    // stored in the checkpoint.
    static std::unique_ptr<Trainer> resume(const std::filesystem::path& checkpoint,
                                           const DatasetSplit& data,
                                           std::optional<RunConfig> cfg = std::nullopt);

    StepRecord step();
    double validate() const;
    // Steps until cfg.steps, writing the log and checkpoints under output_dir.
    void run(std::ostream* progress = nullptr);

    TensorArchive checkpoint() const;
    void save_checkpoint(const std::filesystem::path& path) const;
    std::filesystem::path checkpoint_path() const;
    std::filesystem::path log_path() const;

    std::uint64_t current_step() const { return step_; }
    const RunConfig& config() const { return cfg_; }
    SketchModel& model() { return *model_; }
    const SketchModel& model() const { return *model_; }
    const PreparedSet& train_set() const { return train_; }
    double data_scale() const { return scale_; }

private:
    void load_state(const TensorArchive& archive);

    RunConfig cfg_;
    std::unique_ptr<SketchModel> model_;
    std::unique_ptr<Adam> adam_;
    PreparedSet train_;
    PreparedSet valid_;
    double scale_ = 1.0;
    std::uint64_t step_ = 0;
};

}  // namespace sketchpix
