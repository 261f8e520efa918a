#pragma once
// Run configuration, read from a key = value text file. Lines starting with
// '#' are comments. Unknown keys are an error.
//
//   variant            RNN+KL | RNN-KL | CNN+KL | CNN-KL
//   categories         comma separated, e.g. cat,pig,rabbit
//   dataset            path to a prepared dataset container
//   output_dir         checkpoints and train.jsonl go here
//   latent_dim         128
//   conv_stack         3x3@8/2,3x3@16/2,3x3@32/2,3x3@64/2
//   conv_padding       same | valid
//   brnn_hidden        256
//   dec_hidden         512
//   mixtures           20
//   max_seq_len        250
//   learning_rate      1e-3
//   lr_decay           0.9999
//   min_learning_rate  1e-5
//   batch_size         100
//   steps              20000
//   seed               1
//   clip               1.0
//   kl_start           0.01
//   kl_decay           0.99995
//   checkpoint_every   1000
//   validate_every     500
//   valid_size         500   (validation sketches used per check; 0 = all)

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sketchpix/loss.hpp"
#include "sketchpix/model.hpp"

namespace sketchpix {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    ModelConfig model;
    std::vector<std::string> categories{"cat", "pig", "rabbit"};
    std::filesystem::path dataset;
    std::filesystem::path output_dir = "run";
    double learning_rate = 1e-3;
    double lr_decay = 0.9999;
    double min_learning_rate = 1e-5;
    std::size_t batch_size = 100;
    std::uint64_t steps = 20000;
    std::uint64_t seed = 1;
    double clip = 1.0;
    KlSchedule kl;
    std::uint64_t checkpoint_every = 1000;
    std::uint64_t validate_every = 500;
    std::size_t valid_size = 500;

    // (lr - min) * decay^step + min
    double learning_rate_at(std::uint64_t step) const;
    // Effective KL weight: the schedule for +KL variants, 0 otherwise.
    double kl_weight_at(std::uint64_t step) const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_text(const RunConfig& cfg);

// Every setting with the variant resolved into what it controls
// ("encoder" and "objective"); used to diff variants.
std::map<std::string, std::string> effective_settings(const RunConfig& cfg);

}  // namespace sketchpix
