#include "sketchpix/model.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace sketchpix {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::RnnKl: return "RNN+KL";
        case Variant::RnnNoKl: return "RNN-KL";
        case Variant::CnnKl: return "CNN+KL";
        case Variant::CnnNoKl: return "CNN-KL";
    }
    return "?";
}

Variant parse_variant(const std::string& text) {
    std::string s;
    for (std::size_t i = 0; i < text.size(); ++i) {
        // U+2212 MINUS SIGN is E2 88 92
        if (text.compare(i, 3, "\xE2\x88\x92") == 0) {
            s += '-';
            i += 2;
        } else {
            s += static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
        }
    }
    for (Variant v : all_variants())
        if (variant_name(v) == s) return v;
    throw std::invalid_argument("unknown model variant '" + text +
                                "' (expected RNN+KL, RNN-KL, CNN+KL or CNN-KL)");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::RnnKl, Variant::RnnNoKl, Variant::CnnKl,
                                        Variant::CnnNoKl};
    return v;
}

EncoderKind encoder_kind(Variant v) {
    return v == Variant::CnnKl || v == Variant::CnnNoKl ? EncoderKind::Cnn : EncoderKind::Brnn;
}

Objective objective(Variant v) {
    return v == Variant::RnnKl || v == Variant::CnnKl ? Objective::WithKl : Objective::WithoutKl;
}

namespace {

std::size_t meta_size(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ArchiveError("checkpoint meta lacks '" + key + "'");
    return std::stoull(it->second);
}

}  // namespace

std::map<std::string, std::string> model_config_to_meta(const ModelConfig& cfg) {
    return {{"model.variant", variant_name(cfg.variant)},
            {"model.conv_stack", conv_stack_str(cfg.encoder.conv)},
            {"model.padding", cfg.encoder.padding == Padding::Same ? "same" : "valid"},
            {"model.brnn_hidden", std::to_string(cfg.encoder.brnn_hidden)},
            {"model.latent_dim", std::to_string(cfg.encoder.latent_dim)},
            {"model.dec_hidden", std::to_string(cfg.decoder.hidden)},
            {"model.mixtures", std::to_string(cfg.decoder.mixtures)},
            {"model.max_seq_len", std::to_string(cfg.decoder.max_seq_len)}};
}

ModelConfig model_config_from_meta(const std::map<std::string, std::string>& meta) {
    ModelConfig cfg;
    const auto v = meta.find("model.variant");
    if (v == meta.end()) throw ArchiveError("checkpoint meta lacks 'model.variant'");
    cfg.variant = parse_variant(v->second);
    cfg.encoder.kind = encoder_kind(cfg.variant);
    cfg.encoder.conv = parse_conv_stack(meta.at("model.conv_stack"));
    cfg.encoder.padding = meta.at("model.padding") == "valid" ? Padding::Valid : Padding::Same;
    cfg.encoder.brnn_hidden = meta_size(meta, "model.brnn_hidden");
    cfg.encoder.latent_dim = meta_size(meta, "model.latent_dim");
    cfg.decoder.hidden = meta_size(meta, "model.dec_hidden");
    cfg.decoder.mixtures = meta_size(meta, "model.mixtures");
    cfg.decoder.max_seq_len = meta_size(meta, "model.max_seq_len");
    return cfg;
}

SketchModel::SketchModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.encoder.kind = encoder_kind(cfg_.variant);
    std::mt19937_64 rng(seed);
    if (cfg_.encoder.kind == EncoderKind::Cnn)
        cnn_ = std::make_unique<CnnEncoder>(params_, cfg_.encoder, rng);
    else
        brnn_ = std::make_unique<BrnnEncoder>(params_, cfg_.encoder, rng);
    decoder_ = std::make_unique<Decoder>(params_, cfg_.decoder, cfg_.encoder.latent_dim, rng);
}

ModelBatch SketchModel::make_batch(const std::vector<SketchSequence>& seqs,
                                   const std::vector<RasterBitmap>* filtered) const {
    ModelBatch b{pad_and_batch(seqs, cfg_.decoder.max_seq_len), {}};
    if (cnn_) {
        if (filtered) {
            if (filtered->size() != seqs.size())
                throw std::invalid_argument("make_batch: bitmap count differs from sequence count");
            b.images = bitmaps_to_tensor(*filtered);
        } else {
            std::vector<RasterBitmap> views;
            views.reserve(seqs.size());
            for (const auto& s : seqs) views.push_back(encoder_view(s));
            b.images = bitmaps_to_tensor(views);
        }
    }
    return b;
}

GaussianPosterior SketchModel::encode(const ModelBatch& batch) const {
    if (cnn_) return cnn_->encode(batch.images);
    return brnn_->encode(batch.sequences);
}

GaussianPosterior SketchModel::encode_images(const Tensor& images) const {
    if (!cnn_)
        throw std::invalid_argument(variant_name(cfg_.variant) +
                                    " reads stroke sequences; a bitmap cannot be encoded by its "
                                    "bidirectional RNN encoder. Use a CNN variant or pass a sequence.");
    return cnn_->encode(images);
}

LossTerms SketchModel::loss(const ModelBatch& batch, const Tensor& eps, double kl_weight) const {
    const GaussianPosterior post = encode(batch);
    const Tensor z = reparameterize(post, eps);
    const MixtureParams params = decoder_->rollout(z, batch.sequences);
    return total_loss(recon_nll(params, batch.sequences), kl_to_standard_normal(post),
                      objective(cfg_.variant), kl_weight);
}

void SketchModel::save_to(TensorArchive& archive) const {
    for (const auto& [k, v] : model_config_to_meta(cfg_)) archive.meta[k] = v;
    params_.save_to(archive);
}

std::unique_ptr<SketchModel> SketchModel::from_archive(const TensorArchive& archive) {
    auto m = std::make_unique<SketchModel>(model_config_from_meta(archive.meta), 0);
    m->params_.load_from(archive);
    return m;
}

}  // namespace sketchpix
