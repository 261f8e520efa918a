#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sketchpix/model.hpp"
#include "sketchpix/ops.hpp"
#include "sketchpix/synth.hpp"
#include "support/gradcheck.hpp"
#include "support/kl_oracle.hpp"
#include "support/toy_model.hpp"

using namespace sketchpix;
using sketchpix::testing::max_gradient_error;
using sketchpix::testing::random_tensor;
using sketchpix::testing::kl_by_integration;
using sketchpix::testing::kl_of;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor weighted(const Tensor& t) {
    std::vector<double> w(t.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.4 + 0.13 * double(i % 5);
    return sum(mul(t, Tensor(t.shape(), std::move(w))));
}

void zero(Tensor& t) {
    for (auto& v : t.mutable_data()) v = 0.0;
}

}  // namespace

TEST_CASE("conv stack spec strings") {
    const auto s = parse_conv_stack("3x3@8/2, 5x4@16/1:tanh");
    REQUIRE(s.size() == 2);
    CHECK(s[1].kernel_h == 5);
    CHECK(s[1].kernel_w == 4);
    CHECK(s[1].depth == 16);
    CHECK(s[1].stride == 1);
    CHECK(s[1].activation == Activation::Tanh);
    CHECK(conv_stack_str(s) == "3x3@8/2,5x4@16/1:tanh");
    CHECK(conv_stack_str(default_conv_stack()) == "3x3@8/2,3x3@16/2,3x3@32/2,3x3@64/2");
    CHECK_THROWS_AS(parse_conv_stack("3x3@0/2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_conv_stack("3x3-8/2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_conv_stack("3x3@8/2:gelu"), std::invalid_argument);
}

TEST_CASE("cnn encoder: dims, zero image, collapse error") {
    ParameterStore ps;
    std::mt19937_64 rng(1);
    EncoderConfig cfg;
    CnnEncoder enc(ps, cfg, rng);
    CHECK(enc.flat_size() == 3 * 3 * 64);

    zero(ps.get("cnn.mu.w"));
    zero(ps.get("cnn.sigma.w"));
    auto bias = ps.get("cnn.mu.b").mutable_data();
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.01 * double(i) - 0.5;
    const auto post = enc.encode(std::vector<RasterBitmap>{RasterBitmap{}});
    CHECK(post.mu.shape() == Shape{1, 128});
    CHECK(post.sigma().shape() == Shape{1, 128});
    for (std::size_t i = 0; i < 128; ++i) CHECK(post.mu.at({0, i}) == bias[i]);

    ParameterStore ps2;
    EncoderConfig bad;
    bad.padding = Padding::Valid;
    bad.conv = parse_conv_stack("3x3@8/2,3x3@8/2,3x3@8/2,3x3@8/2,3x3@8/2");
    CHECK_THROWS_AS(CnnEncoder(ps2, bad, rng), std::invalid_argument);
    EncoderConfig no_latent;
    no_latent.latent_dim = 0;
    ParameterStore ps3;
    CHECK_THROWS_AS(CnnEncoder(ps3, no_latent, rng), std::invalid_argument);
}

TEST_CASE("cnn encoder: posterior gradient w.r.t. pixels matches finite differences") {
    ParameterStore ps;
    std::mt19937_64 rng(2);
    EncoderConfig cfg;
    cfg.latent_dim = 4;
    CnnEncoder enc(ps, cfg, rng);
    Tensor img = random_tensor({1, 1, 48, 48}, rng, 0.0, 1.0);
    const double err = max_gradient_error(
        [&] {
            const auto p = enc.encode(img);
            return weighted(p.mu) + weighted(p.sigma_hat);
        },
        {img});
    CHECK(err < 1e-4);
}

TEST_CASE("cnn encoder: parameter gradients match finite differences") {
    ParameterStore ps;
    std::mt19937_64 rng(3);
    EncoderConfig cfg;
    cfg.conv = parse_conv_stack("3x3@2/3,3x3@3/4:tanh");
    cfg.latent_dim = 3;
    CnnEncoder enc(ps, cfg, rng);
    const Tensor img = random_tensor({2, 1, 48, 48}, rng, 0.0, 1.0);
    std::vector<Tensor> leaves;
    for (auto& [n, t] : ps.items()) leaves.push_back(t);
    const double err = max_gradient_error(
        [&] {
            const auto p = enc.encode(img);
            return weighted(p.mu) + weighted(p.sigma_hat);
        },
        leaves);
    CHECK(err < 1e-4);
}

TEST_CASE("cnn posterior ignores stroke order and direction") {
    // Same geometry: a square then a diagonal, versus the diagonal drawn
    // backwards first and the square started from another corner.
    const std::vector<Polyline> a{{{0, 0}, {40, 0}, {40, 40}, {0, 40}, {0, 0}}, {{5, 5}, {30, 20}}};
    const std::vector<Polyline> b{{{30, 20}, {5, 5}}, {{40, 40}, {0, 40}, {0, 0}, {40, 0}, {40, 40}}};
    const auto sa = sequence_from_strokes(a), sb = sequence_from_strokes(b);
    REQUIRE(sa.points != sb.points);
    ParameterStore ps;
    std::mt19937_64 rng(4);
    CnnEncoder enc(ps, EncoderConfig{}, rng);
    const auto pa = enc.encode(std::vector{encoder_view(sa)});
    const auto pb = enc.encode(std::vector{encoder_view(sb)});
    CHECK(values(pa.mu) == values(pb.mu));
    CHECK(values(pa.sigma_hat) == values(pb.sigma_hat));
}

TEST_CASE("brnn encoder: padding invariance and single point") {
    std::mt19937_64 rng(5);
    ParameterStore ps;
    EncoderConfig cfg;
    cfg.kind = EncoderKind::Brnn;
    cfg.brnn_hidden = 16;
    cfg.latent_dim = 8;
    BrnnEncoder enc(ps, cfg, rng);
    const auto seq = synth::sketch("pig", rng);
    const auto p1 = enc.encode(pad_and_batch({seq}, seq.length()));
    const auto p2 = enc.encode(pad_and_batch({seq}, seq.length() + 10));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::abs(p1.mu.at({0, i}) - p2.mu.at({0, i})) <= 1e-12);
        CHECK(std::abs(p1.sigma_hat.at({0, i}) - p2.sigma_hat.at({0, i})) <= 1e-12);
    }
    // A short row next to a long one reads only its own points.
    const SketchSequence tiny{{Stroke5Point::terminal()}, "x"};
    const auto alone = enc.encode(pad_and_batch({tiny}, 1));
    const auto mixed = enc.encode(pad_and_batch({tiny, seq}, seq.length() + 3));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::isfinite(alone.mu.at({0, i})));
        CHECK(std::abs(alone.mu.at({0, i}) - mixed.mu.at({0, i})) <= 1e-12);
    }
    SequenceBatch empty = pad_and_batch({tiny}, 2);
    empty.lengths[0] = 0;
    CHECK_THROWS_AS(enc.encode(empty), std::invalid_argument);
}

TEST_CASE("brnn encoder: gradient check on a 3-step sequence") {
    std::mt19937_64 rng(6);
    ParameterStore ps;
    EncoderConfig cfg;
    cfg.kind = EncoderKind::Brnn;
    cfg.brnn_hidden = 3;
    cfg.latent_dim = 2;
    BrnnEncoder enc(ps, cfg, rng);
    const SketchSequence s{{{0.5, -0.3, Pen::Down}, {0.2, 0.9, Pen::Up}, Stroke5Point::terminal()}, ""};
    const SketchSequence t{{{-0.4, 0.1, Pen::Up}, Stroke5Point::terminal()}, ""};
    const auto batch = pad_and_batch({s, t}, 4);
    std::vector<Tensor> leaves;
    for (auto& [n, p] : ps.items()) leaves.push_back(p);
    const double err = max_gradient_error(
        [&] {
            const auto p = enc.encode(batch);
            return weighted(p.mu) + weighted(p.sigma_hat);
        },
        leaves);
    CHECK(err < 1e-4);
}

TEST_CASE("reparameterize") {
    std::mt19937_64 rng(7);
    GaussianPosterior post{random_tensor({1, 4}, rng), random_tensor({1, 4}, rng)};
    CHECK(values(reparameterize(post, Tensor({1, 4}, 0.0))) == values(post.mu));

    const GaussianPosterior unit{Tensor({1, 3}, 0.0), Tensor({1, 3}, 0.0)};
    const Tensor e({1, 3}, {0.3, -1.2, 2.5});
    CHECK(values(reparameterize(unit, e)) == values(e));

    // gradients reach mu and sigma_hat, never eps
    Tensor mu = post.mu, sh = post.sigma_hat;
    mu.set_requires_grad();
    sh.set_requires_grad();
    Tensor eps = random_tensor({1, 4}, rng);
    eps.set_requires_grad();
    backward(sum(reparameterize({mu, sh}, eps)));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(mu.grad()[i] == 1.0);
        CHECK(sh.grad()[i] == doctest::Approx(0.5 * std::exp(0.5 * sh.data()[i]) * eps.data()[i]));
        CHECK(eps.grad()[i] == 0.0);
    }
}

TEST_CASE("reparameterized samples have the posterior mean (Monte Carlo)") {
    const std::size_t n = 100000;
    const std::vector<double> mu{0.7, -1.3, 0.0}, sh{0.0, std::log(0.25), std::log(4.0)};
    std::vector<double> m, s;
    for (std::size_t i = 0; i < n; ++i) {
        m.insert(m.end(), mu.begin(), mu.end());
        s.insert(s.end(), sh.begin(), sh.end());
    }
    const GaussianPosterior post{Tensor({n, 3}, m), Tensor({n, 3}, s)};
    std::mt19937_64 rng(8);
    const Tensor z = reparameterize(post, standard_normal({n, 3}, rng));
    for (std::size_t d = 0; d < 3; ++d) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += z.at({i, d});
        const double sigma = std::exp(sh[d] / 2);
        CHECK(std::abs(acc / double(n) - mu[d]) < 3 * sigma / std::sqrt(double(n)));
    }
}

TEST_CASE("decoder init_state") {
    std::mt19937_64 rng(9);
    ParameterStore ps;
    DecoderConfig cfg{6, 3, 10};
    Decoder dec(ps, cfg, 4, rng);
    const auto s = dec.init_state(random_tensor({2, 4}, rng, -3, 3));
    for (double v : s.h.data()) CHECK((v > -1 && v < 1));
    for (double v : s.c.data()) CHECK((v > -1 && v < 1));

    zero(ps.get("dec.init.w"));
    const auto z0 = dec.init_state(Tensor({1, 4}, 0.0));
    for (double v : z0.h.data()) CHECK(v == 0.0);
    for (double v : z0.c.data()) CHECK(v == 0.0);

    ParameterStore ps2;
    Decoder dec2(ps2, cfg, 4, rng);
    Tensor z = random_tensor({2, 4}, rng);
    const double err = max_gradient_error(
        [&] {
            const auto st = dec2.init_state(z);
            return weighted(st.h) + weighted(st.c);
        },
        {z});
    CHECK(err < 1e-4);
}

TEST_CASE("decoder step: constraints and determinism") {
    std::mt19937_64 rng(10);
    ParameterStore ps;
    Decoder dec(ps, {8, 5, 10}, 4, rng);
    for (auto& [n, t] : ps.items())
        for (auto& v : t.mutable_data()) v += std::uniform_real_distribution<double>(-2, 2)(rng);
    const Tensor z = random_tensor({3, 4}, rng);
    const auto st = dec.init_state(z);
    const auto [p1, s1] = dec.step(st, Stroke5Point::start_token(), z);
    const auto [p2, s2] = dec.step(st, Stroke5Point::start_token(), z);
    CHECK(values(p1.pi_logits) == values(p2.pi_logits));
    CHECK(values(s1.h) == values(s2.h));
    const Tensor pi = p1.pi();
    for (std::size_t r = 0; r < 3; ++r) {
        double total = 0;
        for (std::size_t m = 0; m < 5; ++m) total += pi.at({r, m});
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
    for (double r : p1.rho.data()) CHECK((r > -1 && r < 1));
    for (double s : p1.sigma_x().data()) CHECK(s > 0);

    // Saturated pre-activations still respect the ranges.
    std::vector<double> raw(2 * 33);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = (i % 2 ? 1 : -1) * 500.0;
    const auto sat = split_mixture_output(Tensor({2, 33}, raw), 5);
    for (double r : sat.rho.data()) CHECK((r > -1 && r < 1));
}

TEST_CASE("rollout: shape, step equivalence, causality") {
    std::mt19937_64 rng(11);
    ParameterStore ps;
    const std::size_t T = 6;
    Decoder dec(ps, {8, 3, T}, 4, rng);
    std::vector<SketchSequence> seqs{synth::sketch("cat", rng), synth::sketch("bus", rng)};
    for (auto& s : seqs) {
        s.points.resize(T - 1 - (&s - seqs.data()));
        s.points.back().pen = Pen::Up;
        s.points.push_back(Stroke5Point::terminal());
        for (auto& p : s.points) {
            p.dx /= 50;
            p.dy /= 50;
        }
    }
    const auto batch = pad_and_batch(seqs, T);
    const Tensor z = random_tensor({2, 4}, rng);
    const auto out = dec.rollout(z, batch);
    CHECK(out.rows() == T * 2);
    CHECK(out.mixtures() == 3);

    // Stepping by hand reproduces the rollout rows.
    auto state = dec.init_state(z);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> prev(10);
        for (std::size_t b = 0; b < 2; ++b) {
            const auto a = t == 0 ? Stroke5Point::start_token().to_array()
                                  : std::array<double, 5>{batch.points.at({b, t - 1, 0}),
                                                          batch.points.at({b, t - 1, 1}),
                                                          batch.points.at({b, t - 1, 2}),
                                                          batch.points.at({b, t - 1, 3}),
                                                          batch.points.at({b, t - 1, 4})};
            std::copy(a.begin(), a.end(), prev.begin() + b * 5);
        }
        auto [p, next] = dec.step(state, Tensor({2, 5}, prev), z);
        state = next;
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t m = 0; m < 3; ++m) {
                CHECK(std::abs(p.mu_x.at({b, m}) - out.mu_x.at({t * 2 + b, m})) < 1e-12);
                CHECK(std::abs(p.rho.at({b, m}) - out.rho.at({t * 2 + b, m})) < 1e-12);
            }
    }

    // Perturbing target k moves only steps after k.
    for (std::size_t k = 0; k < T; ++k) {
        auto pert = batch;
        pert.points = batch.points.clone();
        pert.points.mutable_data()[(0 * T + k) * 5 + 0] += 0.37;
        const auto o2 = dec.rollout(z, pert);
        for (std::size_t t = 0; t < T; ++t) {
            bool changed = false;
            for (std::size_t m = 0; m < 3; ++m)
                changed |= o2.mu_x.at({t * 2, m}) != out.mu_x.at({t * 2, m});
            CHECK(changed == (t > k));
            for (std::size_t m = 0; m < 3; ++m)  // other example untouched
                CHECK(o2.mu_x.at({t * 2 + 1, m}) == out.mu_x.at({t * 2 + 1, m}));
        }
    }
    CHECK_THROWS_AS(dec.rollout(random_tensor({3, 4}, rng), batch), ShapeError);
}

namespace {

// Closed-form bivariate normal density, written out independently.
double naive_density(double x, double y, double mx, double my, double sx, double sy, double r) {
    const double zx = (x - mx) / sx, zy = (y - my) / sy;
    const double q = zx * zx + zy * zy - 2 * r * zx * zy;
    return std::exp(-q / (2 * (1 - r * r))) / (2 * std::numbers::pi * sx * sy * std::sqrt(1 - r * r));
}

struct RandomMixture {
    std::vector<double> pi, mx, my, lsx, lsy, rho;
};

MixtureParams to_params(const RandomMixture& m, std::size_t rows = 1) {
    const std::size_t M = m.pi.size();
    auto rep = [&](const std::vector<double>& v) {
        std::vector<double> out;
        for (std::size_t r = 0; r < rows; ++r) out.insert(out.end(), v.begin(), v.end());
        return Tensor({rows, M}, out);
    };
    std::vector<double> pen(rows * 3, 0.0);
    return {rep(m.pi), rep(m.mx), rep(m.my), rep(m.lsx), rep(m.lsy), rep(m.rho), Tensor({rows, 3}, pen)};
}

SequenceBatch single_target(double dx, double dy) {
    // One real step carrying the offset; pen term ignored by the callers.
    SequenceBatch b = pad_and_batch({{{Stroke5Point::terminal()}, ""}}, 1);
    b.points.mutable_data()[0] = dx;
    b.points.mutable_data()[1] = dy;
    return b;
}

}  // namespace

TEST_CASE("offset NLL at the mean of a unit normal is log(2 pi)") {
    const RandomMixture m{{0.0}, {0.4}, {-0.2}, {0.0}, {0.0}, {0.0}};
    const auto r = recon_nll(to_params(m), single_target(0.4, -0.2));
    CHECK(std::abs(r.offset.item() - (-std::log(naive_density(0, 0, 0, 0, 1, 1, 0)))) < 1e-12);
    CHECK(std::abs(r.offset.item() - 1.8378770664093453) < 1e-12);
}

TEST_CASE("uniform pen logits cost ln 3 per step") {
    std::mt19937_64 rng(12);
    const auto seq = synth::sketch("truck", rng);
    const auto batch = pad_and_batch({seq}, seq.length() + 5);
    const std::size_t N = batch.max_seq_len;
    MixtureParams p{Tensor({N, 2}, 0.0), Tensor({N, 2}, 0.0), Tensor({N, 2}, 0.0),
                    Tensor({N, 2}, 5.0), Tensor({N, 2}, 5.0), Tensor({N, 2}, 0.0),
                    Tensor({N, 3}, 0.7)};
    CHECK(std::abs(recon_nll(p, batch).pen.item() - std::log(3.0)) < 1e-12);
}

TEST_CASE("mixture NLL against naive summation and the best-component bound") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t M = 1 + trial % 6;
        RandomMixture m;
        for (std::size_t i = 0; i < M; ++i) {
            m.pi.push_back(2 * u(rng));
            m.mx.push_back(u(rng));
            m.my.push_back(u(rng));
            m.lsx.push_back(0.5 * u(rng));
            m.lsy.push_back(0.5 * u(rng));
            m.rho.push_back(0.9 * u(rng));
        }
        const double x = u(rng), y = u(rng);
        const double nll = recon_nll(to_params(m), single_target(x, y)).offset.item();

        double zsum = 0;
        for (double l : m.pi) zsum += std::exp(l);
        double mix = 0, best_weighted = 1e300, best_plain = 1e300;
        for (std::size_t i = 0; i < M; ++i) {
            const double w = std::exp(m.pi[i]) / zsum;
            const double d = naive_density(x, y, m.mx[i], m.my[i], std::exp(m.lsx[i]),
                                           std::exp(m.lsy[i]), m.rho[i]);
            mix += w * d;
            best_weighted = std::min(best_weighted, -std::log(w * d));
            best_plain = std::min(best_plain, -std::log(d));
        }
        CHECK(std::abs(nll - (-std::log(mix))) < 1e-10);
        CHECK(nll <= best_weighted + 1e-12);

        // Equal weights: bounded by the best component plus log M.
        auto flat = m;
        std::fill(flat.pi.begin(), flat.pi.end(), 0.0);
        const double nll_flat = recon_nll(to_params(flat), single_target(x, y)).offset.item();
        CHECK(nll_flat <= best_plain + std::log(double(M)) + 1e-12);
    }
}

TEST_CASE("moving a component's mean toward the target lowers the NLL") {
    double prev = 1e300;
    for (int i = 0; i <= 20; ++i) {
        const double a = 2.0 - 0.1 * i;
        const RandomMixture m{{0.0, 0.3}, {a, -1.0}, {a * 0.5, 1.0}, {0.1, 0.0}, {-0.2, 0.0}, {0.3, 0.0}};
        const double nll = recon_nll(to_params(m), single_target(0.0, 0.0)).offset.item();
        CHECK(nll < prev);
        prev = nll;
    }
}

TEST_CASE("non-finite density names the step") {
    const std::size_t B = 2, T = 4;
    const SketchSequence s{{{0.1, 0.1, Pen::Up}, {0.2, 0.2, Pen::Up}, {0.3, 0.1, Pen::Up},
                            Stroke5Point::terminal()},
                           ""};
    const auto batch = pad_and_batch({s, s}, T);
    MixtureParams p{Tensor({B * T, 1}, 0.0), Tensor({B * T, 1}, 0.0), Tensor({B * T, 1}, 0.0),
                    Tensor({B * T, 1}, 0.0), Tensor({B * T, 1}, 0.0), Tensor({B * T, 1}, 0.0),
                    Tensor({B * T, 3}, 0.0)};
    p.log_sigma_x.mutable_data()[2 * B + 1] = -800.0;  // step 2, example 1
    try {
        recon_nll(p, batch);
        FAIL("expected a DensityError");
    } catch (const DensityError& e) {
        CHECK(e.step() == 2);
        CHECK(e.example() == 1);
        CHECK(std::string(e.what()).find("step 2") != std::string::npos);
    }
}


TEST_CASE("KL closed form") {
    CHECK(kl_of(std::vector<double>(128, 0.0), std::vector<double>(128, 1.0)) == 0.0);
    CHECK(std::abs(kl_of({1.0}, {1.0}) - 0.5) <= 1e-9);
    CHECK(std::abs(kl_by_integration(1.0, 1.0) - 0.5) <= 1e-6);

    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> um(-2, 2), us(0.3, 2.5);
    for (int i = 0; i < 25; ++i) {
        const double mu = um(rng), s = us(rng);
        const double closed = kl_of({mu}, {s});
        CHECK(closed >= 0);
        CHECK(std::abs(closed - kl_by_integration(mu, s)) <= 1e-6);
    }
    // Sum over dims, mean over the batch.
    const GaussianPosterior two{Tensor({2, 2}, {1.0, 0.0, 0.0, 2.0}), Tensor({2, 2}, 0.0)};
    CHECK(std::abs(kl_to_standard_normal(two).item() - (0.5 + 2.0) / 2) < 1e-15);
}

TEST_CASE("KL schedule") {
    const KlSchedule k;
    CHECK(k.weight(0) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(k.weight(1) > k.weight(0));
    CHECK(k.weight(1000000) == doctest::Approx(1.0));
    CHECK(k.weight(20000) < 1.0);
}

TEST_CASE("objective without KL is the reconstruction term exactly") {
    for (Variant v : all_variants()) {
        SketchModel model(testing::toy_config(v), 15);
        testing::jitter_params(model, 16);
        const auto batch = model.make_batch(testing::toy_sequences());
        std::mt19937_64 rng(17);
        const Tensor eps = random_tensor({2, 3}, rng);
        const double w = objective(v) == Objective::WithKl ? 0.37 : 1.0;
        const auto terms = model.loss(batch, eps, w);
        CHECK(terms.values.kl > 0);
        if (objective(v) == Objective::WithoutKl) {
            CHECK(terms.values.total == terms.values.recon);
            CHECK(terms.values.kl_weight == 0.0);
        } else {
            CHECK(terms.values.total == terms.values.recon + 0.37 * terms.values.kl);
        }

        // Gradients of the total against gradients of recon alone.
        auto grads = [&](bool recon_only) {
            model.params().zero_grad();
            const auto t = model.loss(batch, eps, w);
            backward(recon_only ? t.recon : t.total);
            std::vector<double> g;
            for (auto& [n, p] : model.params().items()) g.insert(g.end(), p.grad().begin(), p.grad().end());
            return g;
        };
        const auto gt = grads(false), gr = grads(true);
        if (objective(v) == Objective::WithoutKl)
            CHECK(gt == gr);
        else
            CHECK(gt != gr);
    }
}

TEST_CASE("kl weight zero contributes zero gradient") {
    SketchModel model(testing::toy_config(Variant::CnnKl), 18);
    const auto batch = model.make_batch(testing::toy_sequences());
    const auto post = model.encode(batch);
    model.params().zero_grad();
    backward(scale(kl_to_standard_normal(post), 0.0));
    for (auto& [n, p] : model.params().items())
        for (double g : p.grad()) CHECK(g == 0.0);
}

TEST_CASE("end-to-end loss gradient on a 2-step toy model") {
    for (Variant v : all_variants()) {
        const double err = testing::toy_model_gradient_error(v, 19);
        INFO(variant_name(v) << " rel err " << err);
        CHECK(err < 1e-3);
    }
}

TEST_CASE("variant names and parsing") {
    for (Variant v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
    CHECK(parse_variant("cnn\xE2\x88\x92kl") == Variant::CnnNoKl);
    CHECK_THROWS_AS(parse_variant("GRU+KL"), std::invalid_argument);
}

TEST_CASE("model config survives checkpoint meta") {
    ModelConfig cfg = testing::toy_config(Variant::RnnKl, 7);
    cfg.encoder.kind = EncoderKind::Brnn;
    CHECK(model_config_from_meta(model_config_to_meta(cfg)) == cfg);
    SketchModel m(cfg, 3);
    TensorArchive ar;
    m.save_to(ar);
    const auto back = SketchModel::from_archive(decode_archive(encode_archive(ar)));
    for (std::size_t i = 0; i < m.params().items().size(); ++i)
        CHECK(values(m.params().items()[i].second) == values(back->params().items()[i].second));
}
