#include <doctest.h>

#include <cmath>

#include "t1t2/error.hpp"
#include "t1t2/hypergrad.hpp"
#include "t1t2/network.hpp"
#include "t1t2/rng.hpp"

using namespace t1t2;

namespace {

struct Setup {
    ModelParams params;
    BatchNormState bn;
    HyperParams hypers;
    Tensor x1, x2;
    std::vector<int> y1, y2;
    std::vector<Tensor> noise;
    ForwardTrace trace;       // T1 noisy trace
    BackwardCache cache;      // primal reverse quantities on the trace
    ParamSet g2;              // clean validation gradient
    LossAdjoint loss1;
};

Setup make_setup(const std::vector<std::size_t>& sizes, bool batch_norm, std::size_t batch, double sigma,
                 double l2, std::uint64_t seed) {
    Setup s;
    RngStream init(seed, stream_id(streams::init));
    s.params = init_params(sizes, batch_norm, init);
    s.bn = init_bn_state(sizes, batch_norm);
    s.hypers = make_hypers(sizes.size() - 1, sigma, sigma, l2, HyperLayout::per_layer);
    RngStream data(seed, stream_id(streams::synth));
    s.x1 = gaussian(data, {batch, sizes.front()});
    s.x2 = gaussian(data, {batch, sizes.front()});
    s.y1.resize(batch);
    s.y2.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        s.y1[i] = static_cast<int>(data.uniform_below(sizes.back()));
        s.y2[i] = static_cast<int>(data.uniform_below(sizes.back()));
    }
    RngStream noise_rng(seed, stream_id(streams::noise));
    s.noise = draw_noise(noise_rng, s.params, batch);
    s.loss1 = softmax_xent_adjoint(s.y1);

    BatchNormState bn_work = s.bn;
    s.trace = forward_noisy(s.params, s.x1, s.hypers, s.noise, batch_norm ? &bn_work : nullptr, false);
    const Tensor g = softmax_xent(s.trace.logits, s.y1).grad_logits;
    backward(s.trace, s.params, g, nullptr, &s.cache);

    const ForwardTrace t2 = forward_clean(s.params, s.x2, batch_norm ? &s.bn : nullptr);
    const Tensor g2l = softmax_xent(t2.logits, s.y2).grad_logits;
    s.g2 = backward(t2, s.params, g2l);
    return s;
}

// f(hypers) = g2 . grad_theta C~1(theta; hypers), all randomness replayed.
std::function<double(const HyperParams&)> make_closure(const Setup& s) {
    return [&s](const HyperParams& h) {
        BatchNormState bn = s.bn;
        const ForwardTrace tr =
            forward_noisy(s.params, s.x1, h, s.noise, s.bn.enabled() ? &bn : nullptr, false);
        const Tensor g = softmax_xent(tr.logits, s.y1).grad_logits;
        ModelParams grad = backward(tr, s.params, g);
        add_l2_gradient(s.params, h, grad);
        return dot(s.g2, grad);
    };
}

double rel_err(double a, double b) { return std::abs(a - b) / (std::abs(b) + 1e-12); }

}  // namespace

TEST_CASE("hypergrad_l2 closed-form evaluation") {
    ModelParams p;
    p.w.push_back(Tensor({1, 2}, {2.0, -1.0}));
    p.b.push_back(Tensor({2}));
    ParamSet g2 = zeros_like(p);
    g2.w[0] = Tensor({1, 2}, {0.5, 0.5});
    CHECK(hypergrad_l2(g2, p, 0) == doctest::Approx(0.5).epsilon(1e-15));

    scale_inplace(p.w[0], 0.0);
    CHECK(hypergrad_l2(g2, p, 0) == 0.0);
    CHECK_THROWS_AS(hypergrad_l2(g2, p, 3), Error);
}

TEST_CASE("hypergrad_l2 matches the FD oracle") {
    const Setup s = make_setup({5, 6, 4}, false, 8, 0.2, 0.05, 61);
    const auto f = make_closure(s);
    for (std::size_t l = 0; l < s.params.layer_count(); ++l) {
        const double analytic = hypergrad_l2(s.g2, s.params, l);
        const double fd = fd_oracle(f, s.hypers, {HyperIndex::Family::l2, l}, 1e-6);
        CHECK(rel_err(analytic, fd) < 1e-8);
    }
}

TEST_CASE("hypergrad_noise zero validation gradient") {
    const Setup s = make_setup({4, 5, 3}, false, 4, 0.3, 0.0, 67);
    const ParamSet zero = zeros_like(s.params);
    CHECK(hypergrad_noise(zero, s.trace, s.params, s.loss1, 0, nullptr, &s.cache) == 0.0);
}

TEST_CASE("hypergrad_noise scalar analytic case") {
    // Scalar model from the network tests with g2 = 0.2: G = 0.2 * 1.0.
    ModelParams p;
    p.w.push_back(Tensor({1, 1}, {1.0}));
    p.b.push_back(Tensor({1}));
    HyperParams h;
    h.noise_std = {0.0};
    h.l2 = {0.0};
    const Tensor x = Tensor::from_rows({{1.0}});
    const std::vector<Tensor> e = {Tensor::from_rows({{0.5}})};
    const ForwardTrace tr = forward_noisy(p, x, h, e, nullptr, false);
    LossAdjoint sq;
    sq.grad = [](const Tensor& logits) { return logits; };
    sq.grad_jvp = [](const Tensor&, const Tensor& dot) { return dot; };
    ParamSet g2 = zeros_like(p);
    g2.w[0][0] = 0.2;
    CHECK(hypergrad_noise(g2, tr, p, sq, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("hypergrad_noise matches the FD oracle with replayed noise") {
    for (bool bn : {false, true}) {
        CAPTURE(bn);
        const Setup s = make_setup({5, 7, 4}, bn, 8, 0.35, 0.0, 71);
        const auto f = make_closure(s);
        for (std::size_t l = 0; l < s.params.layer_count(); ++l) {
            const double analytic = hypergrad_noise(s.g2, s.trace, s.params, s.loss1, l, nullptr, &s.cache);
            const double fd = fd_oracle(f, s.hypers, {HyperIndex::Family::noise, l}, 1e-4);
            CHECK(rel_err(analytic, fd) < 1e-4);
        }
    }
}

TEST_CASE("fused noise hypergradients equal the per-site tangent route") {
    for (bool bn : {false, true}) {
        CAPTURE(bn);
        const Setup s = make_setup({6, 8, 5, 4}, bn, 12, 0.25, 0.0, 73);
        const std::vector<double> fused = hypergrad_noise_all(s.g2, s.trace, s.params, s.loss1, s.cache);
        REQUIRE(fused.size() == s.params.layer_count());
        for (std::size_t l = 0; l < fused.size(); ++l) {
            const double per_site = hypergrad_noise(s.g2, s.trace, s.params, s.loss1, l, nullptr, &s.cache);
            CHECK(rel_err(fused[l], per_site) < 1e-9);
        }
    }
}

TEST_CASE("missing noise record is a contract error") {
    const Setup s = make_setup({4, 5, 3}, false, 4, 0.1, 0.0, 79);
    ForwardTrace no_noise = s.trace;
    no_noise.e.clear();
    CHECK_THROWS_AS(hypergrad_noise(s.g2, no_noise, s.params, s.loss1, 0, nullptr, &s.cache), Error);
    CHECK_THROWS_AS(hypergrad_noise_all(s.g2, no_noise, s.params, s.loss1, s.cache), Error);
}

TEST_CASE("fd_oracle on quadratic and constant closures") {
    HyperParams h;
    h.noise_std = {3.0};
    h.l2 = {0.0};
    auto quad = [](const HyperParams& hp) { return hp.noise_std[0] * hp.noise_std[0]; };
    CHECK(std::abs(fd_oracle(quad, h, {HyperIndex::Family::noise, 0}, 1e-3) - 6.0) < 1e-9);
    auto constant = [](const HyperParams&) { return 4.2; };
    CHECK(fd_oracle(constant, h, {HyperIndex::Family::noise, 0}, 1e-3) == 0.0);
    CHECK_THROWS_AS(fd_oracle(quad, h, {HyperIndex::Family::noise, 0}, 0.0), Error);
    CHECK_THROWS_AS(fd_oracle(quad, h, {HyperIndex::Family::noise, 5}, 1e-3), Error);
}

TEST_CASE("L2 hypergradient adds no passes") {
    const Setup s = make_setup({5, 6, 4}, false, 8, 0.2, 0.05, 83);
    PassCounters pc;
    for (std::size_t l = 0; l < s.params.layer_count(); ++l) hypergrad_l2(s.g2, s.params, l);
    CHECK(pc.forward == 0);
    CHECK(pc.backward == 0);
    CHECK(pc.tangent == 0);
}

TEST_CASE("compute_hypergradient assembles families and diagnostics") {
    const Setup s = make_setup({5, 6, 4}, false, 8, 0.3, 0.02, 89);
    PassCounters pc;
    const HyperGradient hg =
        compute_hypergradient(s.g2, s.trace, s.params, s.loss1, s.cache, true, true, true, &pc);
    REQUIRE(hg.noise.size() == 2);
    REQUIRE(hg.l2.size() == 2);
    CHECK(hg.g2_norm == doctest::Approx(norm(s.g2)));
    CHECK(pc.tangent == 1 + 2);  // fused pass + per-site diagnostics
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(hg.l2[l] == doctest::Approx(hypergrad_l2(s.g2, s.params, l)));
        CHECK(hg.l2_mixed_norm[l] == doctest::Approx(std::sqrt(dot(s.params.w[l], s.params.w[l]))));
        // cosine definition: G = cos * ||g2|| * ||mixed||
        if (hg.l2_mixed_norm[l] > 0.0)
            CHECK(hg.l2_cosine[l] * hg.g2_norm * hg.l2_mixed_norm[l] == doctest::Approx(hg.l2[l]));
        if (hg.noise_mixed_norm[l] > 0.0)
            CHECK(std::abs(hg.noise_cosine[l]) <= 1.0 + 1e-9);
    }

    // L2-only: no tangent passes at all.
    PassCounters pc2;
    const HyperGradient l2_only =
        compute_hypergradient(s.g2, s.trace, s.params, s.loss1, s.cache, false, true, false, &pc2);
    CHECK(pc2.tangent == 0);
    CHECK(l2_only.noise == std::vector<double>{0.0, 0.0});
}

TEST_CASE("descent property: small step along G does not increase C2") {
    // theta' = theta - eta1 * grad(C~1)(lambda + delta G); C2(theta') must not
    // increase versus delta = 0, within 1e-6 absolute.
    const Setup s = make_setup({5, 6, 4}, false, 8, 0.3, 0.02, 97);
    const HyperGradient hg =
        compute_hypergradient(s.g2, s.trace, s.params, s.loss1, s.cache, true, true, false);

    const double eta1 = 1e-2;
    auto c2_after_step = [&](double delta) {
        HyperParams h = s.hypers;
        for (std::size_t l = 0; l < h.noise_std.size(); ++l) h.noise_std[l] += delta * hg.noise[l];
        for (std::size_t l = 0; l < h.l2.size(); ++l) h.l2[l] += delta * hg.l2[l];
        BatchNormState bn = s.bn;
        const ForwardTrace tr = forward_noisy(s.params, s.x1, h, s.noise, nullptr, false);
        const Tensor g = softmax_xent(tr.logits, s.y1).grad_logits;
        ModelParams grad = backward(tr, s.params, g);
        add_l2_gradient(s.params, h, grad);
        ModelParams stepped = s.params;
        axpy_inplace(stepped, -eta1, grad);
        const ForwardTrace ev = forward_clean(stepped, s.x2, nullptr);
        return softmax_xent(ev.logits, s.y2).loss;
    };
    const double base = c2_after_step(0.0);
    const double moved = c2_after_step(1e-3);
    CHECK(base - moved >= -1e-6);
}

TEST_CASE("stationarity encoding: G is the cosine-scaled product of norms") {
    // G_i == g2 . dgrad/dlambda_i, so G_i = 0 iff the vectors are orthogonal.
    const Setup s = make_setup({4, 5, 3}, false, 6, 0.2, 0.01, 101);
    const HyperGradient hg =
        compute_hypergradient(s.g2, s.trace, s.params, s.loss1, s.cache, true, true, true);
    for (std::size_t l = 0; l < s.params.layer_count(); ++l) {
        const ModelParams tangent = tangent_grad_wrt_sigma(s.trace, s.params, s.loss1, l, nullptr, &s.cache);
        CHECK(hg.noise[l] == doctest::Approx(dot(s.g2, tangent)).epsilon(1e-9));
        CHECK(hg.noise_mixed_norm[l] == doctest::Approx(norm(tangent)));
        const double reconstructed = hg.noise_cosine[l] * hg.g2_norm * hg.noise_mixed_norm[l];
        CHECK(reconstructed == doctest::Approx(hg.noise[l]).epsilon(1e-9));
    }
}
