#include <catch_amalgamated.hpp>

#include "cindi/metrics.hpp"
#include "support/flow_helpers.hpp"

using namespace cindi;

namespace {

// O(n^2) pair-counting AUC, written independently of the library path
double pair_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
    double wins = 0.0, ties = 0.0;
    std::size_t P = 0, N = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!l[i]) continue;
        ++P;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (l[j]) continue;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) ties += 1.0;
        }
    }
    for (auto v : l) N += v ? 0 : 1;
    return (wins + 0.5 * ties) / (double(P) * double(N));
}

// independent pairwise enumeration for the buffered VUS: positives are
// the labelled points; a point near a range keeps only the ramped-down
// remainder of its negative mass
double enum_vus(const std::vector<double>& s, const std::vector<std::uint8_t>& l,
                std::size_t max_buffer) {
    double acc = 0.0;
    for (std::size_t ell = 0; ell <= max_buffer; ++ell) {
        std::vector<double> w(l.size(), 0.0);
        for (std::size_t t = 0; t < l.size(); ++t) {
            if (l[t]) { w[t] = 1.0; continue; }
            if (ell == 0) continue;
            // distance to the nearest labelled step
            std::size_t best = std::numeric_limits<std::size_t>::max();
            for (std::size_t u = 0; u < l.size(); ++u) {
                if (!l[u]) continue;
                best = std::min(best, t < u ? u - t : t - u);
            }
            if (best < ell) w[t] = 1.0 - double(best) / double(ell);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!l[i]) continue;  // positives stay binary
            for (std::size_t j = 0; j < s.size(); ++j) {
                if (i == j) continue;
                const double mass = 1.0 - w[j];  // discounted negative mass
                den += mass;
                if (s[i] > s[j]) num += mass;
                else if (s[i] == s[j]) num += 0.5 * mass;
            }
        }
        acc += num / den;
    }
    return acc / double(max_buffer + 1);
}

// exhaustive threshold sweep for the equal-error F1
std::pair<double, double> enum_f1(const std::vector<double>& s,
                                  const std::vector<std::uint8_t>& l) {
    std::vector<double> cands = s;
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    cands.push_back(std::numeric_limits<double>::infinity());
    std::size_t P = 0, N = 0;
    for (auto v : l) (v ? P : N) += 1;
    double best_gap = std::numeric_limits<double>::infinity();
    double best_f1 = 0.0, best_thr = 0.0;
    for (double thr : cands) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= thr) {
                if (l[i]) ++tp;
                else ++fp;
            }
        }
        const double tpr = double(tp) / double(P);
        const double fpr = double(fp) / double(N);
        const double gap = std::abs(tpr - (1.0 - fpr));
        if (gap < best_gap) {
            best_gap = gap;
            const std::size_t fn = P - tp;
            best_f1 = (2 * tp + fp + fn) > 0 ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
            best_thr = thr;
        }
    }
    return {best_f1, best_thr};
}

std::pair<std::vector<double>, std::vector<std::uint8_t>> random_case(std::mt19937_64& rng,
                                                                      std::size_t n,
                                                                      bool with_ties) {
    std::uniform_real_distribution<double> sd(0.0, 1.0);
    std::bernoulli_distribution ld(0.3);
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = with_ties ? std::round(sd(rng) * 8.0) / 8.0 : sd(rng);
        l[i] = ld(rng) ? 1 : 0;
        (l[i] ? pos : neg) = true;
    }
    if (!pos) l[0] = 1;
    if (!neg) l[1] = 0;
    return {s, l};
}

}  // namespace

TEST_CASE("auc: perfect and inverted rankings") {
    CHECK(auc_roc({0.1, 0.9}, {0, 1}) == 1.0);
    CHECK(auc_roc({0.9, 0.1}, {0, 1}) == 0.0);
}

TEST_CASE("auc: single-class labels are rejected") {
    CHECK_THROWS_AS(auc_roc({0.1, 0.9}, {1, 1}), Error);
    CHECK_THROWS_AS(auc_roc({0.1, 0.9}, {0, 0}), Error);
}

TEST_CASE("auc: matches brute-force pair counting exactly") {
    auto rng = make_rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        auto [s, l] = random_case(rng, 50, trial % 2 == 0);
        REQUIRE(auc_roc(s, l) == pair_auc(s, l));
    }
}

TEST_CASE("vus: buffer zero collapses to auc exactly") {
    auto rng = make_rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        auto [s, l] = random_case(rng, 40, trial % 2 == 0);
        REQUIRE(vus_roc(s, l, 0) == auc_roc(s, l));
    }
}

TEST_CASE("vus: perfect separation scores one for any buffer") {
    std::vector<double> s(30);
    std::vector<std::uint8_t> l(30, 0);
    for (std::size_t t = 10; t < 14; ++t) l[t] = 1;
    for (std::size_t t = 0; t < 30; ++t) s[t] = l[t] ? 10.0 + double(t) : double(t) * 0.1;
    for (std::size_t buf : {0u, 1u, 4u, 16u}) CHECK(vus_roc(s, l, buf) == 1.0);
}

TEST_CASE("vus: matches an independent enumeration") {
    // 30 steps, one 4-step range, buffer 2
    std::vector<std::uint8_t> l(30, 0);
    for (std::size_t t = 12; t < 16; ++t) l[t] = 1;
    auto rng = make_rng(3);
    std::uniform_real_distribution<double> sd(0.0, 1.0);
    std::vector<double> s(30);
    for (auto& v : s) v = sd(rng);
    for (std::size_t t = 12; t < 16; ++t) s[t] += 0.8;
    CHECK(std::abs(vus_roc(s, l, 2) - enum_vus(s, l, 2)) < 1e-12);

    // and on random label patterns
    for (int trial = 0; trial < 10; ++trial) {
        auto [rs, rl] = random_case(rng, 25, trial % 2 == 0);
        REQUIRE(std::abs(vus_roc(rs, rl, 3) - enum_vus(rs, rl, 3)) < 1e-12);
    }
}

TEST_CASE("f1 at the diagonal: separable scores reach one") {
    std::vector<double> s{0.1, 0.2, 0.3, 0.8, 0.9};
    std::vector<std::uint8_t> l{0, 0, 0, 1, 1};
    auto r = f1_at_diagonal(s, l);
    CHECK(r.f1 == 1.0);
}

TEST_CASE("f1 at the diagonal: all-equal scores degenerate to all-positive") {
    std::vector<double> s{0.5, 0.5, 0.5, 0.5};
    std::vector<std::uint8_t> l{0, 1, 0, 1};
    auto r = f1_at_diagonal(s, l);
    CHECK(r.threshold == 0.5);  // lower threshold wins the tie: predict everything
    CHECK(r.f1 == 2.0 * 2.0 / (2.0 * 2.0 + 2.0));
}

TEST_CASE("f1 at the diagonal: matches exhaustive enumeration") {
    auto rng = make_rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        auto [s, l] = random_case(rng, 40, trial % 2 == 0);
        auto r = f1_at_diagonal(s, l);
        auto [ef1, ethr] = enum_f1(s, l);
        REQUIRE(r.f1 == ef1);
        REQUIRE(r.threshold == ethr);
    }
}

TEST_CASE("metric invariance under strictly monotone score transforms") {
    auto rng = make_rng(5);
    auto [s, l] = random_case(rng, 60, true);
    std::vector<double> warped(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) warped[i] = std::exp(2.0 * s[i]) + s[i];
    CHECK(auc_roc(s, l) == auc_roc(warped, l));
    CHECK(vus_roc(s, l, 5) == vus_roc(warped, l, 5));
    CHECK(f1_at_diagonal(s, l).f1 == f1_at_diagonal(warped, l).f1);
}

TEST_CASE("reconstruction: ground-truth replay gives exactly zero") {
    SynthSpec spec;
    spec.T = 200;
    spec.channels = 2;
    spec.noise_pct = 0.1;
    spec.seed = 6;
    auto s = synth_generate(spec);
    const std::size_t k = 5;
    StepGenerator replay = [&](std::size_t t, const Matrix&) { return s.step(t); };
    const double delta = reconstruction_delta(replay, s.values, s.D, k, {20, 60, 100}, 12);
    CHECK(delta == 0.0);
}

TEST_CASE("reconstruction: constant offset on one channel gives delta squared") {
    SynthSpec spec;
    spec.T = 100;
    spec.channels = 2;
    spec.noise_pct = 0.0;
    spec.seed = 7;
    auto s = synth_generate(spec);
    const double offset = 0.37;
    StepGenerator shifted = [&](std::size_t t, const Matrix&) {
        auto v = s.step(t);
        v[0] += offset;  // single-channel offset: the 1-D equivalent
        return v;
    };
    const double delta = reconstruction_delta(shifted, s.values, s.D, 5, {30}, 2);
    CHECK(std::abs(delta - offset * offset) < 1e-15);
}

TEST_CASE("reconstruction: identity model on zero-mean data sums squared norms") {
    auto rng = make_rng(8);
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t T = 120, D = 2, k = 4, S = 10;
    std::vector<double> values(T * D);
    for (auto& v : values) v = dist(rng);
    FlowHyper h;
    h.channels = D;
    h.window = k;
    h.layers = 2;
    FlowModel m(h, 9);  // identity: every generated step is exactly zero
    std::vector<std::size_t> starts{10, 40, 80};
    const double delta = reconstruction_delta(m, values, starts, S);
    double expect = 0.0;
    for (std::size_t mstart : starts)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t d = 0; d < D; ++d)
                expect += values[(mstart + s) * D + d] * values[(mstart + s) * D + d];
    expect /= double(starts.size() * S);
    CHECK(std::abs(delta - expect) < 1e-12);
}

TEST_CASE("reconstruction: rolled contexts contain the previous predictions") {
    // instrumented generator records every context it receives
    SynthSpec spec;
    spec.T = 60;
    spec.channels = 2;
    spec.noise_pct = 0.2;
    spec.seed = 10;
    auto s = synth_generate(spec);
    const std::size_t k = 4, start = 20, steps = 6;
    std::vector<Matrix> seen;
    StepGenerator gen = [&](std::size_t t, const Matrix& ctx) {
        seen.push_back(ctx);
        return std::vector<double>{double(t), -double(t)};  // distinctive predictions
    };
    auto preds = self_regressive_rollout(s.values, s.D, k, start, steps, gen);
    REQUIRE(seen.size() == steps);
    for (std::size_t j = 1; j < steps; ++j) {
        // context row 0 of step j is the prediction returned at step j-1
        CHECK(seen[j].data[0] == preds[j - 1][0]);
        CHECK(seen[j].data[1] == preds[j - 1][1]);
        // deeper context entries: predictions for earlier steps, then data
        for (std::size_t back = 2; back <= std::min(j, k - 1); ++back) {
            CHECK(seen[j].data[(back - 1) * s.D] == preds[j - back][0]);
        }
    }
    // the first context is untouched original history, most recent first
    for (std::size_t jj = 0; jj < k; ++jj)
        for (std::size_t d = 0; d < s.D; ++d)
            CHECK(seen[0].data[jj * s.D + d] == s.at(start - 1 - jj, d));
}

TEST_CASE("reconstruction: bad starts are rejected by name") {
    std::vector<double> values(100, 0.0);
    StepGenerator zero = [](std::size_t, const Matrix&) { return std::vector<double>{0.0, 0.0}; };
    CHECK_THROWS_WITH(reconstruction_delta(zero, values, 2, 5, {3}, 4),
                      Catch::Matchers::ContainsSubstring("3"));
    CHECK_THROWS_WITH(reconstruction_delta(zero, values, 2, 5, {48}, 10),
                      Catch::Matchers::ContainsSubstring("48"));
}

TEST_CASE("choose_recon_starts: clean spacing and fixed fingerprint") {
    std::vector<std::uint8_t> labels(300, 0);
    for (std::size_t t = 100; t < 120; ++t) labels[t] = 1;
    auto starts = choose_recon_starts(labels, {50, 280}, 10, 20, 5);
    REQUIRE(!starts.empty());
    for (std::size_t m : starts) {
        REQUIRE(m >= 50u);
        REQUIRE(m + 20 <= 280u);
        for (std::size_t t = m - 10; t < m + 20; ++t) REQUIRE(labels[t] == 0);
    }
    auto again = choose_recon_starts(labels, {50, 280}, 10, 20, 5);
    CHECK(starts == again);
}
