// Conditional RealNVP-style normalizing flow: a stack of affine coupling
// layers with alternating channel masks, conditioned on an encoded temporal
// context, over a standard-normal base distribution. Gives the exact
// conditional log-likelihood in the normalizing direction and generation
// in the inverse direction.

#pragma once

#include <fstream>

#include <json.hpp>

#include "cindi/ndcore.hpp"

namespace cindi {

enum class EncoderKind { Base, Mlp, Cnn };

inline const char* encoder_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::Base: return "base";
        case EncoderKind::Mlp: return "mlp";
        case EncoderKind::Cnn: return "cnn";
    }
    return "?";
}

inline EncoderKind encoder_from(const std::string& s) {
    if (s == "base") return EncoderKind::Base;
    if (s == "mlp") return EncoderKind::Mlp;
    if (s == "cnn") return EncoderKind::Cnn;
    throw Error("unknown encoder kind: " + s);
}

struct FlowHyper {
    std::size_t channels = 2;    // D
    std::size_t window = 16;     // k
    std::size_t layers = 4;      // coupling layer count N
    std::size_t hidden = 64;     // conditioner hidden width
    EncoderKind encoder = EncoderKind::Base;
    std::size_t embedding = 32;  // context embedding (ignored for base)
    std::size_t enc_hidden = 64; // mlp encoder hidden width
    std::size_t cnn_filters = 16;
    std::size_t cnn_kernel = 3;
    double s_max = 2.0;          // scale clamp: s = s_max * tanh(s_hat / s_max)

    std::size_t embedding_dim() const {
        return encoder == EncoderKind::Base ? window * channels : embedding;
    }
};

// Handles into a forward tape, one row per batch sample.
struct FlowGraph {
    Tape::Id x = 0;       // B x D input
    Tape::Id ctx = 0;     // B x (k*D) flattened context
    Tape::Id z = 0;       // B x D normalized output
    Tape::Id logdet = 0;  // B x 1
    Tape::Id loglik = 0;  // B x 1, log p_Z(z) + logdet
};

class FlowModel {
public:
    FlowModel() = default;

    FlowModel(FlowHyper hyper, std::uint64_t seed) : hyper_(hyper) {
        if (hyper_.channels < 2) throw Error("flow: needs at least 2 channels");
        if (hyper_.layers < 1) throw Error("flow: needs at least 1 layer");
        if (hyper_.encoder == EncoderKind::Cnn && hyper_.window < hyper_.cnn_kernel)
            throw Error("flow: cnn encoder needs window >= kernel size");
        build_masks();
        register_params(seed);
    }

    const FlowHyper& hyper() const { return hyper_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    const std::vector<std::size_t>& active_mask(std::size_t layer) const {
        return layers_[layer].active;
    }
    const std::vector<std::size_t>& passive_mask(std::size_t layer) const {
        return layers_[layer].passive;
    }

    // ------------------------------------------------------------------
    // normalizing direction (graph on a caller-supplied tape)

    FlowGraph build_forward(Tape& tape, const Matrix& x, const Matrix& ctx) const {
        check_shapes(x, ctx);
        FlowGraph g;
        g.x = tape.input(x);
        g.ctx = tape.input(ctx);
        const std::size_t B = x.rows;
        Tape::Id h = encode(tape, g.ctx, B);
        Tape::Id cur = g.x;
        Tape::Id logdet = tape.constant(B, 1, 0.0);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const LayerSlots& L = layers_[i];
            Tape::Id passive = tape.select_cols(cur, L.passive);
            Tape::Id active = tape.select_cols(cur, L.active);
            auto [s, t] = conditioner(tape, L, passive, h);
            Tape::Id scaled = tape.mul(active, tape.exp(s));
            Tape::Id transformed = tape.add(scaled, t);
            Tape::Id stacked = tape.concat_cols(passive, transformed);
            cur = tape.select_cols(stacked, L.unshuffle);
            logdet = tape.add(logdet, tape.row_sum(s));
            if (!tape.value(cur).all_finite())
                throw Error("flow forward: non-finite values after layer " + std::to_string(i));
        }
        g.z = cur;
        g.logdet = logdet;

        // log p_Z(z) = -(D/2) ln(2 pi) - 1/2 ||z||^2
        const double d = static_cast<double>(hyper_.channels);
        Tape::Id sq = tape.mul(g.z, g.z);
        Tape::Id base = tape.shift(tape.scale(tape.row_sum(sq), -0.5),
                                   -0.5 * d * std::log(2.0 * M_PI));
        g.loglik = tape.add(base, g.logdet);
        return g;
    }

    // single observation: z and total log-det
    std::pair<std::vector<double>, double> forward(const std::vector<double>& x,
                                                   const Matrix& w) const {
        Tape tape(&params_);
        FlowGraph g = build_forward(tape, Matrix::row(x), flatten_context(w));
        return {tape.value(g.z).data, tape.value(g.logdet).data[0]};
    }

    double log_likelihood(const std::vector<double>& x, const Matrix& w) const {
        Tape tape(&params_);
        FlowGraph g = build_forward(tape, Matrix::row(x), flatten_context(w));
        return tape.value(g.loglik).data[0];
    }

    // per-row log-likelihoods for a prebuilt batch (ctx already flattened)
    std::vector<double> log_likelihood_batch(const Matrix& x, const Matrix& ctx) const {
        std::vector<double> out;
        out.reserve(x.rows);
        const std::size_t chunk = 4096;
        for (std::size_t lo = 0; lo < x.rows; lo += chunk) {
            const std::size_t hi = std::min(x.rows, lo + chunk);
            Matrix xs(hi - lo, x.cols), cs(hi - lo, ctx.cols);
            std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(lo * x.cols),
                      x.data.begin() + static_cast<std::ptrdiff_t>(hi * x.cols), xs.data.begin());
            std::copy(ctx.data.begin() + static_cast<std::ptrdiff_t>(lo * ctx.cols),
                      ctx.data.begin() + static_cast<std::ptrdiff_t>(hi * ctx.cols),
                      cs.data.begin());
            Tape tape(&params_);
            FlowGraph g = build_forward(tape, xs, cs);
            const Matrix& ll = tape.value(g.loglik);
            out.insert(out.end(), ll.data.begin(), ll.data.end());
        }
        return out;
    }

    // ------------------------------------------------------------------
    // generative direction

    std::vector<double> inverse(const std::vector<double>& z, const Matrix& w) const {
        Matrix zs = Matrix::row(z);
        Matrix out = inverse_batch(zs, flatten_context(w));
        return out.data;
    }

    Matrix inverse_batch(const Matrix& z, const Matrix& ctx) const {
        check_shapes(z, ctx);
        const std::size_t B = z.rows;
        Tape enc_tape(&params_);
        Tape::Id ctx_id = enc_tape.input(ctx);
        Matrix h = enc_tape.value(encode(enc_tape, ctx_id, B));

        Matrix cur = z;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            const LayerSlots& L = layers_[i];
            Matrix passive(B, L.passive.size()), active(B, L.active.size());
            for (std::size_t r = 0; r < B; ++r) {
                for (std::size_t j = 0; j < L.passive.size(); ++j)
                    passive.at(r, j) = cur.at(r, L.passive[j]);
                for (std::size_t j = 0; j < L.active.size(); ++j)
                    active.at(r, j) = cur.at(r, L.active[j]);
            }
            Tape tape(&params_);
            Tape::Id pid = tape.input(passive);
            Tape::Id hid = tape.input(h);
            auto [s_id, t_id] = conditioner(tape, L, pid, hid);
            const Matrix& s = tape.value(s_id);
            const Matrix& t = tape.value(t_id);
            for (std::size_t r = 0; r < B; ++r)
                for (std::size_t j = 0; j < L.active.size(); ++j) {
                    const double v = (active.at(r, j) - t.at(r, j)) * std::exp(-s.at(r, j));
                    cur.at(r, L.active[j]) = v;
                }
            if (!cur.all_finite())
                throw Error("flow inverse: non-finite values after layer " + std::to_string(i));
        }
        return cur;
    }

    enum class ZChoice { Mean, Random };

    std::vector<double> sample(const Matrix& w, ZChoice choice,
                               std::uint64_t seed = 0) const {
        std::vector<double> z(hyper_.channels, 0.0);
        if (choice == ZChoice::Random) {
            auto rng = make_rng(seed, 5);
            std::normal_distribution<double> dist(0.0, 1.0);
            for (auto& v : z) v = dist(rng);
        }
        return inverse(z, w);
    }

    Matrix flatten_context(const Matrix& w) const {
        if (w.rows != hyper_.window || w.cols != hyper_.channels)
            throw Error("flow: context must be k x D = " + std::to_string(hyper_.window) + "x" +
                        std::to_string(hyper_.channels));
        Matrix flat(1, w.rows * w.cols);
        flat.data = w.data;
        return flat;
    }

    // ------------------------------------------------------------------
    // checkpointing

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format"] = "cindi-flow-v1";
        j["hyper"] = {{"channels", hyper_.channels},
                      {"window", hyper_.window},
                      {"layers", hyper_.layers},
                      {"hidden", hyper_.hidden},
                      {"encoder", encoder_name(hyper_.encoder)},
                      {"embedding", hyper_.embedding},
                      {"enc_hidden", hyper_.enc_hidden},
                      {"cnn_filters", hyper_.cnn_filters},
                      {"cnn_kernel", hyper_.cnn_kernel},
                      {"s_max", hyper_.s_max}};
        nlohmann::json masks = nlohmann::json::array();
        for (const auto& L : layers_) masks.push_back({{"active", L.active}, {"passive", L.passive}});
        j["masks"] = masks;
        j["params"] = params_.values;
        return j;
    }

    static FlowModel from_json(const nlohmann::json& j) {
        if (j.value("format", "") != "cindi-flow-v1")
            throw Error("checkpoint: unknown format " + j.value("format", "(none)"));
        const auto& h = j.at("hyper");
        FlowHyper hy;
        hy.channels = h.at("channels").get<std::size_t>();
        hy.window = h.at("window").get<std::size_t>();
        hy.layers = h.at("layers").get<std::size_t>();
        hy.hidden = h.at("hidden").get<std::size_t>();
        hy.encoder = encoder_from(h.at("encoder").get<std::string>());
        hy.embedding = h.at("embedding").get<std::size_t>();
        hy.enc_hidden = h.at("enc_hidden").get<std::size_t>();
        hy.cnn_filters = h.at("cnn_filters").get<std::size_t>();
        hy.cnn_kernel = h.at("cnn_kernel").get<std::size_t>();
        hy.s_max = h.at("s_max").get<double>();
        FlowModel m(hy, 0);
        auto vals = j.at("params").get<std::vector<double>>();
        if (vals.size() != m.params_.values.size())
            throw Error("checkpoint: parameter count mismatch");
        m.params_.values = std::move(vals);
        const auto& masks = j.at("masks");
        for (std::size_t i = 0; i < m.layers_.size(); ++i) {
            if (masks[i].at("active").get<std::vector<std::size_t>>() != m.layers_[i].active)
                throw Error("checkpoint: mask layout mismatch at layer " + std::to_string(i));
        }
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("checkpoint: cannot write " + path);
        out << to_json().dump();
    }

    static FlowModel load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("checkpoint: cannot open " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

private:
    struct LayerSlots {
        std::vector<std::size_t> active;
        std::vector<std::size_t> passive;
        std::vector<std::size_t> unshuffle;  // restores natural channel order
        std::size_t w1s, b1s, w2s, b2s;
        std::size_t w1t, b1t, w2t, b2t;
    };

    struct EncoderSlots {
        std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // mlp / cnn head
        std::size_t wc = 0, bc = 0;                  // cnn conv kernel
    };

    void check_shapes(const Matrix& x, const Matrix& ctx) const {
        if (x.cols != hyper_.channels)
            throw Error("flow: observation has " + std::to_string(x.cols) + " channels, expected " +
                        std::to_string(hyper_.channels));
        if (ctx.cols != hyper_.window * hyper_.channels || ctx.rows != x.rows)
            throw Error("flow: context batch must be B x (k*D)");
    }

    // Alternating parity masks. Layer 0 keeps even channels passive and
    // transforms odd channels; layer 1 swaps, and so on.
    void build_masks() {
        layers_.resize(hyper_.layers);
        const std::size_t D = hyper_.channels;
        for (std::size_t i = 0; i < hyper_.layers; ++i) {
            LayerSlots& L = layers_[i];
            for (std::size_t c = 0; c < D; ++c) {
                if (c % 2 == i % 2)
                    L.passive.push_back(c);
                else
                    L.active.push_back(c);
            }
            L.unshuffle.resize(D);
            for (std::size_t p = 0; p < L.passive.size(); ++p) L.unshuffle[L.passive[p]] = p;
            for (std::size_t a = 0; a < L.active.size(); ++a)
                L.unshuffle[L.active[a]] = L.passive.size() + a;
        }
    }

    void register_params(std::uint64_t seed) {
        auto rng = make_rng(seed, 3);
        const std::size_t E = hyper_.embedding_dim();
        if (hyper_.encoder == EncoderKind::Mlp) {
            const std::size_t in = hyper_.window * hyper_.channels;
            enc_.w1 = params_.add("enc.w1",
                                  Matrix::randn(in, hyper_.enc_hidden, rng, 1.0 / std::sqrt(double(in))));
            enc_.b1 = params_.add("enc.b1", 1, hyper_.enc_hidden);
            enc_.w2 = params_.add("enc.w2", Matrix::randn(hyper_.enc_hidden, E, rng,
                                                          1.0 / std::sqrt(double(hyper_.enc_hidden))));
            enc_.b2 = params_.add("enc.b2", 1, E);
        } else if (hyper_.encoder == EncoderKind::Cnn) {
            const std::size_t kin = hyper_.cnn_kernel * hyper_.channels;
            enc_.wc = params_.add("enc.conv.w",
                                  Matrix::randn(kin, hyper_.cnn_filters, rng, 1.0 / std::sqrt(double(kin))));
            enc_.bc = params_.add("enc.conv.b", 1, hyper_.cnn_filters);
            const std::size_t flat = (hyper_.window - hyper_.cnn_kernel + 1) * hyper_.cnn_filters;
            enc_.w2 = params_.add("enc.out.w",
                                  Matrix::randn(flat, E, rng, 1.0 / std::sqrt(double(flat))));
            enc_.b2 = params_.add("enc.out.b", 1, E);
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            LayerSlots& L = layers_[i];
            const std::size_t in = L.passive.size() + E;
            const std::size_t out = L.active.size();
            const std::string p = "layer" + std::to_string(i);
            const double sd = 1.0 / std::sqrt(static_cast<double>(in));
            L.w1s = params_.add(p + ".s.w1", Matrix::randn(in, hyper_.hidden, rng, sd));
            L.b1s = params_.add(p + ".s.b1", 1, hyper_.hidden);
            // final layers start at zero so the flow begins as the identity map
            L.w2s = params_.add(p + ".s.w2", hyper_.hidden, out);
            L.b2s = params_.add(p + ".s.b2", 1, out);
            L.w1t = params_.add(p + ".t.w1", Matrix::randn(in, hyper_.hidden, rng, sd));
            L.b1t = params_.add(p + ".t.b1", 1, hyper_.hidden);
            L.w2t = params_.add(p + ".t.w2", hyper_.hidden, out);
            L.b2t = params_.add(p + ".t.b2", 1, out);
        }
    }

    Tape::Id encode(Tape& tape, Tape::Id ctx, std::size_t batch) const {
        (void)batch;
        switch (hyper_.encoder) {
            case EncoderKind::Base:
                return ctx;  // identity on the flattened k x D context
            case EncoderKind::Mlp: {
                Tape::Id h = tape.tanh(tape.affine(ctx, tape.param(enc_.w1), tape.param(enc_.b1)));
                return tape.affine(h, tape.param(enc_.w2), tape.param(enc_.b2));
            }
            case EncoderKind::Cnn: {
                // valid 1-D convolution over the time axis via column
                // gathers; one shared kernel across positions
                const std::size_t D = hyper_.channels;
                Tape::Id wc = tape.param(enc_.wc);
                Tape::Id bc = tape.param(enc_.bc);
                Tape::Id acc = 0;
                bool first = true;
                const std::size_t positions = hyper_.window - hyper_.cnn_kernel + 1;
                for (std::size_t pos = 0; pos < positions; ++pos) {
                    std::vector<std::size_t> idx(hyper_.cnn_kernel * D);
                    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = pos * D + j;
                    Tape::Id win = tape.select_cols(ctx, idx);
                    Tape::Id conv = tape.affine(win, wc, bc);
                    acc = first ? conv : tape.concat_cols(acc, conv);
                    first = false;
                }
                Tape::Id h = tape.tanh(acc);
                return tape.affine(h, tape.param(enc_.w2), tape.param(enc_.b2));
            }
        }
        throw Error("flow: bad encoder kind");
    }

    // Shared by both directions: scale (clamped) and shift of the active
    // channels, given passive channels and the context embedding.
    std::pair<Tape::Id, Tape::Id> conditioner(Tape& tape, const LayerSlots& L, Tape::Id passive,
                                              Tape::Id h) const {
        Tape::Id in = tape.concat_cols(passive, h);
        Tape::Id hs = tape.tanh(tape.affine(in, tape.param(L.w1s), tape.param(L.b1s)));
        Tape::Id s_hat = tape.affine(hs, tape.param(L.w2s), tape.param(L.b2s));
        Tape::Id s = tape.scale(tape.tanh(tape.scale(s_hat, 1.0 / hyper_.s_max)), hyper_.s_max);
        Tape::Id ht = tape.tanh(tape.affine(in, tape.param(L.w1t), tape.param(L.b1t)));
        Tape::Id t = tape.affine(ht, tape.param(L.w2t), tape.param(L.b2t));
        return {s, t};
    }

    FlowHyper hyper_;
    ParamStore params_;
    std::vector<LayerSlots> layers_;
    EncoderSlots enc_;
};

}  // namespace cindi
