// Shared helpers for generating random flow models in tests.

#pragma once

#include "cindi/flow.hpp"

namespace test_support {

// Randomize every parameter. `final_scale` < 1 keeps the affine outputs
// gentle so the learned density stays concentrated near the origin
// (needed when integrating over a fixed box).
inline void randomize_flow_params(cindi::FlowModel& m, std::uint64_t seed, double scale = 0.4,
                                  double final_scale = 1.0) {
    auto rng = cindi::make_rng(seed, 77);
    std::normal_distribution<double> dist(0.0, scale);
    auto& store = m.params();
    for (std::size_t e = 0; e < store.entries.size(); ++e) {
        const auto& entry = store.entries[e];
        const bool final_layer = entry.name.find(".w2") != std::string::npos ||
                                 entry.name.find(".b2") != std::string::npos;
        const double f = final_layer ? final_scale : 1.0;
        for (std::size_t i = 0; i < entry.count(); ++i)
            store.values[entry.offset + i] = dist(rng) * f;
    }
}

inline cindi::Matrix random_context(const cindi::FlowHyper& h, std::mt19937_64& rng,
                                    double span = 2.0) {
    cindi::Matrix w(h.window, h.channels);
    std::uniform_real_distribution<double> dist(-span, span);
    for (auto& v : w.data) v = dist(rng);
    return w;
}

}  // namespace test_support
