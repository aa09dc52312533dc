#include "tokenforest/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace tokenforest {

namespace {

/// Unbiased bounded draw from a 64-bit generator (rejection method).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % n;
    }
}

double token_norm(const float* v, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        acc += static_cast<double>(v[i]) * static_cast<double>(v[i]);
    }
    return std::sqrt(acc);
}

std::vector<int> pick_random(int n_tokens, int n_keep, std::uint64_t seed, int frame) {
    std::mt19937_64 rng(detail::mix_keys({seed, 0x5e1ec7u, static_cast<std::uint64_t>(frame)}));
    std::vector<int> idx(n_tokens);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_keep; ++i) {
        const int j = i + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(n_tokens - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n_keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<int> pick_by_norm(const VideoTokens& video, int frame, int n_keep) {
    const int n = video.tokens_per_frame;
    std::vector<double> norms(n);
    bool any_nonzero = false;
    for (int g = 0; g < n; ++g) {
        norms[g] = token_norm(video.token(frame, g), video.dim);
        any_nonzero = any_nonzero || norms[g] > 0.0;
    }
    if (!any_nonzero) {
        throw DataError(DataError::Kind::DegenerateInput,
                        "degenerate frame " + std::to_string(frame) +
                            ": all embeddings have zero norm");
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&norms](int a, int b) {
        if (norms[a] != norms[b]) return norms[a] > norms[b];
        return a < b;
    });
    idx.resize(n_keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

NodeSet select_nodes(const VideoTokens& video, double keep_ratio, SelectorKind selector,
                     std::uint64_t seed) {
    video.validate();
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
        throw std::invalid_argument("keep_ratio must lie in (0, 1]");
    }

    const int n_keep = nodes_per_frame(keep_ratio, video.tokens_per_frame, selector);

    NodeSet out;
    out.frames = video.frames;
    out.tokens_per_frame = video.tokens_per_frame;
    out.dim = video.dim;
    out.nodes.reserve(static_cast<std::size_t>(video.frames) * n_keep);
    out.embeddings.reserve(out.nodes.capacity() * video.dim);
    out.unit_embeddings.reserve(out.nodes.capacity() * video.dim);

    for (int t = 0; t < video.frames; ++t) {
        std::vector<int> picked;
        switch (selector) {
            case SelectorKind::All: {
                picked.resize(video.tokens_per_frame);
                std::iota(picked.begin(), picked.end(), 0);
                break;
            }
            case SelectorKind::Random:
                picked = pick_random(video.tokens_per_frame, n_keep, seed, t);
                break;
            case SelectorKind::NormSaliency:
                picked = pick_by_norm(video, t, n_keep);
                break;
        }

        for (int g : picked) {
            Node node;
            node.id = static_cast<NodeId>(t) * video.tokens_per_frame + g;
            node.frame = t;
            node.grid_index = g;
            const int row = g / video.grid_w;
            const int col = g % video.grid_w;
            node.x = (row + 0.5) / video.grid_h;
            node.y = (col + 0.5) / video.grid_w;

            const float* emb = video.token(t, g);
            const double norm = token_norm(emb, video.dim);
            if (norm < 1e-12) {
                throw DataError(DataError::Kind::DegenerateInput,
                                "zero-norm embedding selected at frame " + std::to_string(t) +
                                    ", grid index " + std::to_string(g));
            }
            out.nodes.push_back(node);
            for (int k = 0; k < video.dim; ++k) {
                out.embeddings.push_back(emb[k]);
                out.unit_embeddings.push_back(static_cast<float>(emb[k] / norm));
            }
        }
    }
    return out;
}

}  // namespace tokenforest
