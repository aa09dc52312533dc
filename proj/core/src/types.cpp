#include "tokenforest/types.hpp"

#include <algorithm>
#include <cmath>

namespace tokenforest {

SelectorKind selector_from_string(const std::string& name) {
    if (name == "random") return SelectorKind::Random;
    if (name == "norm_saliency") return SelectorKind::NormSaliency;
    if (name == "all") return SelectorKind::All;
    throw std::invalid_argument("unknown selector '" + name +
                                "' (expected random, norm_saliency or all)");
}

std::string selector_to_string(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::Random: return "random";
        case SelectorKind::NormSaliency: return "norm_saliency";
        case SelectorKind::All: return "all";
    }
    throw std::invalid_argument("invalid selector value");
}

void VideoTokens::validate() const {
    if (frames < 1 || tokens_per_frame < 1 || dim < 1) {
        throw DataError(DataError::Kind::InvalidHeader,
                        "video dimensions must all be >= 1");
    }
    if (grid_h < 1 || grid_w < 1 ||
        static_cast<std::int64_t>(grid_h) * grid_w != tokens_per_frame) {
        throw DataError(DataError::Kind::InvalidHeader,
                        "grid_h * grid_w must equal tokens_per_frame");
    }
    const std::size_t expected = total_tokens() * static_cast<std::size_t>(dim);
    if (data.size() != expected) {
        throw DataError(DataError::Kind::SizeMismatch,
                        "embedding payload does not match declared dimensions");
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw DataError(DataError::Kind::InvalidValue,
                            "embeddings contain a non-finite value");
        }
    }
}

int NodeSet::index_of(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const Node& n, NodeId v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) return -1;
    return static_cast<int>(it - nodes.begin());
}

std::size_t Forest::node_count() const {
    std::size_t n = orphans.size();
    for (const Tree& t : trees) n += t.members.size();
    return n;
}

void PruneConfig::validate() const {
    if (!(tau_s >= -1.0 && tau_s <= 1.0)) {
        throw std::invalid_argument("tau_s must lie in [-1, 1]");
    }
    const double sqrt2 = std::sqrt(2.0);
    if (!(tau_p >= 0.0 && tau_p <= sqrt2)) {
        throw std::invalid_argument("tau_p must lie in [0, sqrt(2)]");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and >= 0");
    }
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
        throw std::invalid_argument("keep_ratio must lie in (0, 1]");
    }
    if (!(budget_ratio >= 0.0 && budget_ratio < 1.0)) {
        throw std::invalid_argument("budget_ratio must lie in [0, 1)");
    }
}

std::int64_t compute_budget(double budget_ratio, int frames, int tokens_per_frame) {
    const double total = static_cast<double>(frames) * static_cast<double>(tokens_per_frame);
    std::int64_t k = detail::round_half_up((1.0 - budget_ratio) * total);
    if (k < 1) k = 1;
    const std::int64_t cap = static_cast<std::int64_t>(frames) * tokens_per_frame;
    if (k > cap) k = cap;
    return k;
}

int nodes_per_frame(double keep_ratio, int tokens_per_frame, SelectorKind selector) {
    if (selector == SelectorKind::All) return tokens_per_frame;
    std::int64_t n = detail::round_half_up(keep_ratio * tokens_per_frame);
    if (n < 1) n = 1;
    if (n > tokens_per_frame) n = tokens_per_frame;
    return static_cast<int>(n);
}

}  // namespace tokenforest
