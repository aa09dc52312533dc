#include "tokenforest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace tokenforest {

namespace {

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

PruneResult result_from_ids(std::vector<NodeId> ids, const VideoTokens& video) {
    PruneResult result;
    std::sort(ids.begin(), ids.end());
    result.retained = std::move(ids);
    result.frames = video.frames;
    result.tokens_per_frame = video.tokens_per_frame;
    result.per_frame_counts.assign(video.frames, 0);
    for (NodeId id : result.retained) {
        result.per_frame_counts[id / video.tokens_per_frame] += 1;
    }
    result.achieved_budget =
        static_cast<double>(result.retained.size()) / static_cast<double>(video.total_tokens());
    return result;
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

BaselineMethod baseline_from_string(const std::string& name) {
    if (name == "random") return BaselineMethod::Random;
    if (name == "per_frame_topk" || name == "per_frame_topk_norm")
        return BaselineMethod::PerFrameTopkNorm;
    if (name == "global_topk" || name == "global_topk_norm") return BaselineMethod::GlobalTopkNorm;
    throw std::invalid_argument("unknown baseline method '" + name + "'");
}

std::string baseline_to_string(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::Random: return "random";
        case BaselineMethod::PerFrameTopkNorm: return "per_frame_topk";
        case BaselineMethod::GlobalTopkNorm: return "global_topk";
    }
    throw std::invalid_argument("invalid baseline method");
}

double redundancy_score(const VideoTokens& video, const std::vector<NodeId>& retained) {
    const std::size_t n = retained.size();
    if (n < 2) {
        throw std::invalid_argument("redundancy_score needs at least 2 retained tokens");
    }

    // Normalize the retained embeddings; zero-norm tokens contribute zero
    // similarity everywhere.
    const int dim = video.dim;
    std::vector<float> unit(n * dim, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        const NodeId id = retained[i];
        const float* emb = video.token(static_cast<int>(id / video.tokens_per_frame),
                                       static_cast<int>(id % video.tokens_per_frame));
        const double norm = token_norm(emb, dim);
        if (norm < 1e-12) continue;
        for (int k = 0; k < dim; ++k) {
            unit[i * dim + k] = static_cast<float>(emb[k] / norm);
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double s =
                detail::unit_dot(unit.data() + i * dim, unit.data() + j * dim, dim);
            best = std::max(best, s);
        }
        total += best;
    }
    return total / static_cast<double>(n);
}

std::vector<int> per_frame_counts(const PruneResult& result, int frames) {
    std::vector<int> counts(frames, 0);
    for (NodeId id : result.retained) {
        const int frame = static_cast<int>(id / result.tokens_per_frame);
        if (frame < 0 || frame >= frames) {
            throw std::invalid_argument("retained id outside the frame range");
        }
        counts[frame] += 1;
    }
    return counts;
}

double frame_coverage(const PruneResult& result, int frames) {
    const std::vector<int> counts = per_frame_counts(result, frames);
    int covered = 0;
    for (int c : counts) covered += c > 0 ? 1 : 0;
    return static_cast<double>(covered) / static_cast<double>(frames);
}

PruneResult baseline_prune(const VideoTokens& video, std::int64_t budget, BaselineMethod method,
                           std::uint64_t seed) {
    video.validate();
    const std::int64_t total = static_cast<std::int64_t>(video.total_tokens());
    if (budget < 1 || budget > total) {
        throw std::invalid_argument("baseline budget must lie in [1, T*N]");
    }
    if (budget == total) {
        std::vector<NodeId> all(total);
        std::iota(all.begin(), all.end(), NodeId{0});
        return result_from_ids(std::move(all), video);
    }

    std::vector<NodeId> picked;
    picked.reserve(budget);

    switch (method) {
        case BaselineMethod::Random: {
            std::mt19937_64 rng(detail::mix_keys({seed, 0xba5e11ull}));
            std::vector<NodeId> ids(total);
            std::iota(ids.begin(), ids.end(), NodeId{0});
            for (std::int64_t i = 0; i < budget; ++i) {
                const std::int64_t j =
                    i + static_cast<std::int64_t>(bounded(rng, static_cast<std::uint64_t>(total - i)));
                std::swap(ids[i], ids[j]);
            }
            picked.assign(ids.begin(), ids.begin() + budget);
            break;
        }
        case BaselineMethod::PerFrameTopkNorm: {
            const std::int64_t base = budget / video.frames;
            const std::int64_t remainder = budget % video.frames;
            for (int t = 0; t < video.frames; ++t) {
                const std::int64_t want = base + (t < remainder ? 1 : 0);
                std::vector<int> idx(video.tokens_per_frame);
                std::iota(idx.begin(), idx.end(), 0);
                std::vector<double> norms(video.tokens_per_frame);
                for (int g = 0; g < video.tokens_per_frame; ++g) {
                    norms[g] = token_norm(video.token(t, g), video.dim);
                }
                std::sort(idx.begin(), idx.end(), [&norms](int a, int b) {
                    if (norms[a] != norms[b]) return norms[a] > norms[b];
                    return a < b;
                });
                for (std::int64_t i = 0; i < want; ++i) {
                    picked.push_back(static_cast<NodeId>(t) * video.tokens_per_frame + idx[i]);
                }
            }
            break;
        }
        case BaselineMethod::GlobalTopkNorm: {
            std::vector<NodeId> ids(total);
            std::iota(ids.begin(), ids.end(), NodeId{0});
            std::vector<double> norms(total);
            for (std::int64_t id = 0; id < total; ++id) {
                norms[id] = token_norm(video.token(static_cast<int>(id / video.tokens_per_frame),
                                                   static_cast<int>(id % video.tokens_per_frame)),
                                       video.dim);
            }
            std::sort(ids.begin(), ids.end(), [&norms](NodeId a, NodeId b) {
                if (norms[a] != norms[b]) return norms[a] > norms[b];
                return a < b;
            });
            picked.assign(ids.begin(), ids.begin() + budget);
            break;
        }
    }
    return result_from_ids(std::move(picked), video);
}

std::string metrics_csv_header() {
    return "spec_id,method,ratio,seed,K,redundancy,coverage,runtime_ms";
}

std::string metrics_csv_row(const MetricsRow& row) {
    std::string out;
    out += row.spec_id;
    out += ',';
    out += row.method;
    out += ',';
    out += format_double(row.ratio);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += std::to_string(row.k);
    out += ',';
    out += format_double(row.redundancy);
    out += ',';
    out += format_double(row.coverage);
    out += ',';
    out += format_double(row.runtime_ms);
    return out;
}

std::string per_frame_csv_header() { return "spec_id,method,ratio,seed,frame,count"; }

std::string per_frame_csv_rows(const std::string& spec_id, const std::string& method,
                               double ratio, std::uint64_t seed, const std::vector<int>& counts) {
    std::string out;
    for (std::size_t t = 0; t < counts.size(); ++t) {
        out += spec_id;
        out += ',';
        out += method;
        out += ',';
        out += format_double(ratio);
        out += ',';
        out += std::to_string(seed);
        out += ',';
        out += std::to_string(t);
        out += ',';
        out += std::to_string(counts[t]);
        out += '\n';
    }
    return out;
}

}  // namespace tokenforest
