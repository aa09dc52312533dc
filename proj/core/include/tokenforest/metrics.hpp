#pragma once

#include <string>
#include <vector>

#include "tokenforest/types.hpp"

namespace tokenforest {

/// Baseline pruners used as controls alongside the forest pipeline. The
/// norm-based variants stand in for saliency-driven selection.
enum class BaselineMethod {
    Random,
    PerFrameTopkNorm,
    GlobalTopkNorm,
};

BaselineMethod baseline_from_string(const std::string& name);
std::string baseline_to_string(BaselineMethod method);

/// Mean over retained tokens of the maximum cosine similarity to any other
/// retained token; higher means more redundant. Throws std::invalid_argument
/// for fewer than two retained tokens.
double redundancy_score(const VideoTokens& video, const std::vector<NodeId>& retained);

/// Retained token count per frame, recomputed from the retained ids.
std::vector<int> per_frame_counts(const PruneResult& result, int frames);

/// Fraction of frames holding at least one retained token.
double frame_coverage(const PruneResult& result, int frames);

/// random: uniform sample of K token ids; per_frame_topk: K/T highest-norm
/// tokens per frame with the remainder given to the earliest frames;
/// global_topk: the K highest-norm tokens overall. Norm ties break to the
/// smaller token id. Deterministic given the seed.
PruneResult baseline_prune(const VideoTokens& video, std::int64_t budget, BaselineMethod method,
                           std::uint64_t seed);

/// One row of the comparison grid.
struct MetricsRow {
    std::string spec_id;
    std::string method;
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::int64_t k = 0;
    double redundancy = 0.0;  // NaN when undefined (fewer than 2 tokens)
    double coverage = 0.0;
    double runtime_ms = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

std::string per_frame_csv_header();
/// Rows of (spec_id, method, ratio, seed, frame, count).
std::string per_frame_csv_rows(const std::string& spec_id, const std::string& method,
                               double ratio, std::uint64_t seed, const std::vector<int>& counts);

}  // namespace tokenforest
