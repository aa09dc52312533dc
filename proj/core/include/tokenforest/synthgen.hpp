#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tokenforest/types.hpp"

namespace tokenforest {

/// A distinct prototype that moves along a grid path, one step per frame
/// (clamping at the final cell).
struct ObjectSpec {
    std::uint64_t prototype_seed = 0;
    std::vector<std::pair<int, int>> path;  // (row, col) cells

    bool operator==(const ObjectSpec&) const = default;
};

/// One scene segment. Prototypes are unit vectors drawn per grid cell from
/// prototype_seed; repeat_of reuses the prototypes (and drift directions)
/// of an earlier segment, modelling scene recurrence.
struct Segment {
    int length = 1;
    std::uint64_t prototype_seed = 0;
    double drift = 0.0;  // per-frame perturbation magnitude
    std::optional<int> repeat_of;
    std::optional<ObjectSpec> object;

    bool operator==(const Segment&) const = default;
};

/// Synthetic video description: segment lengths sum to the frame count,
/// `noise` is the per-token perturbation magnitude applied to every frame.
struct SceneSpec {
    int grid_h = 1;
    int grid_w = 1;
    int dim = 1;
    double noise = 0.0;
    std::vector<Segment> segments;

    int frames() const;
    int tokens_per_frame() const { return grid_h * grid_w; }

    void validate() const;

    bool operator==(const SceneSpec&) const = default;
};

/// Parses a scene spec from its JSON file (schema documented in README).
SceneSpec load_scene_spec(const std::string& path);
SceneSpec scene_spec_from_json(const std::string& text);
std::string scene_spec_to_json(const SceneSpec& spec);

/// Generates the token stream for a scene. Frame t of a segment is
/// prototype + drift*t_local (along a fixed per-cell direction) + per-token
/// noise, renormalized to unit length. The explicit dimensions must match
/// the spec; mismatches raise DataError.
VideoTokens gen_video(const SceneSpec& spec, int frames, int tokens_per_frame, int dim,
                      int grid_h, int grid_w, std::uint64_t seed);

/// Convenience overload taking all dimensions from the spec.
VideoTokens gen_video(const SceneSpec& spec, std::uint64_t seed);

}  // namespace tokenforest
