#include "tokenforest/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace tokenforest {

namespace {

constexpr std::uint64_t kProtoTag = 0x50524f54;   // prototype streams
constexpr std::uint64_t kDriftTag = 0x44524654;   // drift directions
constexpr std::uint64_t kObjectTag = 0x4f424a45;  // object prototypes
constexpr std::uint64_t kNoiseTag = 0x4e4f4953;   // per-frame noise

std::vector<double> gaussian_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        v[i] = normal(rng);
        norm_sq += v[i] * v[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= norm;
    return v;
}

/// Unit prototypes for every grid cell of a segment, keyed purely by
/// (seed, prototype_seed) so recurrence reproduces them exactly.
std::vector<std::vector<double>> cell_prototypes(std::uint64_t seed, std::uint64_t proto_seed,
                                                 int cells, int dim, std::uint64_t tag) {
    std::mt19937_64 rng(detail::mix_keys({seed, tag, proto_seed}));
    std::vector<std::vector<double>> protos(cells);
    for (int g = 0; g < cells; ++g) protos[g] = gaussian_unit(rng, dim);
    return protos;
}

}  // namespace

int SceneSpec::frames() const {
    int total = 0;
    for (const Segment& s : segments) total += s.length;
    return total;
}

void SceneSpec::validate() const {
    if (grid_h < 1 || grid_w < 1 || dim < 1) {
        throw DataError(DataError::Kind::InvalidHeader, "scene grid and dim must be >= 1");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw DataError(DataError::Kind::InvalidValue, "scene noise must be finite and >= 0");
    }
    if (segments.empty()) {
        throw DataError(DataError::Kind::InvalidHeader, "scene needs at least one segment");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& s = segments[i];
        if (s.length < 1) {
            throw DataError(DataError::Kind::InvalidHeader, "segment length must be >= 1");
        }
        if (!(s.drift >= 0.0) || !std::isfinite(s.drift)) {
            throw DataError(DataError::Kind::InvalidValue, "segment drift must be finite and >= 0");
        }
        if (s.repeat_of && (*s.repeat_of < 0 || *s.repeat_of >= static_cast<int>(i))) {
            throw DataError(DataError::Kind::InvalidHeader,
                            "repeat_of must reference an earlier segment");
        }
        if (s.object) {
            if (s.object->path.empty()) {
                throw DataError(DataError::Kind::InvalidHeader, "object path must be non-empty");
            }
            for (const auto& [row, col] : s.object->path) {
                if (row < 0 || row >= grid_h || col < 0 || col >= grid_w) {
                    throw DataError(DataError::Kind::InvalidHeader,
                                    "object path cell outside the grid");
                }
            }
        }
    }
}

VideoTokens gen_video(const SceneSpec& spec, int frames, int tokens_per_frame, int dim,
                      int grid_h, int grid_w, std::uint64_t seed) {
    spec.validate();
    if (frames != spec.frames() || tokens_per_frame != spec.tokens_per_frame() ||
        dim != spec.dim || grid_h != spec.grid_h || grid_w != spec.grid_w) {
        throw DataError(DataError::Kind::DimensionMismatch,
                        "requested dimensions do not match the scene spec");
    }

    const int cells = tokens_per_frame;
    VideoTokens video;
    video.frames = frames;
    video.tokens_per_frame = cells;
    video.dim = dim;
    video.grid_h = grid_h;
    video.grid_w = grid_w;
    video.data.resize(static_cast<std::size_t>(frames) * cells * dim);

    int frame_base = 0;
    for (std::size_t si = 0; si < spec.segments.size(); ++si) {
        const Segment& seg = spec.segments[si];
        // A repeated segment re-derives the source segment's streams.
        const std::uint64_t proto_seed =
            seg.repeat_of ? spec.segments[*seg.repeat_of].prototype_seed : seg.prototype_seed;

        const auto protos = cell_prototypes(seed, proto_seed, cells, dim, kProtoTag);
        const auto drift_dirs = cell_prototypes(seed, proto_seed, cells, dim, kDriftTag);

        std::vector<double> object_proto;
        if (seg.object) {
            std::mt19937_64 rng(detail::mix_keys({seed, kObjectTag, seg.object->prototype_seed}));
            object_proto = gaussian_unit(rng, dim);
        }

        for (int local = 0; local < seg.length; ++local) {
            const int frame = frame_base + local;
            std::mt19937_64 noise_rng(
                detail::mix_keys({seed, kNoiseTag, static_cast<std::uint64_t>(frame)}));

            int object_cell = -1;
            if (seg.object) {
                const auto& path = seg.object->path;
                const auto [row, col] =
                    path[std::min<std::size_t>(local, path.size() - 1)];
                object_cell = row * grid_w + col;
            }

            for (int g = 0; g < cells; ++g) {
                std::vector<double> token(dim);
                if (g == object_cell) {
                    token = object_proto;
                } else {
                    for (int k = 0; k < dim; ++k) {
                        token[k] = protos[g][k] + seg.drift * local * drift_dirs[g][k];
                    }
                }
                if (spec.noise > 0.0) {
                    const auto eps = gaussian_unit(noise_rng, dim);
                    for (int k = 0; k < dim; ++k) token[k] += spec.noise * eps[k];
                }

                double norm_sq = 0.0;
                for (double x : token) norm_sq += x * x;
                double norm = std::sqrt(norm_sq);
                if (norm < 1e-12) {
                    std::fill(token.begin(), token.end(), 0.0);
                    token[0] = 1.0;
                    norm = 1.0;
                }
                float* out = video.data.data() +
                             (static_cast<std::size_t>(frame) * cells + g) * dim;
                for (int k = 0; k < dim; ++k) {
                    out[k] = static_cast<float>(token[k] / norm);
                }
            }
        }
        frame_base += seg.length;
    }
    return video;
}

VideoTokens gen_video(const SceneSpec& spec, std::uint64_t seed) {
    return gen_video(spec, spec.frames(), spec.tokens_per_frame(), spec.dim, spec.grid_h,
                     spec.grid_w, seed);
}

SceneSpec scene_spec_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(DataError::Kind::InvalidValue,
                        std::string("scene spec is not valid JSON: ") + e.what());
    }

    try {
        SceneSpec spec;
        spec.grid_h = doc.at("grid_h").get<int>();
        spec.grid_w = doc.at("grid_w").get<int>();
        spec.dim = doc.at("dim").get<int>();
        spec.noise = doc.value("noise", 0.0);
        for (const auto& s : doc.at("segments")) {
            Segment seg;
            seg.length = s.at("length").get<int>();
            seg.prototype_seed = s.value("seed", 0ull);
            seg.drift = s.value("drift", 0.0);
            if (s.contains("repeat_of")) seg.repeat_of = s.at("repeat_of").get<int>();
            if (s.contains("object")) {
                ObjectSpec obj;
                obj.prototype_seed = s.at("object").value("seed", 0ull);
                for (const auto& cell : s.at("object").at("path")) {
                    obj.path.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
                }
                seg.object = std::move(obj);
            }
            spec.segments.push_back(std::move(seg));
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataError::Kind::InvalidValue,
                        std::string("scene spec is missing or mistypes a field: ") + e.what());
    }
}

std::string scene_spec_to_json(const SceneSpec& spec) {
    nlohmann::json doc;
    doc["grid_h"] = spec.grid_h;
    doc["grid_w"] = spec.grid_w;
    doc["dim"] = spec.dim;
    doc["noise"] = spec.noise;
    doc["segments"] = nlohmann::json::array();
    for (const Segment& seg : spec.segments) {
        nlohmann::json s;
        s["length"] = seg.length;
        s["seed"] = seg.prototype_seed;
        s["drift"] = seg.drift;
        if (seg.repeat_of) s["repeat_of"] = *seg.repeat_of;
        if (seg.object) {
            s["object"]["seed"] = seg.object->prototype_seed;
            s["object"]["path"] = nlohmann::json::array();
            for (const auto& [row, col] : seg.object->path) {
                s["object"]["path"].push_back({row, col});
            }
        }
        doc["segments"].push_back(std::move(s));
    }
    return doc.dump(2) + "\n";
}

SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataError::Kind::Io, "cannot open scene spec '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return scene_spec_from_json(buf.str());
}

}  // namespace tokenforest
