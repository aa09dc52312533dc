#include "tokenforest/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tokenforest {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'O', 'K'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 5 * 4;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    put_u32(out, bits);
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataError::Kind::Io, "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(DataError::Kind::Io, "cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw DataError(DataError::Kind::Io, "write to '" + path + "' failed");
    }
}

nlohmann::json config_to_json(const PruneConfig& config) {
    nlohmann::json j;
    j["tau_s"] = config.tau_s;
    j["tau_p"] = config.tau_p;
    j["lambda"] = config.lambda;
    j["keep_ratio"] = config.keep_ratio;
    j["selector"] = selector_to_string(config.selector);
    j["budget_ratio"] = config.budget_ratio;
    j["seed"] = config.seed;
    return j;
}

PruneConfig config_from_json(const nlohmann::json& j) {
    PruneConfig config;
    config.tau_s = j.at("tau_s").get<double>();
    config.tau_p = j.at("tau_p").get<double>();
    config.lambda = j.at("lambda").get<double>();
    config.keep_ratio = j.at("keep_ratio").get<double>();
    config.selector = selector_from_string(j.at("selector").get<std::string>());
    config.budget_ratio = j.at("budget_ratio").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    return config;
}

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(DataError::Kind::InvalidValue,
                        std::string(what) + " is not valid JSON: " + e.what());
    }
}

}  // namespace

void write_vtok(const VideoTokens& video, const std::string& path) {
    video.validate();
    std::string out;
    out.reserve(kHeaderBytes + video.data.size() * 4);
    out.append(kMagic, 4);
    put_u16(out, kVtokVersion);
    put_u32(out, static_cast<std::uint32_t>(video.frames));
    put_u32(out, static_cast<std::uint32_t>(video.tokens_per_frame));
    put_u32(out, static_cast<std::uint32_t>(video.dim));
    put_u32(out, static_cast<std::uint32_t>(video.grid_h));
    put_u32(out, static_cast<std::uint32_t>(video.grid_w));
    for (float v : video.data) put_f32(out, v);
    write_file(path, out);
}

VideoTokens read_vtok(const std::string& path) {
    const std::string blob = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());

    if (blob.size() < 4 || std::memcmp(blob.data(), kMagic, 4) != 0) {
        throw DataError(DataError::Kind::BadMagic, "'" + path + "': bad magic, not a VTOK file");
    }
    if (blob.size() < kHeaderBytes) {
        throw DataError(DataError::Kind::TruncatedPayload,
                        "'" + path + "': truncated payload (header incomplete)");
    }
    const std::uint16_t version = get_u16(p + 4);
    if (version != kVtokVersion) {
        throw DataError(DataError::Kind::BadVersion,
                        "'" + path + "': unsupported VTOK version " + std::to_string(version));
    }

    VideoTokens video;
    video.frames = static_cast<int>(get_u32(p + 6));
    video.tokens_per_frame = static_cast<int>(get_u32(p + 10));
    video.dim = static_cast<int>(get_u32(p + 14));
    video.grid_h = static_cast<int>(get_u32(p + 18));
    video.grid_w = static_cast<int>(get_u32(p + 22));

    if (video.frames < 1 || video.tokens_per_frame < 1 || video.dim < 1 || video.grid_h < 1 ||
        video.grid_w < 1 ||
        static_cast<std::int64_t>(video.grid_h) * video.grid_w != video.tokens_per_frame) {
        throw DataError(DataError::Kind::InvalidHeader,
                        "'" + path + "': header fields are inconsistent");
    }

    const std::uint64_t count = static_cast<std::uint64_t>(video.frames) *
                                static_cast<std::uint64_t>(video.tokens_per_frame) *
                                static_cast<std::uint64_t>(video.dim);
    const std::uint64_t expected = kHeaderBytes + count * 4;
    if (blob.size() < expected) {
        throw DataError(DataError::Kind::TruncatedPayload,
                        "'" + path + "': truncated payload (expected " + std::to_string(expected) +
                            " bytes, got " + std::to_string(blob.size()) + ")");
    }
    if (blob.size() > expected) {
        throw DataError(DataError::Kind::SizeMismatch,
                        "'" + path + "': size mismatch (declared dimensions need " +
                            std::to_string(expected) + " bytes, file has " +
                            std::to_string(blob.size()) + ")");
    }

    video.data.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const float v = get_f32(p + kHeaderBytes + i * 4);
        if (!std::isfinite(v)) {
            throw DataError(DataError::Kind::InvalidValue,
                            "'" + path + "': payload contains a non-finite value");
        }
        video.data[i] = v;
    }
    return video;
}

std::string result_to_json(const ResultDoc& doc) {
    nlohmann::json j;
    j["method"] = doc.method;
    j["config"] = config_to_json(doc.config);
    j["frames"] = doc.result.frames;
    j["tokens_per_frame"] = doc.result.tokens_per_frame;
    j["k"] = doc.result.retained.size();
    j["achieved_budget"] = doc.result.achieved_budget;
    j["budget_unreachable"] = doc.result.budget_unreachable;
    j["retained"] = doc.result.retained;
    j["per_frame_counts"] = doc.result.per_frame_counts;
    return j.dump(2) + "\n";
}

ResultDoc result_from_json(const std::string& text) {
    const nlohmann::json j = parse_json(text, "result document");
    try {
        ResultDoc doc;
        doc.method = j.at("method").get<std::string>();
        doc.config = config_from_json(j.at("config"));
        doc.result.frames = j.at("frames").get<int>();
        doc.result.tokens_per_frame = j.at("tokens_per_frame").get<int>();
        doc.result.achieved_budget = j.at("achieved_budget").get<double>();
        doc.result.budget_unreachable = j.at("budget_unreachable").get<bool>();
        doc.result.retained = j.at("retained").get<std::vector<NodeId>>();
        doc.result.per_frame_counts = j.at("per_frame_counts").get<std::vector<int>>();
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataError::Kind::InvalidValue,
                        std::string("result document is missing or mistypes a field: ") + e.what());
    }
}

void write_result_json(const ResultDoc& doc, const std::string& path) {
    write_file(path, result_to_json(doc));
}

ResultDoc read_result_json(const std::string& path) { return result_from_json(read_file(path)); }

std::string forest_to_json(const ForestDoc& doc) {
    nlohmann::json j;
    j["config"] = config_to_json(doc.config);
    j["merge_floor_hit"] = doc.forest.merge_floor_hit;
    j["orphans"] = doc.forest.orphans;
    j["trees"] = nlohmann::json::array();
    for (const Tree& t : doc.forest.trees) {
        nlohmann::json tree;
        tree["root"] = t.root;
        tree["depth"] = t.depth;
        tree["members"] = t.members;
        tree["parents"] = nlohmann::json::array();
        for (const auto& [child, parent] : t.parent) {
            tree["parents"].push_back({child, parent});
        }
        j["trees"].push_back(std::move(tree));
    }
    return j.dump(2) + "\n";
}

ForestDoc forest_from_json(const std::string& text) {
    const nlohmann::json j = parse_json(text, "forest document");
    try {
        ForestDoc doc;
        doc.config = config_from_json(j.at("config"));
        doc.forest.merge_floor_hit = j.at("merge_floor_hit").get<bool>();
        doc.forest.orphans = j.at("orphans").get<std::vector<NodeId>>();
        for (const auto& tree : j.at("trees")) {
            Tree t;
            t.root = tree.at("root").get<NodeId>();
            t.depth = tree.at("depth").get<int>();
            t.members = tree.at("members").get<std::vector<NodeId>>();
            for (const auto& pair : tree.at("parents")) {
                t.parent[pair.at(0).get<NodeId>()] = pair.at(1).get<NodeId>();
            }
            doc.forest.trees.push_back(std::move(t));
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataError::Kind::InvalidValue,
                        std::string("forest document is missing or mistypes a field: ") + e.what());
    }
}

void export_forest_json(const ForestDoc& doc, const std::string& path) {
    write_file(path, forest_to_json(doc));
}

ForestDoc import_forest_json(const std::string& path) {
    return forest_from_json(read_file(path));
}

std::string forest_to_dot(const Forest& forest, const NodeSet& nodes) {
    std::string out = "digraph forest {\n";
    char line[160];
    for (const Tree& t : forest.trees) {
        for (NodeId m : t.members) {
            const Node& n = nodes.nodes[nodes.index_of(m)];
            std::snprintf(line, sizeof(line),
                          "  n%lld [frame=%d, x=\"%.6f\", y=\"%.6f\"];\n",
                          static_cast<long long>(m), n.frame, n.x, n.y);
            out += line;
        }
    }
    for (NodeId o : forest.orphans) {
        const Node& n = nodes.nodes[nodes.index_of(o)];
        std::snprintf(line, sizeof(line),
                      "  n%lld [frame=%d, x=\"%.6f\", y=\"%.6f\", orphan=true];\n",
                      static_cast<long long>(o), n.frame, n.x, n.y);
        out += line;
    }
    for (const Tree& t : forest.trees) {
        for (const auto& [child, parent] : t.parent) {
            std::snprintf(line, sizeof(line), "  n%lld -> n%lld;\n",
                          static_cast<long long>(parent), static_cast<long long>(child));
            out += line;
        }
    }
    out += "}\n";
    return out;
}

void export_forest_dot(const Forest& forest, const NodeSet& nodes, const std::string& path) {
    write_file(path, forest_to_dot(forest, nodes));
}

std::string trace_to_csv(const RemovalTrace& trace) {
    std::string out = "step,node,reason,tree_root\n";
    for (const RemovalEvent& e : trace) {
        out += std::to_string(e.step);
        out += ',';
        out += std::to_string(e.node);
        out += ',';
        out += removal_reason_to_string(e.reason);
        out += ',';
        out += std::to_string(e.tree_root);
        out += '\n';
    }
    return out;
}

void write_trace_csv(const RemovalTrace& trace, const std::string& path) {
    write_file(path, trace_to_csv(trace));
}

}  // namespace tokenforest
