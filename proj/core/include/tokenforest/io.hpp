#pragma once

#include <string>

#include "tokenforest/forest.hpp"
#include "tokenforest/pruner.hpp"
#include "tokenforest/types.hpp"

namespace tokenforest {

/// VTOK binary token container.
///
/// Layout, all integers little-endian:
///   bytes 0..3   magic "VTOK"
///   bytes 4..5   format version (uint16), currently 1
///   bytes 6..25  T, N, d, grid_h, grid_w (uint32 each)
///   bytes 26..   T*N*d IEEE-754 float32 values, frame-major,
///                grid-index-major, dimension-minor
///
/// Reads validate magic, version, header consistency and payload length;
/// failures raise DataError with a distinct kind (BadMagic, BadVersion,
/// TruncatedPayload, SizeMismatch, InvalidHeader, InvalidValue). A read
/// followed by a write reproduces the file byte for byte.
constexpr std::uint16_t kVtokVersion = 1;

void write_vtok(const VideoTokens& video, const std::string& path);
VideoTokens read_vtok(const std::string& path);

/// Serialized pruning run: the result plus the configuration and method
/// that produced it. JSON with sorted keys, so byte-stable for fixed inputs.
struct ResultDoc {
    PruneResult result;
    PruneConfig config;
    std::string method = "forest";
};

void write_result_json(const ResultDoc& doc, const std::string& path);
ResultDoc read_result_json(const std::string& path);
std::string result_to_json(const ResultDoc& doc);
ResultDoc result_from_json(const std::string& text);

/// Forest snapshot (trees, parent pairs, depths, orphans, config echo).
/// import(export(forest)) reproduces the forest exactly.
struct ForestDoc {
    Forest forest;
    PruneConfig config;
};

void export_forest_json(const ForestDoc& doc, const std::string& path);
ForestDoc import_forest_json(const std::string& path);
std::string forest_to_json(const ForestDoc& doc);
ForestDoc forest_from_json(const std::string& text);

/// Graphviz description: one node line per token (frame and coordinate
/// attributes), one directed edge line per parent link.
std::string forest_to_dot(const Forest& forest, const NodeSet& nodes);
void export_forest_dot(const Forest& forest, const NodeSet& nodes, const std::string& path);

/// Pruning trace as CSV rows (step, node, reason, tree_root).
std::string trace_to_csv(const RemovalTrace& trace);
void write_trace_csv(const RemovalTrace& trace, const std::string& path);

}  // namespace tokenforest
