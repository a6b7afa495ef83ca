#pragma once

#include <string>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

struct PenmanError : std::runtime_error {
    size_t offset;  // character offset into the input text
    PenmanError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

/// Reads a single Penman s-expression into a graph. Variables become dense
/// node ids in definition order (root first); repeated variables become
/// re-entrant edges; ":X-of" roles are normalized to "X" with the direction
/// flipped; attribute constants become ordinary concept nodes.
AmrGraph parse_penman(const std::string& text);

/// Serializes a root-connected graph back to Penman. Output is deterministic
/// (children sorted by role, then neighbor name) and re-parses to an
/// isomorphic graph. Variables are written as v0, v1, ... in emission order.
/// With strict=true, nodes unreachable from the root raise GraphError.
std::string emit_penman(const AmrGraph& g, bool strict = false);

/// One corpus block: "# ::" metadata lines plus the graph text.
struct CorpusBlock {
    std::vector<std::string> metadata;  // lines starting with '#', without newline
    std::string graph_text;             // raw penman text (may span lines)
};

/// Splits a corpus file body into blank-line-separated blocks.
std::vector<CorpusBlock> read_corpus_blocks(const std::string& body);

/// Value of a "# ::key ..." metadata line, if present.
bool metadata_value(const CorpusBlock& block, const std::string& key, std::string& out);

}  // namespace amr
