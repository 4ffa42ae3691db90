#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "reseq/frameset.hpp"
#include "reseq/graphseq.hpp"

namespace reseq {

struct Embedding2D {
    std::vector<std::string> ids;
    std::vector<std::array<double, 2>> xy;  // aligned with ids
    double stress = 0.0;                    // Kruskal stress-1 against the target distances
    bool degenerate = false;                // fewer than two usable spectral axes; y is 0 everywhere
};

struct EmbedOptions {
    // Embed the raw matrix distances instead of tree geodesics.
    bool use_matrix_distances = false;
};

// Classical MDS of the tree-geodesic distances: double-centre the squared
// distances, keep the two largest eigenpairs, scale by sqrt(eigenvalue).
// Each axis is flipped so its largest-magnitude coordinate is positive; on
// ties (within 1e-9 relative) the highest node index decides.
// ContractError unless the tree covers exactly the matrix frames.
Embedding2D embed_mst_2d(const MstTree& tree, const DistanceMatrix& m, const EmbedOptions& opts = {});

// Pairwise tree distances (sum of edge weights along the unique path).
std::vector<double> tree_geodesics(const MstTree& tree);

// {"<id>": [x, y], ..., "stress": s}. ContractError if a frame is named "stress".
std::string embedding_to_json(const Embedding2D& e);

enum class LayoutStyle { linear, radial };
std::string_view layout_style_name(LayoutStyle s);
LayoutStyle parse_layout_style(std::string_view name);

struct Placement {
    std::string id;
    double cx = 0.0;     // centre in page pixels, y down
    double cy = 0.0;
    double angle = 0.0;  // radians, counterclockwise; radial: position angle on the circle
    double rotation = 0.0;  // radians, counterclockwise rotation applied to the frame
    int width = 0;
    int height = 0;
};

struct LayoutSheet {
    LayoutStyle style = LayoutStyle::linear;
    std::vector<Placement> placements;  // same order as the sequence
    int page_width = 0;
    int page_height = 0;
    double radius = 0.0;  // radial only
};

struct LayoutOptions {
    int gutter = 8;   // linear: pixels between neighbouring frames
    int margin = 0;   // around the whole page
    std::array<float, 3> background{1.0f, 1.0f, 1.0f};
};

// Linear: frames left to right, vertically centred, gutter apart.
// Radial: radius k * max_width / (2 pi); frame i centred at angle 2 pi i / k
// counterclockwise from east, rotated so its top edge faces outward.
// ContractError naming the first frame without pixels.
LayoutSheet compute_layout(std::span<const std::string> order, const FrameCollection& frames, LayoutStyle style,
                           const LayoutOptions& opts = {});
// Nearest-neighbour compositing; later placements paint over earlier ones.
Raster compose_layout(const LayoutSheet& sheet, const FrameCollection& frames, const LayoutOptions& opts = {});

void render_layout(const SequenceResult& seq, const FrameCollection& frames, LayoutStyle style,
                   const std::filesystem::path& out_path, const LayoutOptions& opts = {});

}  // namespace reseq
