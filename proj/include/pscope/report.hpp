#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pscope/dualgraph.hpp"
#include "pscope/homology.hpp"

namespace pscope {

struct SvgOptions {
    int width_px = 800;
    int height_px = 800;
    std::optional<BoundingBox2D> zoom;  // draw only this window when set
};

/// Faces (light blue), edges (blue), vertices (red). Deterministic bytes.
std::string render_decomposition_svg(const CellComplex2D& complex, const SvgOptions& options = {});

/// Decomposition plus one centroid marker per dual-graph node, colored by
/// Fiedler sign (positive blue, negative purple).
std::string render_partition_svg(const CellComplex2D& complex, const PartitionReport& report,
                                 const SvgOptions& options = {});

std::string render_heatmap_svg(const HeatMapGrid& grid);

struct Series {
    std::string label;
    Vec x, y;
    std::string color;  // empty: palette order
};

/// Simple deterministic line chart; overlay (training loss) uses a right axis.
std::string render_curves_svg(const std::vector<Series>& series, const std::string& x_label,
                              const std::string& y_label,
                              const std::optional<Series>& overlay = std::nullopt);

struct ExperimentSummary {
    std::string dataset;
    std::string architecture;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double unweighted_misclass_pct = 0.0;
    double unweighted_l2_error = 0.0;
    double weighted_misclass_pct = 0.0;
    double weighted_l2_error = 0.0;
    std::uint64_t seed = 0;
};

extern const char* const kSummaryHeader;

std::string summary_table_csv(const std::vector<ExperimentSummary>& rows);

// ---- artifact files ----

void save_complex(const CellComplex2D& complex, const std::filesystem::path& path);
CellComplex2D load_complex(const std::filesystem::path& path);

void save_dual_graph_csv(const DualGraph& g, const std::filesystem::path& path);

void save_partition_json(const PartitionReport& report, const DualGraph& g,
                         const std::filesystem::path& path);

/// `epoch,trial,dim,t,percent,beta` rows for one epoch's averaged curves.
std::string curves_csv_rows(int epoch, const AveragedCurves& avg);

void save_heatmap_csv(const HeatMapGrid& grid, const std::filesystem::path& path);

void save_fvector_csv(const std::vector<int>& epochs, const std::vector<FVector>& fv,
                      const std::filesystem::path& path);

}  // namespace pscope
