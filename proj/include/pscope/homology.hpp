#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pscope/polydecomp.hpp"

namespace pscope {

/// Dimension-blocked random cell order: all vertices, then all edges, then
/// all faces, each block shuffled uniformly for the seed.
struct Filtration {
    struct Step {
        std::int8_t dim = 0;
        int cell = -1;  // id within its dimension
    };
    std::vector<Step> order;
    std::uint64_t seed = 0;

    std::size_t size() const { return order.size(); }
};

Filtration random_filtration(const CellComplex2D& complex, std::uint64_t seed);

/// Z2 boundary matrix in filtration order; column j lists the filtration
/// positions of the boundary cells of cell j, strictly increasing.
struct BoundaryMatrixZ2 {
    std::vector<std::vector<int>> columns;
    std::vector<std::int8_t> dims;
};

BoundaryMatrixZ2 boundary_matrix(const CellComplex2D& complex, const Filtration& filt);

/// Throws unless the composite boundary of every face vanishes over Z2.
void verify_chain_condition(const CellComplex2D& complex);

struct PersistencePairs {
    struct Pair {
        int birth = -1, death = -1;
        std::int8_t dim = 0;  // dimension of the class (= dim of the birth cell)
    };
    std::vector<Pair> pairs;
    struct Essential {
        int birth = -1;
        std::int8_t dim = 0;
    };
    std::vector<Essential> essentials;
};

/// Standard Z2 column reduction over the filtration-ordered boundary matrix.
PersistencePairs persistence(const CellComplex2D& complex, const Filtration& filt);

/// Integer Betti curves beta_i(t) for t = 0..T (K_t = first t cells).
struct BettiCurves {
    std::vector<long> beta0, beta1;
};

/// Curves from the persistence pairs, cross-checked cell by cell against an
/// incremental union-find / Euler-formula computation; any disagreement is a
/// hard error (corrupt reduction or complex).
BettiCurves betti_curves(const CellComplex2D& complex, const Filtration& filt,
                         const PersistencePairs& pairs);

struct AveragedCurves {
    std::vector<double> beta0, beta1;  // length T+1, pointwise mean over trials
    long total_cells = 0;
    int n_trials = 0;
};

AveragedCurves averaged_curves(const CellComplex2D& complex, int n_trials, std::uint64_t base_seed);

/// One training-epoch entry of a sweep feeding the heat maps.
struct SweepEntry {
    int epoch = 0;
    const CellComplex2D* complex = nullptr;
    double loss = 0.0;
};

struct HeatMapGrid {
    int dim = 0;  // Betti dimension of the grid
    std::vector<int> epochs;
    std::vector<double> loss;
    int n_bins = 200;
    long max_total_cells = 0;         // global y-axis normalizer
    Matrix values;                    // epochs x n_bins
    std::vector<double> critical;     // first argmax position / max_total_cells, per epoch
    std::vector<long> total_cells;    // per epoch
};

/// Averaged curves per epoch resampled onto a common y-axis normalized by the
/// maximum total cell count over all epochs; step-function evaluation, no
/// interpolation. Also carries the critical-filtration series (first argmax).
std::array<HeatMapGrid, 2> heat_map(const std::vector<SweepEntry>& sweep, int n_trials,
                                    std::uint64_t base_seed, int n_bins = 200);

/// Same resampling when the averaged curves were computed elsewhere
/// (e.g. in parallel across checkpoints).
std::array<HeatMapGrid, 2> heat_map_from_curves(const std::vector<int>& epochs,
                                                const std::vector<AveragedCurves>& curves,
                                                const Vec& losses, int n_bins = 200);

/// Pearson correlation of consecutive deltas of two equal-length series.
double delta_correlation(const Vec& a, const Vec& b);

}  // namespace pscope
