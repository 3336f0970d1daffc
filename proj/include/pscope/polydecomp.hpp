#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "pscope/nn.hpp"

namespace pscope {

struct BoundingBox2D {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    void validate() const;
    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

/// Expand each dimension by `frac` of its extent (half on each side).
BoundingBox2D inflate(const BoundingBox2D& box, double frac);
BoundingBox2D bounding_box_of(const std::vector<std::array<double, 2>>& points);

struct FVector {
    long f0 = 0, f1 = 0, f2 = 0;
    bool operator==(const FVector&) const = default;
    long total() const { return f0 + f1 + f2; }
    long euler() const { return f0 - f1 + f2; }
};

/// Polyhedral decomposition of a box by the hidden-neuron boundaries of a
/// 2D-input ReLU network, with full incidence structure and sign vectors.
struct CellComplex2D {
    struct VertexCell {
        double x = 0.0, y = 0.0;
        SignVector sign;
    };
    struct EdgeCell {
        int a = -1, b = -1;
        SignVector sign;
    };
    struct FaceCell {
        std::vector<int> vertices;  // closed CCW cycle
        std::vector<int> edges;     // edges[i] joins vertices[i] and vertices[i+1 mod len]
        SignVector sign;            // no zeros
    };

    std::vector<VertexCell> vertices;
    std::vector<EdgeCell> edges;
    std::vector<FaceCell> faces;
    std::unordered_map<std::string, int> face_by_pattern;  // pattern_key -> face id
    std::vector<std::array<int, 2>> edge_faces;            // incident faces, -1 if none
    BoundingBox2D box;
    int hidden_count = 0;
    int degeneracy_retries = 0;

    bool vertex_on_box_boundary(int v, double tol = 1e-12) const;
    bool edge_on_box_boundary(int e, double tol = 1e-12) const;
    std::array<double, 2> face_centroid(int f) const;
    double face_area(int f) const;
};

/// Raised internally when subdivision meets an ambiguous zero configuration;
/// decompose retries with jittered biases before letting it escape.
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DecomposeResult {
    CellComplex2D complex;
    ReluNetwork net;  // the network the complex actually describes (biases may be jittered)
};

namespace detail {
/// Fault injection for tests: the first fail_attempts build attempts throw
/// DegeneracyError so the jitter-retry policy can be exercised directly.
struct DecomposeHooks {
    int fail_attempts = 0;
};
}  // namespace detail

DecomposeResult decompose_ex(const ReluNetwork& net, const BoundingBox2D& box, double tol = 1e-9,
                             const detail::DecomposeHooks& hooks = {});

CellComplex2D decompose(const ReluNetwork& net, const BoundingBox2D& box, double tol = 1e-9);

/// Copy of net with every bias perturbed by uniform(-1e-7, 1e-7).
ReluNetwork jitter_biases(const ReluNetwork& net, std::uint64_t seed);

FVector f_vector(const CellComplex2D& complex);

/// Face containing the point (boundary points resolve to the "bit 0" side).
int locate(const CellComplex2D& complex, const ReluNetwork& net, const std::array<double, 2>& point,
           double ambiguous_tol = 1e-7);

std::unordered_map<int, long> count_points_per_face(const CellComplex2D& complex,
                                                    const ReluNetwork& net,
                                                    const std::vector<std::array<double, 2>>& points);

/// Structural checks: cycles closed, incidences consistent, Euler characteristic,
/// face signs free of zeros. Throws on violation.
void validate_complex(const CellComplex2D& complex);

}  // namespace pscope
