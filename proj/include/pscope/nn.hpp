#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pscope/linalg.hpp"

namespace pscope {

/// Layer widths (h0 = input dim, ..., h_{L+1} = output dim).
struct ArchitectureSpec {
    std::vector<int> widths;

    void validate() const;
    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }
    // total hidden neuron count h
    int hidden_count() const;
    std::string to_string() const;  // "(2,6,6,2)"
};

struct DenseLayer {
    Matrix weight;  // h_i x h_{i-1}
    Vec bias;       // h_i
};

/// 0/1 per hidden neuron, stacked layer-major (layer 1 first).
using ActivationPattern = std::vector<std::uint8_t>;

/// -1/0/+1 per hidden neuron; 0 marks a neuron whose boundary contains the cell.
using SignVector = std::vector<std::int8_t>;

/// The affine map the network realizes on the closed region of one pattern.
struct AffineRegionMap {
    Matrix matrix;  // n x m
    Vec offset;     // n
};

/// Feedforward ReLU network: hidden layers ReLU, output layer affine.
/// Immutable after construction; all operations on it are pure.
class ReluNetwork {
public:
    ReluNetwork(ArchitectureSpec spec, std::vector<DenseLayer> layers);

    const ArchitectureSpec& spec() const { return spec_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    int input_dim() const { return spec_.input_dim(); }
    int output_dim() const { return spec_.output_dim(); }
    int hidden_layers() const { return spec_.hidden_layers(); }
    int hidden_count() const { return spec_.hidden_count(); }

    // mutation is restricted to construction-time helpers (init, jitter, training)
    std::vector<DenseLayer>& mutable_layers() { return layers_; }

private:
    ArchitectureSpec spec_;
    std::vector<DenseLayer> layers_;
};

struct ForwardResult {
    Vec output;
    std::vector<Vec> preactivations;  // one per hidden layer
    ActivationPattern pattern;
};

ForwardResult forward(const ReluNetwork& net, const Vec& x);

ActivationPattern binary_state_vector(const ReluNetwork& net, const Vec& x);

/// Preactivations of all hidden neurons at x, flattened layer-major (length h).
Vec hidden_preactivations(const ReluNetwork& net, const Vec& x);

/// Masked-product affine map W_{L+1} D_L W_L ... D_1 W_1 for a fixed pattern.
AffineRegionMap input_jacobian(const ReluNetwork& net, const ActivationPattern& pattern);

Vec apply_affine(const AffineRegionMap& map, const Vec& x);

/// Kaiming-style scaled-uniform weights, small nonzero bias jitter.
ReluNetwork init_network(const ArchitectureSpec& spec, std::uint64_t seed);

inline std::uint8_t sign_to_bit(std::int8_t s) { return s > 0 ? 1 : 0; }

std::string pattern_key(const ActivationPattern& p);   // '0'/'1' string
std::string sign_string(const SignVector& s);          // '-'/'0'/'+' string
ActivationPattern sign_to_pattern(const SignVector& s);

// ---- checkpoint file (JSON, 17-significant-digit decimals, atomic write) ----

struct Checkpoint {
    ReluNetwork net;
    long epoch = 0;
    std::uint64_t seed = 0;
    double loss = 0.0;
};

void save_checkpoint(const ReluNetwork& net, const std::filesystem::path& path, long epoch,
                     std::uint64_t seed, double loss);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// %.17g decimal representation; round-trips every finite double bit-exactly.
std::string format_double(double v);

/// Write-then-rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace pscope
