#include "pscope/nn.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pscope {

void ArchitectureSpec::validate() const {
    if (widths.size() < 3)
        throw std::invalid_argument("architecture needs at least one hidden layer");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument("architecture widths must be >= 1");
}

int ArchitectureSpec::hidden_count() const {
    int h = 0;
    for (std::size_t i = 1; i + 1 < widths.size(); ++i) h += widths[i];
    return h;
}

std::string ArchitectureSpec::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(widths[i]);
    }
    return s + ")";
}

ReluNetwork::ReluNetwork(ArchitectureSpec spec, std::vector<DenseLayer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
    spec_.validate();
    if (layers_.size() != spec_.widths.size() - 1)
        throw std::invalid_argument("layer count does not match architecture");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        auto rows = static_cast<std::size_t>(spec_.widths[i + 1]);
        auto cols = static_cast<std::size_t>(spec_.widths[i]);
        if (l.weight.rows != rows || l.weight.cols != cols || l.bias.size() != rows)
            throw std::invalid_argument("layer " + std::to_string(i + 1) +
                                        " dimensions do not chain with architecture");
        for (double v : l.weight.data)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
        for (double v : l.bias)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias");
    }
}

ForwardResult forward(const ReluNetwork& net, const Vec& x) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(net.input_dim()));
    ForwardResult r;
    r.pattern.reserve(net.hidden_count());
    Vec a = x;
    const auto& layers = net.layers();
    const int L = net.hidden_layers();
    for (int i = 0; i < L; ++i) {
        Vec z = layers[i].weight.apply(a);
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += layers[i].bias[j];
        a.assign(z.size(), 0.0);
        for (std::size_t j = 0; j < z.size(); ++j) {
            // Strict inequality: a preactivation of exactly 0 is an "off" bit.
            r.pattern.push_back(z[j] > 0.0 ? 1 : 0);
            a[j] = z[j] > 0.0 ? z[j] : 0.0;
        }
        r.preactivations.push_back(std::move(z));
    }
    r.output = layers[L].weight.apply(a);
    for (std::size_t j = 0; j < r.output.size(); ++j) r.output[j] += layers[L].bias[j];
    return r;
}

ActivationPattern binary_state_vector(const ReluNetwork& net, const Vec& x) {
    return forward(net, x).pattern;
}

Vec hidden_preactivations(const ReluNetwork& net, const Vec& x) {
    auto r = forward(net, x);
    Vec g;
    g.reserve(net.hidden_count());
    for (const auto& layer : r.preactivations) g.insert(g.end(), layer.begin(), layer.end());
    return g;
}

AffineRegionMap input_jacobian(const ReluNetwork& net, const ActivationPattern& pattern) {
    if (static_cast<int>(pattern.size()) != net.hidden_count())
        throw std::invalid_argument("input_jacobian: pattern length must equal hidden count");
    const auto& layers = net.layers();
    const int L = net.hidden_layers();
    // A = D_1 W_1, c = D_1 b_1, then fold the next layers on top.
    Matrix A = layers[0].weight;
    Vec c = layers[0].bias;
    std::size_t bit = 0;
    for (int i = 0; i < L; ++i) {
        if (i > 0) {
            A = layers[i].weight.multiply(A);
            c = layers[i].weight.apply(c);
            for (std::size_t j = 0; j < c.size(); ++j) c[j] += layers[i].bias[j];
        }
        for (std::size_t j = 0; j < c.size(); ++j, ++bit) {
            if (!pattern[bit]) {
                c[j] = 0.0;
                for (std::size_t k = 0; k < A.cols; ++k) A(j, k) = 0.0;
            }
        }
    }
    AffineRegionMap m;
    m.matrix = layers[L].weight.multiply(A);
    m.offset = layers[L].weight.apply(c);
    for (std::size_t j = 0; j < m.offset.size(); ++j) m.offset[j] += layers[L].bias[j];
    return m;
}

Vec apply_affine(const AffineRegionMap& map, const Vec& x) {
    Vec y = map.matrix.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += map.offset[i];
    return y;
}

ReluNetwork init_network(const ArchitectureSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        auto fan_in = static_cast<std::size_t>(spec.widths[i]);
        auto fan_out = static_cast<std::size_t>(spec.widths[i + 1]);
        // framework-default scale: U(+-1/sqrt(fan_in)) for weights and biases.
        // Larger weight scales (and near-zero biases) train to the same loss
        // but leave decompositions whose dual-graph cuts never line up with
        // the class structure; bias spread also keeps the initial hyperplanes
        // off the origin.
        double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        DenseLayer l;
        l.weight = Matrix(fan_out, fan_in);
        for (double& w : l.weight.data) w = rng.uniform(-scale, scale);
        l.bias.resize(fan_out);
        for (double& b : l.bias) b = rng.uniform(-scale, scale);
        layers.push_back(std::move(l));
    }
    return ReluNetwork(spec, std::move(layers));
}

std::string pattern_key(const ActivationPattern& p) {
    std::string s(p.size(), '0');
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i]) s[i] = '1';
    return s;
}

std::string sign_string(const SignVector& s) {
    std::string out(s.size(), '0');
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > 0 ? '+' : (s[i] < 0 ? '-' : '0');
    return out;
}

ActivationPattern sign_to_pattern(const SignVector& s) {
    ActivationPattern p(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) p[i] = s[i] > 0 ? 1 : 0;
    return p;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

static void append_array(std::string& out, const std::vector<double>& v) {
    out += "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    out += "]";
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content);

void save_checkpoint(const ReluNetwork& net, const std::filesystem::path& path, long epoch,
                     std::uint64_t seed, double loss) {
    std::string out = "{\n  \"format\": \"relu-checkpoint-v1\",\n  \"widths\": [";
    const auto& w = net.spec().widths;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(w[i]);
    }
    out += "],\n  \"epoch\": " + std::to_string(epoch) + ",\n  \"seed\": " + std::to_string(seed) +
           ",\n  \"loss\": " + format_double(loss) + ",\n  \"layers\": [\n";
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& l = net.layers()[i];
        out += "    {\"weight\": ";
        append_array(out, l.weight.data);
        out += ", \"bias\": ";
        append_array(out, l.bias);
        out += i + 1 < net.layers().size() ? "},\n" : "}\n";
    }
    out += "  ]\n}\n";
    atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    ArchitectureSpec spec{j.at("widths").get<std::vector<int>>()};
    spec.validate();
    std::vector<DenseLayer> layers;
    const auto& jl = j.at("layers");
    if (jl.size() != spec.widths.size() - 1)
        throw std::runtime_error("checkpoint layer count mismatch");
    for (std::size_t i = 0; i < jl.size(); ++i) {
        DenseLayer l;
        auto rows = static_cast<std::size_t>(spec.widths[i + 1]);
        auto cols = static_cast<std::size_t>(spec.widths[i]);
        l.weight = Matrix(rows, cols);
        l.weight.data = jl[i].at("weight").get<std::vector<double>>();
        if (l.weight.data.size() != rows * cols)
            throw std::runtime_error("checkpoint weight size mismatch");
        l.bias = jl[i].at("bias").get<std::vector<double>>();
        layers.push_back(std::move(l));
    }
    return Checkpoint{ReluNetwork(spec, std::move(layers)), j.at("epoch").get<long>(),
                      j.at("seed").get<std::uint64_t>(), j.at("loss").get<double>()};
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace pscope
