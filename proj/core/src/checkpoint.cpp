#include "fray/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace fray {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'A', 'Y', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

template <typename T>
void write_pod(std::FILE* f, const T& v) {
    if (std::fwrite(&v, sizeof(T), 1, f) != 1)
        throw std::runtime_error("checkpoint: write failed");
}

template <typename T>
T read_pod(std::FILE* f) {
    T v;
    if (std::fread(&v, sizeof(T), 1, f) != 1)
        throw std::runtime_error("checkpoint: unexpected end of file");
    return v;
}

void write_doubles(std::FILE* f, const double* data, size_t n) {
    if (n && std::fwrite(data, sizeof(double), n, f) != n)
        throw std::runtime_error("checkpoint: write failed");
}

void read_doubles(std::FILE* f, double* data, size_t n) {
    if (n && std::fread(data, sizeof(double), n, f) != n)
        throw std::runtime_error("checkpoint: unexpected end of file");
}

void write_mlp(std::FILE* f, const MlpParams& p) {
    write_pod<uint8_t>(f, static_cast<uint8_t>(p.activation));
    write_pod<double>(f, p.softplus_beta);
    write_pod<int32_t>(f, p.skip_layer);
    write_pod<uint32_t>(f, static_cast<uint32_t>(p.weights.size()));
    for (size_t l = 0; l < p.weights.size(); ++l) {
        const Mat& w = p.weights[l];
        write_pod<uint32_t>(f, static_cast<uint32_t>(w.rows()));
        write_pod<uint32_t>(f, static_cast<uint32_t>(w.cols()));
        // Row-major on disk regardless of Eigen's storage order.
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) write_pod<double>(f, w(r, c));
        write_doubles(f, p.biases[l].data(), static_cast<size_t>(p.biases[l].rows()));
    }
}

MlpParams read_mlp(std::FILE* f) {
    MlpParams p;
    p.activation = static_cast<Activation>(read_pod<uint8_t>(f));
    p.softplus_beta = read_pod<double>(f);
    p.skip_layer = read_pod<int32_t>(f);
    const uint32_t n_layers = read_pod<uint32_t>(f);
    for (uint32_t l = 0; l < n_layers; ++l) {
        const uint32_t rows = read_pod<uint32_t>(f);
        const uint32_t cols = read_pod<uint32_t>(f);
        Mat w(rows, cols);
        for (uint32_t r = 0; r < rows; ++r)
            for (uint32_t c = 0; c < cols; ++c) w(r, c) = read_pod<double>(f);
        Mat b(rows, 1);
        read_doubles(f, b.data(), rows);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    if (!p.shapes_valid()) throw std::runtime_error("checkpoint: bad network shapes");
    return p;
}

}  // namespace

std::vector<const Mat*> parameter_tensors(const NeuralSdfModel& m) {
    std::vector<const Mat*> out;
    for (const MlpParams* net : {&m.base, &m.displacement, &m.color}) {
        for (size_t l = 0; l < net->weights.size(); ++l) {
            out.push_back(&net->weights[l]);
            out.push_back(&net->biases[l]);
        }
    }
    out.push_back(&m.log_s);
    return out;
}

std::vector<Mat*> parameter_tensors(NeuralSdfModel& m) {
    std::vector<Mat*> out;
    for (MlpParams* net : {&m.base, &m.displacement, &m.color}) {
        for (size_t l = 0; l < net->weights.size(); ++l) {
            out.push_back(&net->weights[l]);
            out.push_back(&net->biases[l]);
        }
    }
    out.push_back(&m.log_s);
    return out;
}

size_t total_parameter_count(const NeuralSdfModel& m) {
    size_t n = 0;
    for (const Mat* t : parameter_tensors(m)) n += static_cast<size_t>(t->size());
    return n;
}

void save_checkpoint(const std::string& path, const TrainCheckpoint& ckpt) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    std::fwrite(kMagic, 1, sizeof(kMagic), f.get());
    write_pod<uint32_t>(f.get(), kVersion);
    const NeuralSdfModel& m = ckpt.model;
    write_pod<uint8_t>(f.get(), m.use_displacement ? 1 : 0);
    write_pod<uint32_t>(f.get(), static_cast<uint32_t>(m.feature_dim));
    write_pod<uint32_t>(f.get(), static_cast<uint32_t>(m.enc_disp.bands));
    write_pod<uint8_t>(f.get(), m.enc_disp.include_input ? 1 : 0);
    write_pod<double>(f.get(), m.alpha_d());
    write_pod<double>(f.get(), m.log_s(0, 0));
    write_pod<uint64_t>(f.get(), ckpt.iteration);
    write_pod<uint64_t>(f.get(), ckpt.master_seed);
    write_mlp(f.get(), m.base);
    write_mlp(f.get(), m.displacement);
    write_mlp(f.get(), m.color);
    write_pod<uint8_t>(f.get(), ckpt.has_adam ? 1 : 0);
    if (ckpt.has_adam) {
        const size_t n = total_parameter_count(m);
        if (static_cast<size_t>(ckpt.adam.m.size()) != n ||
            static_cast<size_t>(ckpt.adam.v.size()) != n)
            throw std::runtime_error("checkpoint: adam state size mismatch");
        write_pod<uint64_t>(f.get(), ckpt.adam.step);
        write_doubles(f.get(), ckpt.adam.m.data(), n);
        write_doubles(f.get(), ckpt.adam.v.data(), n);
    }
}

TrainCheckpoint load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t version = read_pod<uint32_t>(f.get());
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(version));
    TrainCheckpoint ckpt;
    NeuralSdfModel& m = ckpt.model;
    m.use_displacement = read_pod<uint8_t>(f.get()) != 0;
    m.feature_dim = static_cast<int>(read_pod<uint32_t>(f.get()));
    const uint32_t bands = read_pod<uint32_t>(f.get());
    const bool include_input = read_pod<uint8_t>(f.get()) != 0;
    const double alpha_d = read_pod<double>(f.get());
    m.enc_base.bands = m.enc_disp.bands = static_cast<int>(bands);
    m.enc_base.include_input = m.enc_disp.include_input = include_input;
    m.set_alpha_d(alpha_d);
    m.log_s(0, 0) = read_pod<double>(f.get());
    ckpt.iteration = read_pod<uint64_t>(f.get());
    ckpt.master_seed = read_pod<uint64_t>(f.get());
    m.base = read_mlp(f.get());
    m.displacement = read_mlp(f.get());
    m.color = read_mlp(f.get());
    ckpt.has_adam = read_pod<uint8_t>(f.get()) != 0;
    if (ckpt.has_adam) {
        const size_t n = total_parameter_count(m);
        ckpt.adam.step = read_pod<uint64_t>(f.get());
        ckpt.adam.m.resize(static_cast<Eigen::Index>(n));
        ckpt.adam.v.resize(static_cast<Eigen::Index>(n));
        read_doubles(f.get(), ckpt.adam.m.data(), n);
        read_doubles(f.get(), ckpt.adam.v.data(), n);
    }
    return ckpt;
}

}  // namespace fray
