#include "md2i/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace md2i {

namespace {

constexpr char kMagic[8] = {'M', 'D', '2', 'I', 'C', 'K', 'P', '1'};

void put_u64(std::ofstream& out, uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void put_u32(std::ofstream& out, uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

uint64_t get_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

uint32_t get_u32(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
    return v;
}

double act_code(Activation a) {
    switch (a) {
        case Activation::Linear: return 0.0;
        case Activation::ReLU: return 1.0;
        case Activation::Sigmoid: return 2.0;
    }
    return 0.0;
}

Activation act_from_code(double c) {
    if (c == 1.0) return Activation::ReLU;
    if (c == 2.0) return Activation::Sigmoid;
    return Activation::Linear;
}

void pack_net(const MlpNet& net, const std::string& prefix, std::vector<NamedMatrix>& out) {
    Matrix acts(1, static_cast<int>(net.layers().size()));
    for (size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        out.push_back({prefix + ".l" + std::to_string(l) + ".w", layer.w});
        out.push_back({prefix + ".l" + std::to_string(l) + ".b", layer.b});
        acts.data[l] = act_code(layer.act);
    }
    out.push_back({prefix + ".acts", std::move(acts)});
}

MlpNet unpack_net(const std::map<std::string, const Matrix*>& index, const std::string& prefix) {
    auto acts_it = index.find(prefix + ".acts");
    if (acts_it == index.end()) throw std::runtime_error("checkpoint: missing " + prefix + ".acts");
    const Matrix& acts = *acts_it->second;
    std::vector<LayerSpec> specs;
    for (int l = 0; l < acts.cols; ++l) {
        auto w_it = index.find(prefix + ".l" + std::to_string(l) + ".w");
        if (w_it == index.end())
            throw std::runtime_error("checkpoint: missing layer matrix in " + prefix);
        specs.push_back({w_it->second->rows, w_it->second->cols, act_from_code(acts.data[l])});
    }
    Rng dummy(0);
    MlpNet net(specs, dummy);
    for (int l = 0; l < acts.cols; ++l) {
        net.layers()[l].w = *index.at(prefix + ".l" + std::to_string(l) + ".w");
        net.layers()[l].b = *index.at(prefix + ".l" + std::to_string(l) + ".b");
    }
    return net;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedMatrix>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    out.write(kMagic, 8);
    put_u64(out, entries.size());
    uint64_t offset = 0;
    for (const auto& e : entries) {
        put_u32(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u64(out, static_cast<uint64_t>(e.value.rows));
        put_u64(out, static_cast<uint64_t>(e.value.cols));
        put_u64(out, offset);
        offset += e.value.data.size() * sizeof(double);
    }
    put_u64(out, offset);
    for (const auto& e : entries)
        out.write(reinterpret_cast<const char*>(e.value.data.data()),
                  static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::vector<NamedMatrix> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    uint64_t count = get_u64(in);
    struct Entry {
        std::string name;
        uint64_t rows, cols, offset;
    };
    std::vector<Entry> manifest;
    manifest.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t len = get_u32(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        uint64_t rows = get_u64(in);
        uint64_t cols = get_u64(in);
        uint64_t offset = get_u64(in);
        manifest.push_back({std::move(name), rows, cols, offset});
    }
    uint64_t payload_bytes = get_u64(in);
    std::vector<char> payload(payload_bytes);
    in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
    if (!in) throw std::runtime_error("checkpoint: truncated payload in '" + path + "'");
    std::vector<NamedMatrix> entries;
    entries.reserve(count);
    for (const auto& e : manifest) {
        Matrix m(static_cast<int>(e.rows), static_cast<int>(e.cols));
        uint64_t bytes = m.data.size() * sizeof(double);
        if (e.offset + bytes > payload_bytes)
            throw std::runtime_error("checkpoint: entry overruns payload in '" + path + "'");
        std::memcpy(m.data.data(), payload.data() + e.offset, bytes);
        entries.push_back({e.name, std::move(m)});
    }
    return entries;
}

std::vector<NamedMatrix> pack_model(const GeneratorNet& gen, const DiscriminatorNet& disc,
                                    const ClassifierHead* head) {
    std::vector<NamedMatrix> out;
    pack_net(gen.encoder, "gen.enc", out);
    pack_net(gen.decoder, "gen.dec", out);
    pack_net(disc.net, "disc", out);
    if (head) {
        out.push_back({"head.w", head->w});
        Matrix meta(static_cast<int>(head->tasks.size()), 4);
        for (size_t t = 0; t < head->tasks.size(); ++t) {
            const auto& slice = head->tasks[t];
            meta(static_cast<int>(t), 0) = slice.offset;
            meta(static_cast<int>(t), 1) = slice.width;
            meta(static_cast<int>(t), 2) = slice.num_classes;
            meta(static_cast<int>(t), 3) = slice.kind == TaskKind::Classification ? 0.0 : 1.0;
        }
        out.push_back({"head.meta", std::move(meta)});
        out.push_back({"head.rho", Matrix::from_rows({{head->rho0, head->rho_l2}})});
    }
    return out;
}

LoadedModel unpack_model(const std::vector<NamedMatrix>& entries) {
    std::map<std::string, const Matrix*> index;
    for (const auto& e : entries) index[e.name] = &e.value;
    LoadedModel model;
    model.gen.encoder = unpack_net(index, "gen.enc");
    model.gen.decoder = unpack_net(index, "gen.dec");
    model.gen.d = model.gen.encoder.in_dim() / 2;
    model.gen.code = model.gen.encoder.out_dim();
    model.disc.net = unpack_net(index, "disc");
    model.disc.d = model.disc.net.out_dim();
    if (index.count("head.w")) {
        ClassifierHead head;
        head.w = *index.at("head.w");
        head.gw = Matrix(head.w.rows, head.w.cols);
        head.vw = Matrix(head.w.rows, head.w.cols);
        const Matrix& meta = *index.at("head.meta");
        for (int t = 0; t < meta.rows; ++t) {
            TaskSlice slice;
            slice.offset = static_cast<int>(meta(t, 0));
            slice.width = static_cast<int>(meta(t, 1));
            slice.num_classes = static_cast<int>(meta(t, 2));
            slice.kind = meta(t, 3) == 0.0 ? TaskKind::Classification : TaskKind::Regression;
            head.tasks.push_back(slice);
        }
        const Matrix& rho = *index.at("head.rho");
        head.rho0 = rho.data[0];
        head.rho_l2 = rho.data[1];
        model.head = std::move(head);
    }
    return model;
}

}  // namespace md2i
