#include "hiest/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace hiest {

namespace {

constexpr char kMagic[8] = {'H', 'I', 'E', 'S', 'T', 'C', 'K', '1'};

nlohmann::json config_to_json(const HiestConfig& c) {
    return nlohmann::json{{"blocks", c.blocks},
                          {"layers_per_block", c.layers_per_block},
                          {"hidden", c.hidden},
                          {"n_global", c.n_global},
                          {"eta1", c.eta1},
                          {"eta2", c.eta2},
                          {"eta3", c.eta3},
                          {"eta4", c.eta4},
                          {"horizon", c.horizon},
                          {"history", c.history},
                          {"tcn_kernel", c.tcn_kernel},
                          {"skip_dim", c.skip_dim},
                          {"d_in", c.d_in},
                          {"d_out", c.d_out},
                          {"normalize_adjacency", c.normalize_adjacency},
                          {"ag_refresh", c.ag_refresh == AgRefresh::kStep ? "step" : "epoch"}};
}

HiestConfig config_from_json(const nlohmann::json& j) {
    HiestConfig c;
    c.blocks = j.at("blocks").get<std::size_t>();
    c.layers_per_block = j.at("layers_per_block").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.n_global = j.at("n_global").get<std::size_t>();
    c.eta1 = j.at("eta1").get<double>();
    c.eta2 = j.at("eta2").get<double>();
    c.eta3 = j.at("eta3").get<double>();
    c.eta4 = j.at("eta4").get<double>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.history = j.at("history").get<std::size_t>();
    c.tcn_kernel = j.at("tcn_kernel").get<std::size_t>();
    c.skip_dim = j.at("skip_dim").get<std::size_t>();
    c.d_in = j.at("d_in").get<std::size_t>();
    c.d_out = j.at("d_out").get<std::size_t>();
    c.normalize_adjacency = j.at("normalize_adjacency").get<bool>();
    c.ag_refresh =
        j.at("ag_refresh").get<std::string>() == "epoch" ? AgRefresh::kEpoch : AgRefresh::kStep;
    return c;
}

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("load_checkpoint: truncated file " + path);
    return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof kMagic);

    nlohmann::json header;
    header["format_version"] = 1;
    header["config"] = config_to_json(ckpt.config);
    header["scalars"] = ckpt.scalars;
    const std::string hs = header.dump();
    write_pod<uint32_t>(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

    write_pod<uint32_t>(out, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) write_pod<uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("load_checkpoint: " + path + " is not a checkpoint file");

    const auto hlen = read_pod<uint32_t>(in, path);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw DataError("load_checkpoint: truncated header in " + path);
    nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));
    for (auto& [k, v] : header.at("scalars").items()) ckpt.scalars[k] = v.get<double>();

    const auto n_tensors = read_pod<uint32_t>(in, path);
    for (uint32_t i = 0; i < n_tensors; ++i) {
        const auto name_len = read_pod<uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<uint32_t>(in, path);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = read_pod<uint64_t>(in, path);
        std::vector<double> data(shape_numel(shape));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) throw DataError("load_checkpoint: truncated payload in " + path);
        ckpt.tensors.emplace_back(std::move(name),
                                  Tensor::from_data(std::move(shape), std::move(data)));
    }
    return ckpt;
}

std::vector<std::pair<std::string, Tensor>> checkpoint_tensors(const HiestParams& params) {
    return params.named();
}

HiestParams params_from_checkpoint(const Checkpoint& ckpt, std::size_t n_regions) {
    HiestParams fresh = HiestParams::init(ckpt.config, n_regions, 0);
    for (auto& [name, t] : fresh.named()) {
        const Tensor* stored = ckpt.find(name);
        if (!stored) throw DataError("params_from_checkpoint: missing tensor '" + name + "'");
        if (stored->shape() != t.shape())
            throw DataError("params_from_checkpoint: shape of '" + name + "' is " +
                            shape_to_string(stored->shape()) + ", expected " +
                            shape_to_string(t.shape()));
        Tensor dst(t);
        std::copy(stored->data().begin(), stored->data().end(), dst.mutable_data().begin());
    }
    return fresh;
}

}  // namespace hiest
