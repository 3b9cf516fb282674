#include "adlraw/modnet/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace adlraw::modnet {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'D', 'L', 'M', 'D', 'L', '1', '\0'};

template <typename U>
void put(std::string& out, U value) {
    char buf[sizeof(U)];
    std::memcpy(buf, &value, sizeof(U));
    out.append(buf, sizeof(U));
}

template <typename U>
U take(const std::string& in, std::size_t& pos, const std::string& path) {
    if (pos + sizeof(U) > in.size()) throw CheckpointError("checkpoint '" + path + "' is truncated");
    U value;
    std::memcpy(&value, in.data() + pos, sizeof(U));
    pos += sizeof(U);
    return value;
}

} // namespace

nlohmann::json describe(const Denoiser& model) {
    nlohmann::json j;
    const auto& cfg = model.config();
    j["widths"] = std::vector<std::size_t>(cfg.widths.begin(), cfg.widths.end());
    j["n_sensors"] = cfg.n_sensors;
    j["modulation"] = cfg.modulation;
    auto names = model.parameter_names();
    auto params = model.parameters();
    nlohmann::json tensors = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        tensors.push_back({{"name", names[i]}, {"shape", params[i].shape()}});
    }
    j["tensors"] = tensors;
    return j;
}

void save_checkpoint(const std::filesystem::path& path, const Denoiser& model) {
    std::string out(kMagic.begin(), kMagic.end());
    const std::string desc = describe(model).dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(desc.size()));
    out += desc;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.count_params()));
    for (const auto& p : model.parameters()) {
        for (float v : p.data()) put<float>(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open '" + path.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("failed writing '" + path.string() + "'");
}

Denoiser load_checkpoint(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint '" + name + "'");
    std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
        throw CheckpointError("'" + name + "' is not a model checkpoint (bad magic)");
    }
    std::size_t pos = kMagic.size();
    const auto desc_len = take<std::uint32_t>(in, pos, name);
    if (pos + desc_len > in.size()) throw CheckpointError("checkpoint '" + name + "' is truncated");
    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(in.substr(pos, desc_len));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint '" + name + "' has a malformed descriptor: " + e.what());
    }
    pos += desc_len;

    DenoiserConfig cfg;
    try {
        auto widths = desc.at("widths").get<std::vector<std::size_t>>();
        if (widths.size() != kStages) throw CheckpointError("checkpoint '" + name + "' has wrong stage count");
        std::copy(widths.begin(), widths.end(), cfg.widths.begin());
        cfg.n_sensors = desc.at("n_sensors").get<std::size_t>();
        cfg.modulation = desc.at("modulation").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint '" + name + "' descriptor: " + e.what());
    }
    Denoiser model(cfg, 0);
    if (describe(model) != desc) {
        throw CheckpointError("checkpoint '" + name + "' tensor layout does not match its architecture");
    }
    const auto count = take<std::uint64_t>(in, pos, name);
    if (count != model.count_params()) throw CheckpointError("checkpoint '" + name + "' parameter count mismatch");
    if (in.size() - pos != count * sizeof(float)) {
        throw CheckpointError("checkpoint '" + name + "' payload size does not match parameter count");
    }
    for (auto p : model.parameters()) {
        auto dst = p.mutable_data();
        std::memcpy(dst.data(), in.data() + pos, dst.size() * sizeof(float));
        pos += dst.size() * sizeof(float);
        for (float v : dst) {
            if (!std::isfinite(v)) throw CheckpointError("checkpoint '" + name + "' holds non-finite weights");
        }
    }
    return model;
}

void copy_parameters(const Denoiser& from, Denoiser& to) {
    if (!(from.config() == to.config())) throw ContractViolation("copy_parameters: architectures differ");
    auto src = from.parameters();
    auto dst = to.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        std::copy(src[i].data().begin(), src[i].data().end(), dst[i].mutable_data().begin());
    }
}

} // namespace adlraw::modnet
