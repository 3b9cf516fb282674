#include "adlraw/sensorsim/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace adlraw::sensorsim {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'D', 'L', 'R', 'A', 'W', '1', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kChannels = 4;

static_assert(std::endian::native == std::endian::little,
              "dataset serialization assumes a little-endian host");

class Writer {
public:
    explicit Writer(std::vector<char>& buf) : buf_(buf) {}
    template <typename V>
    void put(V v) {
        const char* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(V));
    }
    void bytes(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }

private:
    std::vector<char>& buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
    template <typename V>
    V get(const char* what) {
        V v{};
        take(&v, sizeof(V), what);
        return v;
    }
    void take(void* dst, std::size_t n, const char* what) {
        if (buf_.size() - pos_ < n) {
            throw DatasetParseError(ParseErrorKind::truncated,
                                    std::string("dataset file truncated while reading ") + what);
        }
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
};

} // namespace

nlohmann::json profile_to_json(const SensorProfile& p) {
    return {{"sensor_id", p.sensor_id},         {"name", p.name},
            {"base_gain", p.base_gain},         {"read_noise", p.read_noise},
            {"row_noise", p.row_noise},         {"fpn_amplitude", p.fpn_amplitude},
            {"fpn_seed", p.fpn_seed},           {"black_level", p.black_level},
            {"layout", std::string(to_string(p.layout))}, {"iso_set", p.iso_set}};
}

SensorProfile profile_from_json(const nlohmann::json& j) {
    SensorProfile p;
    p.sensor_id = j.at("sensor_id").get<int>();
    p.name = j.at("name").get<std::string>();
    p.base_gain = j.at("base_gain").get<double>();
    p.read_noise = j.at("read_noise").get<double>();
    p.row_noise = j.at("row_noise").get<double>();
    p.fpn_amplitude = j.at("fpn_amplitude").get<double>();
    p.fpn_seed = j.at("fpn_seed").get<std::uint64_t>();
    p.black_level = j.at("black_level").get<double>();
    p.layout = parse_layout(j.at("layout").get<std::string>());
    p.iso_set = j.at("iso_set").get<std::vector<int>>();
    p.validate();
    return p;
}

std::size_t dataset_file_size(std::size_t count, std::size_t h, std::size_t w, std::size_t metadata_bytes) {
    const std::size_t header = kMagic.size() + 6 * sizeof(std::uint32_t);
    const std::size_t record = sizeof(std::uint32_t) + sizeof(float) + sizeof(std::uint64_t) +
                               2 * kChannels * h * w * sizeof(float);
    return header + count * record + sizeof(std::uint32_t) + metadata_bytes;
}

void write_dataset(const std::filesystem::path& path, const DomainDataset& dataset,
                   const std::optional<SensorProfile>& profile) {
    dataset.validate();
    const auto& shape = dataset.pairs.front().noisy.shape();
    if (shape.size() != 3 || shape[0] != kChannels) {
        throw ContractViolation("write_dataset: pairs must be 4 x h x w, got " + numcore::shape_str(shape));
    }
    const auto h = static_cast<std::uint32_t>(shape[1]);
    const auto w = static_cast<std::uint32_t>(shape[2]);

    std::vector<char> buf;
    Writer out(buf);
    out.bytes(kMagic.data(), kMagic.size());
    out.put<std::uint32_t>(kVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.pairs.size()));
    out.put<std::uint32_t>(kChannels);
    out.put<std::uint32_t>(h);
    out.put<std::uint32_t>(w);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.sensor_id));
    for (const auto& p : dataset.pairs) {
        out.put<std::uint32_t>(static_cast<std::uint32_t>(p.iso));
        out.put<float>(p.light_factor);
        out.put<std::uint64_t>(p.scene_seed);
        out.bytes(p.noisy.data().data(), p.noisy.numel() * sizeof(float));
        out.bytes(p.clean.data().data(), p.clean.numel() * sizeof(float));
    }
    nlohmann::json meta = {{"split", std::string(to_string(dataset.split))}};
    if (profile) meta["profile"] = profile_to_json(*profile);
    const std::string text = meta.dump();
    out.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
    out.bytes(text.data(), text.size());

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
    file.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!file) throw IoError("failed writing '" + path.string() + "'");
}

DatasetFile read_dataset(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path.string() + "' for reading");
    const std::vector<char> buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader in(buf);
    std::array<char, 8> magic{};
    if (buf.size() < magic.size()) {
        throw DatasetParseError(ParseErrorKind::bad_magic, "'" + path.string() + "' is too short to be a dataset");
    }
    in.take(magic.data(), magic.size(), "magic");
    if (magic != kMagic) {
        throw DatasetParseError(ParseErrorKind::bad_magic, "'" + path.string() + "' is not an ADLRAW1 dataset");
    }
    const auto version = in.get<std::uint32_t>("version");
    if (version != kVersion) {
        throw DatasetParseError(ParseErrorKind::bad_version,
                                "unsupported dataset version " + std::to_string(version));
    }
    const auto count = in.get<std::uint32_t>("count");
    const auto channels = in.get<std::uint32_t>("channels");
    const auto h = in.get<std::uint32_t>("height");
    const auto w = in.get<std::uint32_t>("width");
    const auto sensor = in.get<std::uint32_t>("sensor id");
    if (channels != kChannels || h == 0 || w == 0 || count == 0) {
        throw DatasetParseError(ParseErrorKind::shape_mismatch,
                                "dataset header declares " + std::to_string(count) + " pairs of " +
                                    std::to_string(channels) + "x" + std::to_string(h) + "x" +
                                    std::to_string(w));
    }
    const std::size_t plane = static_cast<std::size_t>(channels) * h * w;
    const std::size_t record = 16 + 2 * plane * sizeof(float);
    if (in.remaining() < static_cast<std::size_t>(count) * record) {
        throw DatasetParseError(ParseErrorKind::truncated, "dataset file truncated: expected " +
                                                               std::to_string(count) + " records");
    }

    DatasetFile result;
    result.dataset.sensor_id = static_cast<int>(sensor);
    result.dataset.pairs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SamplePair p;
        p.sensor_id = static_cast<int>(sensor);
        p.iso = static_cast<int>(in.get<std::uint32_t>("iso"));
        p.light_factor = in.get<float>("light factor");
        p.scene_seed = in.get<std::uint64_t>("scene seed");
        std::vector<float> noisy(plane), clean(plane);
        in.take(noisy.data(), plane * sizeof(float), "noisy plane");
        in.take(clean.data(), plane * sizeof(float), "clean plane");
        p.noisy = Tensor({channels, h, w}, std::move(noisy));
        p.clean = Tensor({channels, h, w}, std::move(clean));
        result.dataset.pairs.push_back(std::move(p));
    }
    const auto meta_len = in.get<std::uint32_t>("metadata length");
    if (in.remaining() != meta_len) {
        throw DatasetParseError(in.remaining() < meta_len ? ParseErrorKind::truncated
                                                          : ParseErrorKind::shape_mismatch,
                                "metadata block length " + std::to_string(meta_len) + " does not match " +
                                    std::to_string(in.remaining()) + " trailing bytes");
    }
    std::string text(meta_len, '\0');
    in.take(text.data(), meta_len, "metadata");
    try {
        result.metadata = nlohmann::json::parse(text);
        result.dataset.split = parse_split(result.metadata.value("split", std::string("source")));
    } catch (const std::exception& e) {
        throw DatasetParseError(ParseErrorKind::bad_metadata, std::string("bad dataset metadata: ") + e.what());
    }
    return result;
}

} // namespace adlraw::sensorsim
