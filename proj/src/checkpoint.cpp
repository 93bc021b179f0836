#include "sdlab/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sdlab {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"encoder_kind", encoder_kind_to_string(c.encoder_kind)},
            {"base_channels", c.base_channels},
            {"rfb_channels", c.rfb_channels},
            {"input_h", c.input_h},
            {"input_w", c.input_w},
            {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.encoder_kind = encoder_kind_from_string(j.at("encoder_kind").get<std::string>());
    c.base_channels = j.at("base_channels").get<int>();
    c.rfb_channels = j.at("rfb_channels").get<int>();
    c.input_h = j.at("input_h").get<int>();
    c.input_w = j.at("input_w").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(SegModel& model, const std::string& train_mode, const std::string& path) {
    auto params = model.parameters();

    nlohmann::json header;
    header["format_version"] = kVersion;
    header["model"] = config_to_json(model.config());
    header["step_count"] = model.step_count;
    header["train_mode"] = train_mode;

    nlohmann::json arrays = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& p : params) {
        arrays.push_back({{"name", p.name},
                          {"shape", {p.value->n, p.value->c, p.value->h, p.value->w}},
                          {"offset", offset},
                          {"count", p.value->size()}});
        offset += p.value->size();
    }
    header["arrays"] = arrays;

    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    f.write(kMagic, sizeof(kMagic));
    std::uint32_t ver = kVersion;
    f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    std::uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& p : params) {
        f.write(reinterpret_cast<const char*>(p.value->data.data()),
                static_cast<std::streamsize>(p.value->data.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");

    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
    }
    std::uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    if (ver != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ver));
    }
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw std::runtime_error("checkpoint: truncated header in '" + path + "'");

    nlohmann::json header = nlohmann::json::parse(hs);

    LoadedCheckpoint out;
    out.config = config_from_json(header.at("model"));
    out.train_mode = header.at("train_mode").get<std::string>();
    out.step_count = header.at("step_count").get<std::int64_t>();
    out.model = std::make_shared<SegModel>(out.config);
    out.model->step_count = out.step_count;

    auto params = out.model->parameters();
    const auto& arrays = header.at("arrays");
    if (arrays.size() != params.size()) {
        throw std::runtime_error("checkpoint: array count mismatch (file has " +
                                 std::to_string(arrays.size()) + ", config implies " +
                                 std::to_string(params.size()) + ")");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& a = arrays[i];
        if (a.at("name").get<std::string>() != params[i].name) {
            throw std::runtime_error("checkpoint: array name mismatch at index " +
                                     std::to_string(i) + ": file has '" +
                                     a.at("name").get<std::string>() + "', expected '" +
                                     params[i].name + "'");
        }
        auto shape = a.at("shape").get<std::vector<int>>();
        auto expect = params[i].value->shape();
        if (shape.size() != 4 || shape[0] != expect[0] || shape[1] != expect[1] ||
            shape[2] != expect[2] || shape[3] != expect[3]) {
            throw std::runtime_error("checkpoint: shape mismatch for '" + params[i].name + "'");
        }
        if (a.at("count").get<std::int64_t>() != params[i].value->size()) {
            throw std::runtime_error("checkpoint: count mismatch for '" + params[i].name + "'");
        }
        f.read(reinterpret_cast<char*>(params[i].value->data.data()),
               static_cast<std::streamsize>(params[i].value->data.size() * sizeof(double)));
        if (!f) throw std::runtime_error("checkpoint: truncated data in '" + path + "'");
    }
    return out;
}

}  // namespace sdlab
