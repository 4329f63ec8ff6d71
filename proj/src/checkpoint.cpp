#include "crowdnav/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "crowdnav/errors.hpp"

namespace crowdnav {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'N', 'C', 'K', '0', '0', '0', '1'};

json config_to_json(const NetworkConfig& c) {
    return {{"variant", variant_name(c.variant)},
            {"conv_layers", c.conv_layers},
            {"filters_per_layer", c.filters_per_layer},
            {"lstm_units", c.lstm_units},
            {"dense_units", c.dense_units},
            {"dropout_rate", c.dropout_rate},
            {"sigma_deg", c.sigma_deg},
            {"bptt_window", c.bptt_window},
            {"bn_momentum", c.bn_momentum}};
}

NetworkConfig config_from_json(const json& j) {
    NetworkConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.conv_layers = j.at("conv_layers").get<int>();
    c.filters_per_layer = j.at("filters_per_layer").get<int>();
    c.lstm_units = j.at("lstm_units").get<int>();
    c.dense_units = j.at("dense_units").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.sigma_deg = j.at("sigma_deg").get<double>();
    c.bptt_window = j.at("bptt_window").get<int>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    return c;
}

json tensor_directory(const NamedTensors& t) {
    json dir = json::array();
    for (const auto& e : t.items())
        dir.push_back({{"name", e.name}, {"shape", e.tensor.shape}, {"trainable", e.trainable}});
    return dir;
}

void write_payload(std::ofstream& out, const NamedTensors& t) {
    for (const auto& e : t.items())
        out.write(reinterpret_cast<const char*>(e.tensor.data.data()),
                  static_cast<std::streamsize>(e.tensor.data.size() * sizeof(double)));
}

NamedTensors read_tensors(std::ifstream& in, const json& dir, const std::string& path) {
    NamedTensors t;
    for (const auto& e : dir) {
        auto& tensor = t.add(e.at("name").get<std::string>(), e.at("shape").get<std::vector<int>>(),
                             e.at("trainable").get<bool>());
        in.read(reinterpret_cast<char*>(tensor.data.data()),
                static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
        if (!in) throw UserError("checkpoint truncated: " + path);
    }
    return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json header;
    header["config"] = config_to_json(ckpt.config);
    header["training_seed"] = ckpt.training_seed;
    header["lidar_max_range"] = ckpt.lidar_max_range;
    header["params"] = tensor_directory(ckpt.params);
    header["optimizer"] = {{"rho", ckpt.optimizer.rho},
                           {"eps", ckpt.optimizer.eps},
                           {"avg_sq_grad", tensor_directory(ckpt.optimizer.avg_sq_grad)},
                           {"avg_sq_update", tensor_directory(ckpt.optimizer.avg_sq_update)}};
    const std::string head = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = head.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    write_payload(out, ckpt.params);
    write_payload(out, ckpt.optimizer.avg_sq_grad);
    write_payload(out, ckpt.optimizer.avg_sq_update);
    if (!out) throw UserError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("checkpoint not found: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw UserError("not a checkpoint file: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string head(len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(len));
    if (!in) throw UserError("checkpoint truncated: " + path);

    json header;
    try {
        header = json::parse(head);
    } catch (const json::exception& e) {
        throw UserError("checkpoint header invalid: " + path + ": " + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(header.at("config"));
        ckpt.training_seed = header.at("training_seed").get<std::uint64_t>();
        ckpt.lidar_max_range = header.at("lidar_max_range").get<double>();
        ckpt.params = read_tensors(in, header.at("params"), path);
        ckpt.optimizer.rho = header.at("optimizer").at("rho").get<double>();
        ckpt.optimizer.eps = header.at("optimizer").at("eps").get<double>();
        ckpt.optimizer.avg_sq_grad = read_tensors(in, header.at("optimizer").at("avg_sq_grad"), path);
        ckpt.optimizer.avg_sq_update =
            read_tensors(in, header.at("optimizer").at("avg_sq_update"), path);
    } catch (const json::exception& e) {
        throw UserError("checkpoint header invalid: " + path + ": " + e.what());
    }
    return ckpt;
}

}  // namespace crowdnav
