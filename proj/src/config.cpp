#include "crowdnav/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "crowdnav/errors.hpp"

namespace crowdnav {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KeyValue {
    std::string value;
    int line = 0;
};

// section -> key -> value
using ParsedConfig = std::map<std::string, std::map<std::string, KeyValue>>;

ParsedConfig parse_toml_subset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("config file not found: " + path);
    ParsedConfig parsed;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UserError("config line " + std::to_string(line_no) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            parsed[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty()) throw UserError("config line " + std::to_string(line_no) + ": empty key");
        parsed[section][key] = {value, line_no};
    }
    return parsed;
}

class ConfigReader {
public:
    explicit ConfigReader(ParsedConfig parsed) : parsed_(std::move(parsed)) {}

    void bind_double(const std::string& sec, const std::string& key, double* out) {
        bind(sec, key, [out](const std::string& v, const std::string& where) {
            *out = parse_double(v, where);
        });
    }
    void bind_int(const std::string& sec, const std::string& key, int* out) {
        bind(sec, key, [out](const std::string& v, const std::string& where) {
            const double d = parse_double(v, where);
            *out = static_cast<int>(d);
            if (static_cast<double>(*out) != d) throw UserError(where + ": expected an integer");
        });
    }
    void bind_u64(const std::string& sec, const std::string& key, std::uint64_t* out) {
        bind(sec, key, [out](const std::string& v, const std::string& where) {
            try {
                *out = std::stoull(v);
            } catch (...) {
                throw UserError(where + ": expected an unsigned integer");
            }
        });
    }
    void bind_string(const std::string& sec, const std::string& key, std::string* out) {
        bind(sec, key, [out](const std::string& v, const std::string&) { *out = v; });
    }

    // Every bound key consumed; anything left over is unknown.
    void finish() const {
        for (const auto& [sec, keys] : parsed_)
            for (const auto& [key, kv] : keys)
                if (!consumed_.count(sec + "." + key))
                    throw UserError("config line " + std::to_string(kv.line) + ": unknown key " +
                                    sec + "." + key);
    }

private:
    static double parse_double(const std::string& v, const std::string& where) {
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || v.empty())
            throw UserError(where + ": expected a number, got '" + v + "'");
        return d;
    }

    void bind(const std::string& sec, const std::string& key,
              const std::function<void(const std::string&, const std::string&)>& apply) {
        consumed_.insert(sec + "." + key);
        const auto s = parsed_.find(sec);
        if (s == parsed_.end()) return;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return;
        apply(k->second.value, "config key " + sec + "." + key);
    }

    ParsedConfig parsed_;
    std::set<std::string> consumed_;
};

}  // namespace

RunConfig load_run_config(const std::string& path, bool require_dataset) {
    ConfigReader reader(parse_toml_subset(path));
    RunConfig cfg;

    reader.bind_string("dataset", "path", &cfg.dataset.path);
    reader.bind_double("dataset", "dt", &cfg.dataset.dt);
    reader.bind_double("dataset", "frame_rate", &cfg.dataset.frame_rate);

    reader.bind_double("lidar", "max_range", &cfg.lidar.max_range);
    reader.bind_double("lidar", "agent_radius", &cfg.lidar.agent_radius);

    std::string variant = variant_name(cfg.network.variant);
    reader.bind_string("network", "variant", &variant);
    reader.bind_int("network", "conv_layers", &cfg.network.conv_layers);
    reader.bind_int("network", "filters_per_layer", &cfg.network.filters_per_layer);
    reader.bind_int("network", "lstm_units", &cfg.network.lstm_units);
    reader.bind_int("network", "dense_units", &cfg.network.dense_units);
    reader.bind_double("network", "dropout_rate", &cfg.network.dropout_rate);
    reader.bind_int("network", "bptt_window", &cfg.network.bptt_window);
    reader.bind_double("network", "bn_momentum", &cfg.network.bn_momentum);

    reader.bind_int("training", "epochs", &cfg.training.epochs);
    reader.bind_u64("training", "seed", &cfg.training.seed);
    reader.bind_double("training", "l2_weight", &cfg.training.l2_weight);
    reader.bind_double("training", "sigma", &cfg.training.sigma_deg);
    reader.bind_double("training", "train_fraction", &cfg.training.train_fraction);
    reader.bind_int("training", "augment_copies", &cfg.training.augment_copies);

    reader.bind_double("sfm", "desired_speed", &cfg.sfm.desired_speed);
    reader.bind_double("sfm", "relaxation_time", &cfg.sfm.relaxation_time);
    reader.bind_double("sfm", "agent_strength", &cfg.sfm.agent_strength);
    reader.bind_double("sfm", "agent_range", &cfg.sfm.agent_range);
    reader.bind_double("sfm", "obstacle_strength", &cfg.sfm.obstacle_strength);
    reader.bind_double("sfm", "obstacle_range", &cfg.sfm.obstacle_range);
    reader.bind_double("sfm", "max_speed", &cfg.sfm.max_speed);

    reader.bind_int("rollout", "max_steps", &cfg.rollout.max_steps);
    reader.bind_double("rollout", "target_radius", &cfg.rollout.target_radius);
    reader.bind_double("rollout", "collision_distance", &cfg.rollout.collision_distance);
    reader.bind_double("rollout", "max_speed", &cfg.rollout.max_speed);

    reader.finish();

    cfg.network.variant = variant_from_name(variant);
    cfg.network.sigma_deg = cfg.training.sigma_deg;
    cfg.rollout.lidar_max_range = cfg.lidar.max_range;
    cfg.rollout.agent_radius = cfg.lidar.agent_radius;

    if (cfg.dataset.dt <= 0.0) throw UserError("config: dataset.dt must be positive");
    if (cfg.lidar.max_range <= 0.0) throw UserError("config: lidar.max_range must be positive");
    if (cfg.lidar.agent_radius <= 0.0) throw UserError("config: lidar.agent_radius must be positive");
    if (cfg.training.epochs < 0) throw UserError("config: training.epochs must be >= 0");
    if (cfg.training.train_fraction <= 0.0 || cfg.training.train_fraction > 1.0)
        throw UserError("config: training.train_fraction must be in (0, 1]");
    if (cfg.training.augment_copies < 0)
        throw UserError("config: training.augment_copies must be >= 0");
    if (cfg.rollout.max_steps <= 0) throw UserError("config: rollout.max_steps must be positive");
    cfg.network.validate_variant_depth();

    if (require_dataset) {
        if (cfg.dataset.path.empty()) throw UserError("config: missing field dataset.path");
        if (!std::filesystem::exists(cfg.dataset.path))
            throw UserError("config: dataset file does not exist: " + cfg.dataset.path);
    }
    return cfg;
}

std::string default_config_text() {
    std::ostringstream out;
    const RunConfig d;
    out << "# crowdnav run configuration\n"
        << "# Every value below is stated explicitly, defaults included, so\n"
        << "# deviations between runs are always visible in the file.\n\n"
        << "[dataset]\n"
        << "path = \"dataset.json\"   # native dataset produced by `crowdnav import`\n"
        << "dt = " << d.dataset.dt << "            # seconds per step\n"
        << "frame_rate = " << d.dataset.frame_rate
        << "     # obsmat frame column -> seconds (seq_eth 15, seq_hotel 25)\n\n"
        << "[lidar]\n"
        << "max_range = " << d.lidar.max_range << "\n"
        << "agent_radius = " << d.lidar.agent_radius << "   # humans modeled as circles\n\n"
        << "[network]\n"
        << "variant = \"lstm\"        # lstm | conv-only\n"
        << "conv_layers = " << d.network.conv_layers << "\n"
        << "filters_per_layer = " << d.network.filters_per_layer << "\n"
        << "lstm_units = " << d.network.lstm_units << "\n"
        << "dense_units = " << d.network.dense_units << "\n"
        << "dropout_rate = " << d.network.dropout_rate << "\n"
        << "bptt_window = " << d.network.bptt_window << "\n"
        << "bn_momentum = " << d.network.bn_momentum << "\n\n"
        << "[training]\n"
        << "epochs = " << d.training.epochs << "\n"
        << "seed = " << d.training.seed << "\n"
        << "l2_weight = " << d.training.l2_weight << "\n"
        << "sigma = " << d.training.sigma_deg << "             # direction label smoothing, degrees\n"
        << "train_fraction = 0.6666666666666666\n"
        << "augment_copies = " << d.training.augment_copies
        << "    # rotated map replicas added to the training set\n\n"
        << "[sfm]\n"
        << "desired_speed = " << d.sfm.desired_speed << "\n"
        << "relaxation_time = " << d.sfm.relaxation_time << "\n"
        << "agent_strength = " << d.sfm.agent_strength << "\n"
        << "agent_range = " << d.sfm.agent_range << "\n"
        << "obstacle_strength = " << d.sfm.obstacle_strength << "\n"
        << "obstacle_range = " << d.sfm.obstacle_range << "\n"
        << "max_speed = " << d.sfm.max_speed << "\n\n"
        << "[rollout]\n"
        << "max_steps = " << d.rollout.max_steps << "\n"
        << "target_radius = " << d.rollout.target_radius << "\n"
        << "collision_distance = " << d.rollout.collision_distance << "\n"
        << "max_speed = " << d.rollout.max_speed << "\n";
    return out.str();
}

}  // namespace crowdnav
