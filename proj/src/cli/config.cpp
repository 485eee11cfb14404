#include "facefuse/cli/config.hpp"

#include <fstream>
#include <type_traits>

#include "facefuse/error.hpp"

namespace facefuse {

namespace {

using Json = nlohmann::json;

nlohmann::ordered_json train_json(const TrainConfig& t) {
    nlohmann::ordered_json j;
    j["batch_size"] = t.batch_size;
    j["iterations"] = t.iterations;
    j["lr_initial"] = t.lr.initial;
    j["lr_decay"] = t.lr.factor;
    j["lr_interval"] = t.resolved_interval();
    j["seed"] = t.seed;
    j["precision"] = std::string(to_string(t.precision));
    j["eval_every"] = t.resolved_eval_every();
    return j;
}

template <class T>
T value_of(const Json& j, const std::string& section, const std::string& key) {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!j.is_number_unsigned()) {
            throw ConfigError("config " + section + "." + key + " must be a non-negative integer, got " + j.dump());
        }
    }
    try {
        return j.get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config " + section + "." + key + ": wrong value type " + j.dump());
    }
}

// Calls handler(key, value) for every entry and rejects keys it does not claim.
template <class Handler>
void each_key(const Json& j, const std::string& section, Handler handler) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!handler(key, value)) throw ConfigError("unknown config key " + section + "." + key);
    }
}

bool apply_train_key(TrainConfig& t, const std::string& section, const std::string& key, const Json& v) {
    if (key == "batch_size") t.batch_size = value_of<std::size_t>(v, section, key);
    else if (key == "iterations") t.iterations = value_of<std::size_t>(v, section, key);
    else if (key == "lr_initial") t.lr.initial = value_of<double>(v, section, key);
    else if (key == "lr_decay") t.lr.factor = value_of<double>(v, section, key);
    else if (key == "lr_interval") t.lr.interval = value_of<std::size_t>(v, section, key);
    else if (key == "seed") t.seed = value_of<std::uint64_t>(v, section, key);
    else if (key == "precision") t.precision = parse_precision(value_of<std::string>(v, section, key));
    else if (key == "eval_every") t.eval_every = value_of<std::size_t>(v, section, key);
    else return false;
    return true;
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["synth"]["ids_per_subgroup"] = c.synth.ids_per_subgroup;
    j["synth"]["images_per_id"] = c.synth.images_per_id;
    j["synth"]["resolution"] = c.synth.resolution;
    j["synth"]["noise"] = c.synth.noise;
    j["synth"]["seed"] = c.synth.seed;

    j["data"]["manifest"] = c.data.manifest.generic_string();
    j["data"]["augment_factor"] = c.data.augment.factor;
    j["data"]["augment_seed"] = c.data.augment.seed;
    j["data"]["train_fraction"] = c.data.train_fraction;
    j["data"]["split_seed"] = c.data.split_seed;
    j["data"]["group_by_source"] = c.data.group_by_source;

    j["train"] = train_json(c.train);
    j["train"]["task"] = std::string(to_string(c.task));

    j["head"] = train_json(c.head.train);
    j["head"]["seed"] = c.head.seed;
    j["head"]["hidden1"] = c.head.layers.hidden1;
    j["head"]["hidden2"] = c.head.layers.hidden2;
    j["head"]["normalize"] = c.head.normalize;
    return j;
}

void apply_json(RunConfig& c, const Json& j) {
    each_key(j, "config", [&](const std::string& section, const Json& body) {
        if (section == "synth") {
            each_key(body, section, [&](const std::string& key, const Json& v) {
                if (key == "ids_per_subgroup") c.synth.ids_per_subgroup = value_of<std::size_t>(v, section, key);
                else if (key == "images_per_id") c.synth.images_per_id = value_of<std::size_t>(v, section, key);
                else if (key == "resolution") c.synth.resolution = value_of<std::size_t>(v, section, key);
                else if (key == "noise") c.synth.noise = value_of<double>(v, section, key);
                else if (key == "seed") c.synth.seed = value_of<std::uint64_t>(v, section, key);
                else return false;
                return true;
            });
        } else if (section == "data") {
            each_key(body, section, [&](const std::string& key, const Json& v) {
                if (key == "manifest") c.data.manifest = value_of<std::string>(v, section, key);
                else if (key == "augment_factor") c.data.augment.factor = value_of<std::size_t>(v, section, key);
                else if (key == "augment_seed") c.data.augment.seed = value_of<std::uint64_t>(v, section, key);
                else if (key == "train_fraction") c.data.train_fraction = value_of<double>(v, section, key);
                else if (key == "split_seed") c.data.split_seed = value_of<std::uint64_t>(v, section, key);
                else if (key == "group_by_source") c.data.group_by_source = value_of<bool>(v, section, key);
                else return false;
                return true;
            });
        } else if (section == "train") {
            each_key(body, section, [&](const std::string& key, const Json& v) {
                if (key == "task") {
                    c.task = parse_task(value_of<std::string>(v, section, key));
                    return true;
                }
                return apply_train_key(c.train, section, key, v);
            });
        } else if (section == "head") {
            each_key(body, section, [&](const std::string& key, const Json& v) {
                if (key == "seed") c.head.seed = value_of<std::uint64_t>(v, section, key);
                else if (key == "hidden1") c.head.layers.hidden1 = value_of<std::size_t>(v, section, key);
                else if (key == "hidden2") c.head.layers.hidden2 = value_of<std::size_t>(v, section, key);
                else if (key == "normalize") c.head.normalize = value_of<bool>(v, section, key);
                else return apply_train_key(c.head.train, section, key, v);
                return true;
            });
        } else {
            return false;
        }
        return true;
    });
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfig config;
    apply_json(config, j);
    return config;
}

}  // namespace facefuse
