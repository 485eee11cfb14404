#pragma once

#include <filesystem>

#include <json.hpp>

#include "facefuse/data/dataset.hpp"
#include "facefuse/data/synth.hpp"
#include "facefuse/expt/experiments.hpp"
#include "facefuse/task.hpp"
#include "facefuse/train/trainer.hpp"

namespace facefuse {

/// Everything a subcommand may read from a --config file.
struct RunConfig {
    SynthConfig synth;
    DataConfig data;
    Task task = Task::id;
    TrainConfig train;
    HeadConfig head;
};

/// Sections "synth", "data", "train" (with "task") and "head".
nlohmann::ordered_json to_json(const RunConfig& config);

/// Overrides only the keys present in `j`. ConfigError on unknown keys or
/// values of the wrong type.
void apply_json(RunConfig& config, const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace facefuse
