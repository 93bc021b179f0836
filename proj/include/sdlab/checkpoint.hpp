#pragma once

#include <string>

#include "sdlab/model.hpp"

namespace sdlab {

// Single-file archive: magic + version + JSON directory (model config,
// step count, training-mode string, named array index) + raw float64 data.
// Loading rebuilds the model from the stored config and validates every
// array's name and shape against it.

void save_checkpoint(SegModel& model, const std::string& train_mode,
                     const std::string& path);

struct LoadedCheckpoint {
    ModelConfig config;
    std::string train_mode;
    std::int64_t step_count = 0;
    std::shared_ptr<SegModel> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sdlab
