#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdlab/tensor.hpp"

namespace sdlab {

struct Sample {
    Tensor image;  // 1 x 3 x H x W, values in [0,1]
    Tensor mask;   // 1 x 1 x H x W, values in {0,1}
    std::string id;
};

struct Dataset {
    std::vector<Sample> samples;

    bool empty() const { return samples.empty(); }
    size_t size() const { return samples.size(); }
};

struct Batch {
    Tensor images;  // n x 3 x H x W
    Tensor labels;  // n x 1 x H x W
    std::vector<std::string> ids;
};

enum class TextureFamily { Smooth, Granular, Striated };

TextureFamily texture_family_from_string(const std::string& s);
std::string texture_family_to_string(TextureFamily t);

// One synthetic "center": an appearance configuration with its own hue,
// texture statistics, foreground size range, noise level and vignetting.
struct ShiftConfig {
    double hue_shift = 0.0;  // degrees
    double blob_min = 0.03;  // fraction of image area, per blob
    double blob_max = 0.12;
    TextureFamily texture = TextureFamily::Smooth;
    double noise_sigma = 0.02;
    double vignette = 0.1;

    void validate() const;
};

struct SplitPlan {
    std::vector<std::string> train_centers;
    std::vector<std::string> test_centers;
    int per_center_count = 40;
    int test_per_center_count = -1;  // -1: same as per_center_count

    int resolved_test_count() const {
        return test_per_center_count < 0 ? per_center_count : test_per_center_count;
    }
    // Throws when a center id appears on both sides of a generalization plan.
    void validate() const;
};

// Built-in six-center configuration; c6 is the held-out center.
std::map<std::string, ShiftConfig> default_center_shifts();
SplitPlan default_split_plan();

// Writes <root>/<center>/images/*.png, <root>/<center>/masks/*.png plus a
// manifest.json recording (seed, plan, shifts). Fully deterministic in its
// arguments.
void generate_synthetic_corpus(const std::string& root, const SplitPlan& plan,
                               const std::map<std::string, ShiftConfig>& shifts,
                               std::uint64_t seed, int size);

// Loads image/mask pairs matched by filename stem, in lexicographic stem
// order. Images are bilinearly resized to the target and scaled to [0,1];
// masks are nearest-neighbor resized and thresholded at 0.5.
Dataset load_folder_dataset(const std::string& images_dir, const std::string& masks_dir,
                            int target_h, int target_w);

// Folder loader over <root>/<center>/{images,masks}; sample ids are prefixed
// with "<center>/".
Dataset load_centers(const std::string& root, const std::vector<std::string>& centers,
                     int target_h, int target_w);

std::vector<Batch> make_batches(const Dataset& data, int batch_size, std::uint64_t order_seed);

// True when no sample id carries one of the given center prefixes.
bool dataset_avoids_centers(const Dataset& data, const std::vector<std::string>& centers);

}  // namespace sdlab
