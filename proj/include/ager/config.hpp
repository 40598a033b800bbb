#pragma once

// Flat key = value run configuration with typed parsing, unknown-key
// rejection and a canonical serialization whose FNV hash stamps
// checkpoints and dataset headers.

#include <cstdint>
#include <string>
#include <vector>

namespace ager {

struct RunConfig {
    // model
    int dim = 256;
    int heads = 8;
    int ffn_mult = 4;
    int centers_h1 = 16, centers_o1 = 64;
    int centers_h2 = 4, centers_o2 = 8;
    int sa_layers1 = 4, sa_layers2 = 2;
    int decoder_layers = 3;
    int patterns = 3;
    int num_classes = 5;
    int num_verbs = 4;
    int d_pos = 64, d_spa = 16, d_cls = 64;
    int d_txt = 512, d_word = 64;
    double gate_threshold = 0.7;
    double temperature = 1.0;
    bool hard_assign = false;
    bool cue_switch = true;
    bool separate_query_pos = false;

    // loss
    double lambda = 0.75;
    double alpha_a = 2.5, alpha_e = 1.0, alpha_t = 1.5;
    double focal_alpha = 0.25, focal_gamma = 2.0;
    bool clamp_cos_weight = true;
    std::string sim_metric = "weighted";  // weighted | ce | cos | ce_plus_cos

    // training (desk-scale defaults; preset=paper switches to the paper schedule)
    std::string preset = "desk";
    int batch = 8;
    int epochs = 30;
    double lr_backbone = 1e-5;
    double lr = 2.5e-4;
    double weight_decay = 1e-4;
    std::vector<int> decay_epochs = {20, 26};
    double lr_decay_factor = 0.1;
    uint64_t seed = 0;
    std::string dtype = "f32";  // f32 | f64

    // data
    int raster = 128;
    int train_scenes = 200;
    int test_scenes = 50;
    double rare_verb_skew = 1.0;
    std::string data_root;
    std::string text_table;
    std::string word_table;

    void validate() const;
    std::string canonical_string() const;
    uint64_t hash() const;
    double lr_at_epoch(int epoch, double base) const;
};

// Parse "key = value" lines ('#' comments allowed). Unknown keys are errors.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace ager
