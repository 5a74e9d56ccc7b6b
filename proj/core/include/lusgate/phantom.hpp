#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lusgate/dataset.hpp"
#include "lusgate/tensor.hpp"

namespace lusgate {

enum class InsufficientMode { None, Occluded, OffTarget, LowGain, SaturatedNoise };

const char* mode_name(InsufficientMode m);

struct PhantomConfig {
    int frame_h = 64;
    int frame_w = 64;
    int n_patients_positive = 10;
    int n_patients_control = 12;
    int frames_per_patient = 100;
    double insufficient_fraction = 0.15;
    double noise_level = 0.40;  // speckle intensity scale
    Site site = Site::B;
    std::uint64_t seed = 1;

    void validate() const;
};

// Fully-resolved per-frame generation parameters. Geometry is drawn once from
// the per-frame seed at construction so tests can introspect or override it.
struct FrameRecipe {
    Quality quality = Quality::Sufficient;
    InsufficientMode mode = InsufficientMode::None;
    Diagnosis diagnosis = Diagnosis::Control;
    int h = 64;
    int w = 64;
    double noise_level = 0.40;
    std::uint64_t seed = 0;

    // sector geometry
    double fan_half_angle = 0.55;  // radians
    double apex_shift = 0.0;       // horizontal apex offset, fraction of width

    // pleural band / A-lines
    double band_depth = 0.35;  // fraction of height
    double band_tilt = 0.0;    // rows per column
    double band_sigma = 1.1;   // vertical thickness, px
    double band_gain = 0.95;

    // B-lines (positive frames only)
    int n_blines = 0;
    std::array<double, 3> bline_pos{};  // fraction of fan half-width, in [-1,1]
    double bline_sigma = 0.9;           // horizontal thickness, px
    double bline_gain = 0.42;

    void validate() const;
    FrameLabel label() const;
};

FrameRecipe make_frame_recipe(const PhantomConfig& config, Quality quality, InsufficientMode mode,
                              Diagnosis diagnosis, std::uint64_t frame_seed);

// Deterministic render of one frame; pixels in [0,1], 0 outside the fan mask.
Tensor generate_frame(const FrameRecipe& recipe);

struct PlannedFrame {
    std::string patient_id;
    int frame_index = 0;
    FrameRecipe recipe;

    std::string frame_id(Site site) const;
};

// The full dataset layout as a pure function of the config: patient roster,
// per-frame quality/mode assignment, per-frame seeds.
std::vector<PlannedFrame> dataset_plan(const PhantomConfig& config);

// Renders the plan to out_dir: PGM frames under out_dir/frames plus
// out_dir/manifest.tsv. Returns the loaded-equivalent manifest.
Manifest generate_dataset(const PhantomConfig& config, const std::filesystem::path& out_dir);

}  // namespace lusgate
