#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lusgate/tensor.hpp"

namespace lusgate {

enum class Quality { Sufficient, Insufficient };
enum class Diagnosis { Positive, Control, Unknown };
enum class Site { A, B };

const char* quality_name(Quality q);
const char* diagnosis_name(Diagnosis d);
const char* site_name(Site s);
Quality parse_quality(const std::string& s);
Diagnosis parse_diagnosis(const std::string& s);
Site parse_site(const std::string& s);

struct FrameLabel {
    Quality quality = Quality::Sufficient;
    Diagnosis diagnosis = Diagnosis::Unknown;
};

struct FrameMeta {
    std::string frame_id;
    std::string path;  // relative to the manifest directory
    std::string patient_id;
    Site site = Site::B;
    int timestamp_index = 0;  // frame order within acquisition, parsed from frame_id
    FrameLabel label;
};

struct SiteSummary {
    int frames = 0;
    int patients = 0;
    int sufficient = 0;
    int insufficient = 0;
    int positive = 0;
    int control = 0;
};

struct Manifest {
    std::filesystem::path root;  // directory the manifest file lives in
    std::vector<FrameMeta> records;

    // patients in first-appearance order with their diagnosis
    std::vector<std::pair<std::string, Diagnosis>> patients() const;
    SiteSummary summary(Site site) const;
    std::filesystem::path frame_path(const FrameMeta& meta) const { return root / meta.path; }
};

// Text format: header line "lusgate-manifest v1", then one record per line:
// frame_id<TAB>path<TAB>patient_id<TAB>site<TAB>quality<TAB>diagnosis
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Frame pixels in [0,1] loaded from the record's PGM file.
Tensor load_frame(const Manifest& manifest, const FrameMeta& meta);

struct FoldSplit {
    int k = 0;
    std::vector<std::vector<std::string>> folds;  // patient ids per fold

    const std::vector<std::string>& test_patients(int fold) const;
    std::vector<std::string> train_patients(int fold) const;
};

// Patient-level k-fold split, stratified by diagnosis: per-class patient
// counts across folds differ by at most one. Deterministic per seed.
FoldSplit patient_kfold(const std::vector<std::pair<std::string, Diagnosis>>& patients, int k,
                        std::uint64_t seed);

// Records for the given patients, in manifest order, optionally filtered.
struct FrameFilter {
    std::optional<Quality> quality;
    std::optional<Diagnosis> diagnosis;

    bool matches(const FrameLabel& label) const;
};

std::vector<FrameMeta> frames_for(const Manifest& manifest, const std::vector<std::string>& patient_ids,
                                  const FrameFilter& filter = {});

}  // namespace lusgate
