#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lusgate/phantom.hpp"
#include "lusgate/qa.hpp"

namespace lusgate {

struct AcquisitionPolicy {
    int max_attempts = 5;
    QaVariant qa_variant = QaVariant::BinNd;
    double threshold = 0.5;

    void validate() const;
};

// One frame delivered by an acquisition source.
struct SourcedFrame {
    Tensor pixels;
    std::string frame_id;
    FrameLabel label;  // ground truth for auditing; the gate never sees it
};

// Yields the frame for (location, attempt); both indices are 0-based.
using FrameSource = std::function<SourcedFrame(int location, int attempt)>;

struct AttemptRecord {
    int attempt = 0;
    std::string frame_id;
    QualityVerdict verdict;
    Quality true_quality = Quality::Sufficient;
};

struct LocationLog {
    int location = 0;
    std::vector<AttemptRecord> attempts;
    bool accepted = false;
    std::string accepted_frame_id;  // empty when exhausted
};

struct LoopLog {
    std::vector<LocationLog> locations;
    long long total_attempts = 0;
    double acceptance_rate = 0.0;
    double mean_attempts_per_accepted = 0.0;  // 0 when nothing was accepted
};

struct SimulationResult {
    std::vector<SourcedFrame> accepted_frames;  // one per accepted location, in location order
    LoopLog log;
};

// Requests frames per location until the QA gate accepts one or max_attempts
// is reached. Every drawn frame is logged exactly once.
SimulationResult simulate_acquisition(const FrameSource& source, int n_locations,
                                      const QaModels& models, const AcquisitionPolicy& policy);

// Scripted operator: attempt t at any location draws an insufficient frame
// with probability schedule[min(t, len-1)]; a decreasing schedule models an
// operator correcting on feedback. Deterministic per (seed, location, attempt).
FrameSource operator_source(const PhantomConfig& config, const std::vector<double>& schedule,
                            std::uint64_t seed);

// Line-per-attempt audit trail plus a summary block.
std::string render_loop_log(const LoopLog& log);

}  // namespace lusgate
