#include "lusgate/loop.hpp"

#include <cstdio>

#include "lusgate/errors.hpp"
#include "lusgate/rng.hpp"

namespace lusgate {

void AcquisitionPolicy::validate() const {
    if (max_attempts < 1) throw InvalidArgument("max_attempts must be at least 1");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0,1]");
}

SimulationResult simulate_acquisition(const FrameSource& source, int n_locations,
                                      const QaModels& models, const AcquisitionPolicy& policy) {
    policy.validate();
    if (!source) throw InvalidArgument("null frame source");
    if (n_locations < 1) throw InvalidArgument("need at least one location");

    SimulationResult result;
    long long accepted_attempts = 0;
    for (int loc = 0; loc < n_locations; ++loc) {
        LocationLog entry;
        entry.location = loc;
        for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
            SourcedFrame frame = source(loc, attempt);
            auto verdict = assess(frame.pixels, frame.frame_id, models, policy.qa_variant,
                                  policy.threshold);
            ++result.log.total_attempts;
            entry.attempts.push_back({attempt, frame.frame_id, verdict, frame.label.quality});
            if (verdict.accepted) {
                entry.accepted = true;
                entry.accepted_frame_id = frame.frame_id;
                accepted_attempts += attempt + 1;
                result.accepted_frames.push_back(std::move(frame));
                break;
            }
        }
        result.log.locations.push_back(std::move(entry));
    }

    long long n_accepted = static_cast<long long>(result.accepted_frames.size());
    result.log.acceptance_rate = static_cast<double>(n_accepted) / n_locations;
    result.log.mean_attempts_per_accepted =
        n_accepted == 0 ? 0.0 : static_cast<double>(accepted_attempts) / n_accepted;
    return result;
}

FrameSource operator_source(const PhantomConfig& config, const std::vector<double>& schedule,
                            std::uint64_t seed) {
    config.validate();
    if (schedule.empty()) throw InvalidArgument("empty probability schedule");
    for (double p : schedule)
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("schedule probabilities must lie in [0,1]");

    return [config, schedule, seed](int location, int attempt) -> SourcedFrame {
        static constexpr InsufficientMode kModes[] = {
            InsufficientMode::Occluded, InsufficientMode::OffTarget, InsufficientMode::LowGain,
            InsufficientMode::SaturatedNoise};
        const auto draw_seed =
            derive_seed(seed, "loop", (static_cast<std::uint64_t>(location) << 16) | attempt);
        Rng rng(draw_seed);
        const double p_ins = schedule[std::min<std::size_t>(attempt, schedule.size() - 1)];
        const bool insufficient = rng.uniform() < p_ins;
        const auto mode = insufficient ? kModes[rng.below(4)] : InsufficientMode::None;
        const auto diagnosis = rng.below(2) == 0 ? Diagnosis::Positive : Diagnosis::Control;

        auto recipe = make_frame_recipe(config, insufficient ? Quality::Insufficient : Quality::Sufficient,
                                        mode, diagnosis, derive_seed(draw_seed, "frame"));
        char buf[48];
        std::snprintf(buf, sizeof buf, "loc%03d_att%d", location, attempt);
        return {generate_frame(recipe), buf, recipe.label()};
    };
}

std::string render_loop_log(const LoopLog& log) {
    std::string s;
    char buf[256];
    for (const auto& loc : log.locations) {
        for (const auto& a : loc.attempts) {
            std::snprintf(buf, sizeof buf, "location %03d attempt %d %s quality=%s\n", loc.location,
                          a.attempt, verdict_line(a.verdict).c_str(), quality_name(a.true_quality));
            s += buf;
        }
        const std::string outcome =
            loc.accepted ? "accepted(" + loc.accepted_frame_id + ")" : "exhausted";
        std::snprintf(buf, sizeof buf, "location %03d outcome %s\n", loc.location, outcome.c_str());
        s += buf;
    }
    std::size_t n_accepted = 0;
    for (const auto& loc : log.locations) n_accepted += loc.accepted ? 1 : 0;
    std::snprintf(buf, sizeof buf,
                  "summary locations=%zu accepted=%zu total_attempts=%lld acceptance_rate=%.6f "
                  "mean_attempts_per_accepted=%.6f\n",
                  log.locations.size(), n_accepted, log.total_attempts, log.acceptance_rate,
                  log.mean_attempts_per_accepted);
    s += buf;
    return s;
}

}  // namespace lusgate
