#pragma once

#include <array>
#include <string>
#include <vector>

namespace lusgate {

struct ConfusionCounts {
    long long tp = 0, tn = 0, fp = 0, fn = 0;

    long long total() const { return tp + tn + fp + fn; }
    double tp_rate() const;  // tp / (tp + fn)
    double tn_rate() const;  // tn / (tn + fp)
    double fp_rate() const;  // fp / (fp + tn)
    double fn_rate() const;  // fn / (fn + tp)
};

// prediction positive <=> score >= threshold
ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold);
double accuracy(const ConfusionCounts& counts);

struct RocPoint {
    double fp_rate = 0.0;
    double tp_rate = 0.0;
};

// staircase over all distinct score thresholds plus the all-negative endpoint;
// sorted from (0,0) to (1,1); requires both classes present
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);
double auc(const std::vector<RocPoint>& roc);

struct OperatingPoint {
    double target = 0.0;
    double value = 0.0;      // best achievable metric among qualifying thresholds
    double achieved = 0.0;   // the paired metric actually attained at that threshold
    double threshold = 0.0;
    bool attained = false;   // some empirical threshold met the target
};

// max sensitivity over empirical thresholds whose specificity >= target;
// if none qualifies, the strictest threshold's point is returned with
// attained = false
OperatingPoint sens_at_spec(const std::vector<double>& scores, const std::vector<int>& labels,
                            double target_specificity);
OperatingPoint spec_at_sens(const std::vector<double>& scores, const std::vector<int>& labels,
                            double target_sensitivity);

constexpr std::array<double, 3> kOperatingTargets{0.8, 0.9, 0.95};

struct MetricsReport {
    long long n = 0;
    bool empty = false;        // gate rejected every frame
    bool single_class = false; // ROC/operating points undefined
    double accuracy_value = 0.0;
    ConfusionCounts counts;
    std::vector<RocPoint> roc;
    double auc_value = 0.0;
    std::array<OperatingPoint, 3> sens_at_spec_targets{};
    std::array<OperatingPoint, 3> spec_at_sens_targets{};
};

MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold);

// One scored frame flowing through the QA gate into diagnosis evaluation.
struct GatedScore {
    std::string frame_id;
    double p_qa = 0.0;        // active-variant quality score
    bool accepted = false;
    int quality_label = 0;    // 1 = sufficient
    double p_positive = 0.0;  // diagnosis score
    int diag_label = 0;       // 1 = positive
};

struct ScreenedResult {
    MetricsReport gated;
    MetricsReport ungated;
    std::vector<std::string> rejected_ids;
    ConfusionCounts qa_confusion;  // acceptance decision vs ground-truth quality
};

// Diagnosis metrics over all frames (ungated) and over QA-accepted frames
// (gated), plus the gate's own confusion against quality labels.
ScreenedResult screened_eval(const std::vector<GatedScore>& scores, double diag_threshold);

// fixed-precision row: variant acc tp tn fp fn sens@.8 .9 .95 spec@.8 .9 .95
std::string machine_report_line(const std::string& variant, const MetricsReport& report);
std::string render_metrics_block(const std::string& title, const MetricsReport& report);

}  // namespace lusgate
