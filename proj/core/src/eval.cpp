#include "lusgate/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "lusgate/errors.hpp"

namespace lusgate {
namespace {

double ratio(long long num, long long den) {
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(num) / den;
}

void check_scored_set(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
    if (scores.empty()) throw InvalidArgument("empty score set");
    for (int l : labels)
        if (l != 0 && l != 1) throw InvalidArgument("labels must be 0 or 1");
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericError("non-finite score");
}

// distinct observed scores, descending, preceded by a predict-nothing threshold
std::vector<double> candidate_thresholds(const std::vector<double>& scores) {
    std::set<double> distinct(scores.begin(), scores.end());
    std::vector<double> out;
    out.push_back(*distinct.rbegin() + 1.0);
    for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) out.push_back(*it);
    return out;
}

// (tp, fp) at every candidate threshold from one descending sweep; equals
// confusion() at each threshold (score >= t) without the quadratic rescan
struct ThresholdSweep {
    std::vector<double> thresholds;  // descending
    std::vector<long long> tp, fp;   // aligned with thresholds; tp+fn=pos, fp+tn=neg
    long long pos = 0, neg = 0;
};

ThresholdSweep sweep_thresholds(const std::vector<double>& scores, const std::vector<int>& labels) {
    ThresholdSweep s;
    s.thresholds = candidate_thresholds(scores);
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (int l : labels) ++(l == 1 ? s.pos : s.neg);

    long long tp = 0, fp = 0;
    std::size_t next = 0;
    for (double t : s.thresholds) {
        while (next < order.size() && scores[order[next]] >= t) {
            ++(labels[order[next]] == 1 ? tp : fp);
            ++next;
        }
        s.tp.push_back(tp);
        s.fp.push_back(fp);
    }
    return s;
}

std::string fmt6(double v) {
    if (!std::isfinite(v)) return "na";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

double ConfusionCounts::tp_rate() const { return ratio(tp, tp + fn); }
double ConfusionCounts::tn_rate() const { return ratio(tn, tn + fp); }
double ConfusionCounts::fp_rate() const { return ratio(fp, fp + tn); }
double ConfusionCounts::fn_rate() const { return ratio(fn, fn + tp); }

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold) {
    check_scored_set(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1)
            (pred ? c.tp : c.fn)++;
        else
            (pred ? c.fp : c.tn)++;
    }
    return c;
}

double accuracy(const ConfusionCounts& counts) {
    if (counts.total() == 0) throw InvalidArgument("accuracy of an empty confusion matrix");
    return static_cast<double>(counts.tp + counts.tn) / counts.total();
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_scored_set(scores, labels);
    const long long pos = std::count(labels.begin(), labels.end(), 1);
    const long long neg = static_cast<long long>(labels.size()) - pos;
    if (pos == 0 || neg == 0) throw InvalidArgument("ROC needs both classes present");

    ThresholdSweep s = sweep_thresholds(scores, labels);
    std::vector<RocPoint> roc;
    for (std::size_t k = 0; k < s.thresholds.size(); ++k)
        roc.push_back({ratio(s.fp[k], neg), ratio(s.tp[k], pos)});
    return roc;  // descending thresholds => fp_rate ascends from (0,0) to (1,1)
}

double auc(const std::vector<RocPoint>& roc) {
    if (roc.size() < 2) throw InvalidArgument("ROC needs at least two points");
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        const double dx = roc[i].fp_rate - roc[i - 1].fp_rate;
        if (dx < -1e-12) throw InvalidArgument("ROC points are not sorted by fp_rate");
        area += dx * 0.5 * (roc[i].tp_rate + roc[i - 1].tp_rate);
    }
    return area;
}

namespace {

OperatingPoint best_operating_point(const std::vector<double>& scores, const std::vector<int>& labels,
                                    double target, bool maximize_sens) {
    check_scored_set(scores, labels);
    if (!(target > 0.0 && target <= 1.0)) throw InvalidArgument("operating-point target must lie in (0,1]");
    const long long pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<long long>(labels.size()))
        throw InvalidArgument("operating points need both classes present");

    ThresholdSweep s = sweep_thresholds(scores, labels);
    // strictest first: highest threshold when constraining specificity,
    // lowest when constraining sensitivity
    const std::size_t count = s.thresholds.size();
    OperatingPoint best{target, 0.0, 0.0, s.thresholds.front(), false};
    bool first = true;
    for (std::size_t step = 0; step < count; ++step) {
        const std::size_t k = maximize_sens ? step : count - 1 - step;
        const double t = s.thresholds[k];
        const double sens = ratio(s.tp[k], s.pos);
        const double spec = ratio(s.neg - s.fp[k], s.neg);
        const double constraint = maximize_sens ? spec : sens;
        const double objective = maximize_sens ? sens : spec;
        const double paired = maximize_sens ? spec : sens;
        if (first) {  // fallback: strictest threshold, used when nothing qualifies
            best = {target, objective, paired, t, false};
            first = false;
        }
        if (constraint >= target && (!best.attained || objective > best.value)) {
            best = {target, objective, paired, t, true};
        }
    }
    return best;
}

}  // namespace

OperatingPoint sens_at_spec(const std::vector<double>& scores, const std::vector<int>& labels,
                            double target_specificity) {
    return best_operating_point(scores, labels, target_specificity, true);
}

OperatingPoint spec_at_sens(const std::vector<double>& scores, const std::vector<int>& labels,
                            double target_sensitivity) {
    return best_operating_point(scores, labels, target_sensitivity, false);
}

MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold) {
    MetricsReport r;
    r.n = static_cast<long long>(scores.size());
    if (scores.empty()) {
        r.empty = true;
        return r;
    }
    r.counts = confusion(scores, labels, threshold);
    r.accuracy_value = accuracy(r.counts);
    const long long pos = std::count(labels.begin(), labels.end(), 1);
    r.single_class = (pos == 0 || pos == r.n);
    if (!r.single_class) {
        r.roc = roc_curve(scores, labels);
        r.auc_value = auc(r.roc);
        for (std::size_t i = 0; i < kOperatingTargets.size(); ++i) {
            r.sens_at_spec_targets[i] = sens_at_spec(scores, labels, kOperatingTargets[i]);
            r.spec_at_sens_targets[i] = spec_at_sens(scores, labels, kOperatingTargets[i]);
        }
    }
    return r;
}

ScreenedResult screened_eval(const std::vector<GatedScore>& scores, double diag_threshold) {
    if (scores.empty()) throw InvalidArgument("screened_eval over an empty test set");
    ScreenedResult out;
    std::vector<double> all_p, gated_p;
    std::vector<int> all_l, gated_l;
    for (const auto& s : scores) {
        all_p.push_back(s.p_positive);
        all_l.push_back(s.diag_label);
        if (s.accepted) {
            gated_p.push_back(s.p_positive);
            gated_l.push_back(s.diag_label);
        } else {
            out.rejected_ids.push_back(s.frame_id);
        }
        const bool pred_sufficient = s.accepted;
        if (s.quality_label == 1)
            (pred_sufficient ? out.qa_confusion.tp : out.qa_confusion.fn)++;
        else
            (pred_sufficient ? out.qa_confusion.fp : out.qa_confusion.tn)++;
    }
    out.ungated = compute_metrics(all_p, all_l, diag_threshold);
    out.gated = compute_metrics(gated_p, gated_l, diag_threshold);
    return out;
}

std::string machine_report_line(const std::string& variant, const MetricsReport& r) {
    std::string line = variant;
    auto push = [&line](const std::string& s) {
        line += ' ';
        line += s;
    };
    if (r.empty) {
        for (int i = 0; i < 11; ++i) push("na");
        return line;
    }
    push(fmt6(r.accuracy_value));
    push(fmt6(r.counts.tp_rate()));
    push(fmt6(r.counts.tn_rate()));
    push(fmt6(r.counts.fp_rate()));
    push(fmt6(r.counts.fn_rate()));
    for (int i = 0; i < 3; ++i) push(r.single_class ? "na" : fmt6(r.sens_at_spec_targets[i].value));
    for (int i = 0; i < 3; ++i) push(r.single_class ? "na" : fmt6(r.spec_at_sens_targets[i].value));
    return line;
}

std::string render_metrics_block(const std::string& title, const MetricsReport& r) {
    std::string s = "== " + title + " ==\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "frames          %lld%s\n", r.n, r.empty ? " (empty)" : "");
    s += buf;
    if (r.empty) return s;
    s += "accuracy        " + fmt6(r.accuracy_value) + "\n";
    std::snprintf(buf, sizeof buf, "confusion       tp=%lld tn=%lld fp=%lld fn=%lld\n", r.counts.tp,
                  r.counts.tn, r.counts.fp, r.counts.fn);
    s += buf;
    s += "rates           tpr=" + fmt6(r.counts.tp_rate()) + " tnr=" + fmt6(r.counts.tn_rate()) +
         " fpr=" + fmt6(r.counts.fp_rate()) + " fnr=" + fmt6(r.counts.fn_rate()) + "\n";
    if (r.single_class) {
        s += "roc             na (single-class set)\n";
        return s;
    }
    s += "auc             " + fmt6(r.auc_value) + "\n";
    for (std::size_t i = 0; i < kOperatingTargets.size(); ++i) {
        const auto& op = r.sens_at_spec_targets[i];
        std::snprintf(buf, sizeof buf, "sens@spec>=%.2f  %s (spec %s, thr %s%s)\n", op.target,
                      fmt6(op.value).c_str(), fmt6(op.achieved).c_str(), fmt6(op.threshold).c_str(),
                      op.attained ? "" : ", target unmet");
        s += buf;
    }
    for (std::size_t i = 0; i < kOperatingTargets.size(); ++i) {
        const auto& op = r.spec_at_sens_targets[i];
        std::snprintf(buf, sizeof buf, "spec@sens>=%.2f  %s (sens %s, thr %s%s)\n", op.target,
                      fmt6(op.value).c_str(), fmt6(op.achieved).c_str(), fmt6(op.threshold).c_str(),
                      op.attained ? "" : ", target unmet");
        s += buf;
    }
    return s;
}

}  // namespace lusgate
