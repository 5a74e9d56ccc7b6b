#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "lusgate/errors.hpp"
#include "lusgate/eval.hpp"

using namespace lusgate;

namespace {

// brute-force oracle: enumerate every threshold by direct counting
struct OraclePoint {
    double threshold, sens, spec;
};

std::vector<OraclePoint> enumerate_thresholds(const std::vector<double>& scores,
                                              const std::vector<int>& labels) {
    std::set<double> distinct(scores.begin(), scores.end());
    std::vector<double> thresholds(distinct.begin(), distinct.end());
    thresholds.push_back(*distinct.rbegin() + 1.0);
    std::vector<OraclePoint> out;
    for (double t : thresholds) {
        long long tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] >= t;
            if (labels[i] == 1)
                (pred ? tp : fn)++;
            else
                (pred ? fp : tn)++;
        }
        out.push_back({t, tp + fn ? double(tp) / (tp + fn) : 0.0, tn + fp ? double(tn) / (tn + fp) : 0.0});
    }
    return out;
}

// Mann-Whitney identity: AUC = P(score_pos > score_neg) + 0.5 P(tie)
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / pairs;
}

}  // namespace

TEST_CASE("confusion matches the hand-enumerated examples") {
    auto c = confusion({0.9, 0.1}, {1, 0}, 0.5);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);

    c = confusion({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0}, 0.5);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);

    // threshold 0 predicts everything positive
    c = confusion({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0}, 0.0);
    CHECK(c.fp == 2);
    CHECK(c.fn == 0);

    // score exactly at threshold counts as positive
    c = confusion({0.5}, {1}, 0.5);
    CHECK(c.tp == 1);
}

TEST_CASE("confusion rejects malformed inputs") {
    CHECK_THROWS_AS(confusion({}, {}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(confusion({0.5}, {1, 0}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(confusion({0.5}, {2}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(confusion({std::nan("")}, {1}, 0.5), NumericError);
}

TEST_CASE("accuracy follows the direct ratio") {
    CHECK(accuracy({1, 1, 0, 0}) == 1.0);
    CHECK(accuracy({0, 0, 1, 1}) == 0.0);
    CHECK(accuracy({86, 0, 0, 14}) == doctest::Approx(0.86).epsilon(1e-12));
    CHECK_THROWS_AS(accuracy({0, 0, 0, 0}), InvalidArgument);
}

TEST_CASE("roc curve matches hand examples") {
    SUBCASE("perfect separation passes through (0,1) with AUC 1") {
        auto roc = roc_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
        bool through_top_left = false;
        for (const auto& p : roc)
            through_top_left = through_top_left || (p.fp_rate == 0.0 && p.tp_rate == 1.0);
        CHECK(through_top_left);
        CHECK(auc(roc) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant scores collapse to the two endpoints") {
        auto roc = roc_curve({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0});
        REQUIRE(roc.size() == 2);
        CHECK(roc.front().fp_rate == 0.0);
        CHECK(roc.front().tp_rate == 0.0);
        CHECK(roc.back().fp_rate == 1.0);
        CHECK(roc.back().tp_rate == 1.0);
        CHECK(auc(roc) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("the documented (0, 0.5) point lies on the curve") {
        auto roc = roc_curve({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
        bool found = false;
        for (const auto& p : roc) found = found || (p.fp_rate == 0.0 && p.tp_rate == 0.5);
        CHECK(found);
        CHECK(roc.front().fp_rate == 0.0);
        CHECK(roc.back().tp_rate == 1.0);
    }
    SUBCASE("single-class labels are rejected") {
        CHECK_THROWS_AS(roc_curve({0.2, 0.8}, {1, 1}), InvalidArgument);
        CHECK_THROWS_AS(auc({{0.0, 0.0}}), InvalidArgument);
        CHECK_THROWS_AS(auc({{1.0, 1.0}, {0.0, 0.0}}), InvalidArgument);  // unsorted
    }
}

TEST_CASE("operating points match the threshold-enumeration example") {
    auto op = sens_at_spec({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}, 0.9);
    CHECK(op.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(op.achieved == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(op.attained);

    // perfectly separated: any target reaches full sensitivity
    op = sens_at_spec({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, 0.95);
    CHECK(op.value == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(sens_at_spec({0.9, 0.1}, {1, 0}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(sens_at_spec({0.9, 0.1}, {1, 1}, 0.9), InvalidArgument);
}

TEST_CASE("metrics agree with brute-force oracles over 1000 random score sets") {
    std::mt19937 gen(2024);
    std::uniform_int_distribution<int> size_dist(2, 40);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 1000; ++trial) {
        const int n = size_dist(gen);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        const bool quantized = trial % 3 == 0;  // force score ties regularly
        for (int i = 0; i < n; ++i) {
            double s = u(gen);
            scores[i] = quantized ? std::round(s * 8.0) / 8.0 : s;
            labels[i] = u(gen) < 0.5 ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;  // both classes present

        // confusion at a random threshold against direct counting
        const double t = u(gen);
        auto c = confusion(scores, labels, t);
        long long tp = 0, tn = 0, fp = 0, fn = 0;
        for (int i = 0; i < n; ++i) {
            const bool pred = scores[i] >= t;
            if (labels[i] == 1)
                (pred ? tp : fn)++;
            else
                (pred ? fp : tn)++;
        }
        REQUIRE(c.tp == tp);
        REQUIRE(c.tn == tn);
        REQUIRE(c.fp == fp);
        REQUIRE(c.fn == fn);
        REQUIRE(c.total() == n);
        REQUIRE(c.tp_rate() + c.fn_rate() == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(c.tn_rate() + c.fp_rate() == doctest::Approx(1.0).epsilon(1e-12));

        // ROC staircase against the enumeration oracle, AUC against Mann-Whitney
        auto roc = roc_curve(scores, labels);
        auto oracle = enumerate_thresholds(scores, labels);
        REQUIRE(roc.size() == oracle.size());
        for (std::size_t i = 1; i < roc.size(); ++i) {
            REQUIRE(roc[i].fp_rate >= roc[i - 1].fp_rate);
            REQUIRE(roc[i].tp_rate >= roc[i - 1].tp_rate);
        }
        REQUIRE(roc.front().fp_rate == 0.0);
        REQUIRE(roc.front().tp_rate == 0.0);
        REQUIRE(roc.back().fp_rate == 1.0);
        REQUIRE(roc.back().tp_rate == 1.0);
        const double a = auc(roc);
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
        REQUIRE(a == doctest::Approx(pairwise_auc(scores, labels)).epsilon(1e-12));

        // operating points against exhaustive search over the same thresholds
        for (double target : kOperatingTargets) {
            auto op = sens_at_spec(scores, labels, target);
            double best = -1.0;
            for (const auto& p : oracle)
                if (p.spec >= target) best = std::max(best, p.sens);
            REQUIRE(op.attained);
            REQUIRE(op.value == doctest::Approx(best).epsilon(1e-12));

            auto op2 = spec_at_sens(scores, labels, target);
            best = -1.0;
            for (const auto& p : oracle)
                if (p.sens >= target) best = std::max(best, p.spec);
            REQUIRE(op2.attained);
            REQUIRE(op2.value == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("sens_at_spec never increases with a stricter target") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 30; ++i) {
            scores.push_back(std::round(u(gen) * 10.0) / 10.0);
            labels.push_back(u(gen) < 0.5);
        }
        labels[0] = 1;
        labels[1] = 0;
        double prev = 2.0;
        for (double target : {0.5, 0.8, 0.9, 0.95}) {
            const double s = sens_at_spec(scores, labels, target).value;
            CHECK(s <= prev);
            prev = s;
        }
    }
}

TEST_CASE("screened_eval splits gated from ungated and audits the gate") {
    std::vector<GatedScore> scores = {
        {"f1", 0.9, true, 1, 0.8, 1},   // accepted, sufficient: gate tp
        {"f2", 0.8, true, 1, 0.3, 0},   // accepted, sufficient: gate tp
        {"f3", 0.2, false, 0, 0.9, 1},  // rejected, insufficient: gate tn
        {"f4", 0.6, true, 0, 0.2, 0},   // accepted, insufficient: gate fp
        {"f5", 0.1, false, 1, 0.7, 1},  // rejected, sufficient: gate fn
    };
    auto res = screened_eval(scores, 0.5);
    CHECK(res.qa_confusion.tp == 2);
    CHECK(res.qa_confusion.tn == 1);
    CHECK(res.qa_confusion.fp == 1);
    CHECK(res.qa_confusion.fn == 1);
    CHECK(res.rejected_ids == std::vector<std::string>{"f3", "f5"});
    CHECK(res.ungated.n == 5);
    CHECK(res.gated.n == 3);
    // gated frames f1 (0.8|1), f2 (0.3|0), f4 (0.2|0): all correct at 0.5
    CHECK(res.gated.accuracy_value == doctest::Approx(1.0).epsilon(1e-12));
    // ungated adds f3 (0.9|1 correct) and f5 (0.7|1 correct)
    CHECK(res.ungated.accuracy_value == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(screened_eval({}, 0.5), InvalidArgument);
}

TEST_CASE("accept-all gating reproduces ungated metrics bit-exactly") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GatedScore> scores;
    for (int i = 0; i < 200; ++i) {
        GatedScore s;
        s.frame_id = "f" + std::to_string(i);
        s.p_qa = u(gen);
        s.accepted = true;  // threshold 0 accepts everything
        s.quality_label = u(gen) < 0.8;
        s.p_positive = u(gen);
        s.diag_label = u(gen) < 0.5;
        scores.push_back(s);
    }
    auto res = screened_eval(scores, 0.5);
    CHECK(res.rejected_ids.empty());
    CHECK(res.gated.n == res.ungated.n);
    CHECK(res.gated.accuracy_value == res.ungated.accuracy_value);
    CHECK(res.gated.auc_value == res.ungated.auc_value);
    CHECK(res.gated.counts.tp == res.ungated.counts.tp);
    CHECK(res.gated.counts.tn == res.ungated.counts.tn);
    CHECK(res.gated.counts.fp == res.ungated.counts.fp);
    CHECK(res.gated.counts.fn == res.ungated.counts.fn);
    REQUIRE(res.gated.roc.size() == res.ungated.roc.size());
    for (std::size_t i = 0; i < res.gated.roc.size(); ++i) {
        CHECK(res.gated.roc[i].fp_rate == res.ungated.roc[i].fp_rate);
        CHECK(res.gated.roc[i].tp_rate == res.ungated.roc[i].tp_rate);
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(res.gated.sens_at_spec_targets[i].value == res.ungated.sens_at_spec_targets[i].value);
        CHECK(res.gated.spec_at_sens_targets[i].value == res.ungated.spec_at_sens_targets[i].value);
    }
}

TEST_CASE("an all-rejecting gate yields an empty report, not an exception") {
    std::vector<GatedScore> scores = {{"f1", 0.1, false, 1, 0.8, 1}, {"f2", 0.2, false, 0, 0.3, 0}};
    auto res = screened_eval(scores, 0.5);
    CHECK(res.gated.empty);
    CHECK(res.gated.n == 0);
    CHECK(res.ungated.n == 2);
    CHECK(res.rejected_ids.size() == 2);
}

TEST_CASE("machine report line carries exactly the documented columns") {
    auto report = compute_metrics({0.9, 0.1}, {1, 0}, 0.5);
    CHECK(machine_report_line("bin", report) ==
          "bin 1.000000 1.000000 1.000000 0.000000 0.000000 "
          "1.000000 1.000000 1.000000 1.000000 1.000000 1.000000");

    MetricsReport empty;
    empty.empty = true;
    CHECK(machine_report_line("nd", empty) == "nd na na na na na na na na na na na");

    auto single = compute_metrics({0.9, 0.8}, {1, 1}, 0.5);
    CHECK(single.single_class);
    const std::string line = machine_report_line("bin+nd", single);
    CHECK(line.substr(0, 15) == "bin+nd 1.000000");
    CHECK(line.find("na na na na na na") != std::string::npos);

    // 12 space-separated fields in every case
    for (const std::string& l : {machine_report_line("bin", report), machine_report_line("nd", empty)})
        CHECK(std::count(l.begin(), l.end(), ' ') == 11);
}
