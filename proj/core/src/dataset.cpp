#include "lusgate/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lusgate/errors.hpp"
#include "lusgate/pgm.hpp"
#include "lusgate/rng.hpp"

namespace lusgate {

const char* quality_name(Quality q) { return q == Quality::Sufficient ? "sufficient" : "insufficient"; }

const char* diagnosis_name(Diagnosis d) {
    switch (d) {
        case Diagnosis::Positive: return "positive";
        case Diagnosis::Control: return "control";
        default: return "unknown";
    }
}

const char* site_name(Site s) { return s == Site::A ? "A" : "B"; }

Quality parse_quality(const std::string& s) {
    if (s == "sufficient") return Quality::Sufficient;
    if (s == "insufficient") return Quality::Insufficient;
    throw SpecError("unknown quality label: " + s);
}

Diagnosis parse_diagnosis(const std::string& s) {
    if (s == "positive") return Diagnosis::Positive;
    if (s == "control") return Diagnosis::Control;
    if (s == "unknown") return Diagnosis::Unknown;
    throw SpecError("unknown diagnosis label: " + s);
}

Site parse_site(const std::string& s) {
    if (s == "A") return Site::A;
    if (s == "B") return Site::B;
    throw SpecError("unknown site: " + s);
}

std::vector<std::pair<std::string, Diagnosis>> Manifest::patients() const {
    std::vector<std::pair<std::string, Diagnosis>> out;
    std::set<std::string> seen;
    for (const auto& rec : records)
        if (seen.insert(rec.patient_id).second) out.push_back({rec.patient_id, rec.label.diagnosis});
    return out;
}

SiteSummary Manifest::summary(Site site) const {
    SiteSummary s;
    std::set<std::string> pats;
    for (const auto& rec : records) {
        if (rec.site != site) continue;
        ++s.frames;
        pats.insert(rec.patient_id);
        (rec.label.quality == Quality::Sufficient ? s.sufficient : s.insufficient)++;
        if (rec.label.diagnosis == Diagnosis::Positive) ++s.positive;
        if (rec.label.diagnosis == Diagnosis::Control) ++s.control;
    }
    s.patients = static_cast<int>(pats.size());
    return s;
}

namespace {

constexpr const char* kManifestHeader = "lusgate-manifest v1";

int timestamp_from_frame_id(const std::string& frame_id) {
    // frame ids end in _NNNNN; absent or malformed suffixes order as 0
    auto pos = frame_id.rfind('_');
    if (pos == std::string::npos || pos + 1 >= frame_id.size()) return 0;
    int value = 0;
    for (std::size_t i = pos + 1; i < frame_id.size(); ++i) {
        char c = frame_id[i];
        if (c < '0' || c > '9') return 0;
        value = value * 10 + (c - '0');
    }
    return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path.string());

    std::string header;
    if (!std::getline(is, header)) throw SpecError("empty manifest: " + path.string());
    if (header != kManifestHeader) throw SpecError("unknown manifest schema version: " + header);

    Manifest m;
    m.root = path.parent_path();
    std::set<std::string> ids;
    std::map<std::string, Site> patient_site;
    std::string line;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 6)
            throw SpecError("manifest line " + std::to_string(line_no) + ": expected 6 tab-separated fields");
        FrameMeta rec;
        rec.frame_id = fields[0];
        rec.path = fields[1];
        rec.patient_id = fields[2];
        rec.site = parse_site(fields[3]);
        rec.label.quality = parse_quality(fields[4]);
        rec.label.diagnosis = parse_diagnosis(fields[5]);
        rec.timestamp_index = timestamp_from_frame_id(rec.frame_id);

        if (!ids.insert(rec.frame_id).second) throw SpecError("duplicate frame_id: " + rec.frame_id);
        auto [it, fresh] = patient_site.emplace(rec.patient_id, rec.site);
        if (!fresh && it->second != rec.site)
            throw SpecError("patient id spans two sites: " + rec.patient_id);
        if (!std::filesystem::exists(m.root / rec.path))
            throw IoError("manifest references a missing frame file: " + (m.root / rec.path).string());
        m.records.push_back(std::move(rec));
    }
    if (m.records.empty()) throw SpecError("empty manifest: " + path.string());
    return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open manifest for writing: " + path.string());
    os << kManifestHeader << "\n";
    for (const auto& rec : manifest.records) {
        os << rec.frame_id << '\t' << rec.path << '\t' << rec.patient_id << '\t' << site_name(rec.site)
           << '\t' << quality_name(rec.label.quality) << '\t' << diagnosis_name(rec.label.diagnosis)
           << '\n';
    }
    if (!os) throw IoError("failed writing manifest: " + path.string());
}

Tensor load_frame(const Manifest& manifest, const FrameMeta& meta) {
    return image_to_tensor(read_pgm(manifest.frame_path(meta)));
}

const std::vector<std::string>& FoldSplit::test_patients(int fold) const {
    if (fold < 0 || fold >= k) throw InvalidArgument("fold index out of range");
    return folds[fold];
}

std::vector<std::string> FoldSplit::train_patients(int fold) const {
    if (fold < 0 || fold >= k) throw InvalidArgument("fold index out of range");
    std::vector<std::string> out;
    for (int f = 0; f < k; ++f)
        if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
    return out;
}

FoldSplit patient_kfold(const std::vector<std::pair<std::string, Diagnosis>>& patients, int k,
                        std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("k must be at least 2");
    if (static_cast<std::size_t>(k) > patients.size())
        throw InvalidArgument("k exceeds the patient count");
    {
        std::set<std::string> ids;
        for (const auto& [id, diag] : patients)
            if (!ids.insert(id).second) throw InvalidArgument("duplicate patient id: " + id);
    }

    FoldSplit split;
    split.k = k;
    split.folds.resize(k);

    // per diagnosis class: seeded shuffle, then round-robin deal; the deal
    // cursor carries across classes so total fold sizes stay balanced too
    std::map<Diagnosis, std::vector<std::string>> by_class;
    for (const auto& [id, diag] : patients) by_class[diag].push_back(id);
    int class_index = 0;
    std::size_t cursor = 0;
    for (auto& [diag, ids] : by_class) {
        std::sort(ids.begin(), ids.end());
        Rng rng(derive_seed(seed, "kfold", class_index++));
        rng.shuffle(ids);
        for (auto& id : ids) split.folds[cursor++ % k].push_back(std::move(id));
    }
    for (auto& fold : split.folds) std::sort(fold.begin(), fold.end());
    return split;
}

bool FrameFilter::matches(const FrameLabel& label) const {
    if (quality && label.quality != *quality) return false;
    if (diagnosis && label.diagnosis != *diagnosis) return false;
    return true;
}

std::vector<FrameMeta> frames_for(const Manifest& manifest, const std::vector<std::string>& patient_ids,
                                  const FrameFilter& filter) {
    std::set<std::string> wanted(patient_ids.begin(), patient_ids.end());
    std::set<std::string> known;
    for (const auto& rec : manifest.records) known.insert(rec.patient_id);
    for (const auto& id : wanted)
        if (!known.count(id)) throw InvalidArgument("unknown patient id: " + id);

    std::vector<FrameMeta> out;
    for (const auto& rec : manifest.records)
        if (wanted.count(rec.patient_id) && filter.matches(rec.label)) out.push_back(rec);
    return out;
}

}  // namespace lusgate
