#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "aacp/data.hpp"
#include "aacp/errors.hpp"
#include "aacp/log.hpp"
#include "aacp/rng.hpp"

namespace aacp::data {

using nlohmann::json;

const std::array<std::string, kAttributeCount> kAttributeNames = {
    "brightness", "excitement", "roughness", "singleness", "chaos", "emptiness", "simplicity", "regularity"};

int attribute_index(const std::string& name) {
    for (int i = 0; i < kAttributeCount; ++i)
        if (kAttributeNames[static_cast<std::size_t>(i)] == name) return i;
    std::string valid;
    for (const auto& n : kAttributeNames) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown attribute '" + name + "'; valid names: " + valid);
}

void AttributeVector::validate() const {
    for (int i = 0; i < kAttributeCount; ++i)
        if (!(values[static_cast<std::size_t>(i)] >= 0.0 && values[static_cast<std::size_t>(i)] <= 10.0))
            throw ValidationError("attribute '" + kAttributeNames[static_cast<std::size_t>(i)] +
                                  "' out of [0,10]: " + std::to_string(values[static_cast<std::size_t>(i)]));
}

AttributeVector average_expert_scores(const std::vector<AttributeVector>& annotations) {
    if (annotations.empty()) throw UsageError("average_expert_scores: empty annotation list");
    AttributeVector mean;
    for (const auto& a : annotations)
        for (int i = 0; i < kAttributeCount; ++i) mean[i] += a[i];
    for (int i = 0; i < kAttributeCount; ++i)
        mean[i] = std::clamp(mean[i] / static_cast<double>(annotations.size()), 0.0, 10.0);
    return mean;
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

MaskLayout mask_patches(int height, int width, double ratio, int patch, std::uint64_t seed) {
    if (patch <= 0 || height % patch != 0 || width % patch != 0)
        throw ShapeError("mask_patches: image extents " + std::to_string(height) + "x" + std::to_string(width) +
                         " not divisible by patch " + std::to_string(patch));
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw ValidationError("mask_patches: ratio must lie in [0,1]");
    const std::int64_t total = static_cast<std::int64_t>(height / patch) * (width / patch);
    const auto masked_count = static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(total) + 1e-9));

    std::vector<std::int64_t> ids(static_cast<std::size_t>(total));
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(seed);
    for (std::int64_t i = 0; i < masked_count; ++i) {
        const auto j = i + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    MaskLayout layout;
    layout.patch = patch;
    layout.total = total;
    layout.masked_ids.assign(ids.begin(), ids.begin() + masked_count);
    layout.visible_ids.assign(ids.begin() + masked_count, ids.end());
    std::sort(layout.masked_ids.begin(), layout.masked_ids.end());
    std::sort(layout.visible_ids.begin(), layout.visible_ids.end());
    return layout;
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

const std::vector<std::string>& SplitManifest::subset(const std::string& name) const {
    const auto it = subsets.find(name);
    if (it == subsets.end()) throw DataError("manifest has no subset named '" + name + "'");
    return it->second;
}

SplitManifest stratified_split(const Corpus& corpus, const std::vector<std::pair<std::string, double>>& fractions,
                               int bins, std::uint64_t seed) {
    if (fractions.empty()) throw UsageError("stratified_split: no subsets requested");
    double sum = 0.0;
    for (const auto& [name, f] : fractions) {
        if (f <= 0.0) throw ValidationError("stratified_split: fraction for '" + name + "' must be positive");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ValidationError("stratified_split: fractions must sum to 1");
    if (bins < 1) throw ValidationError("stratified_split: bins must be >= 1");

    SplitManifest manifest;
    manifest.seed = seed;
    for (const auto& [name, f] : fractions) manifest.subsets[name];  // fixed key set

    // bin -> record indices; unannotated records go to a dedicated stratum
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        int bin = -1;
        if (!rec.annotations.empty()) {
            const auto gt = average_expert_scores(rec.annotations);
            double mean = 0.0;
            for (int a = 0; a < kAttributeCount; ++a) mean += gt[a];
            mean /= kAttributeCount;
            bin = std::min(bins - 1, static_cast<int>(std::floor(mean / 10.0 * bins)));
        }
        strata[bin].push_back(i);
    }

    const auto k = fractions.size();
    for (auto& [bin, members] : strata) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(bin + 1)));
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.uniform_int(i)]);

        if (members.size() < k) {
            log_warning("stratified_split: bin " + std::to_string(bin) + " holds " + std::to_string(members.size()) +
                        " records for " + std::to_string(k) + " subsets; assigning round-robin");
            std::size_t s = 0;
            for (const auto idx : members) {
                manifest.subsets[fractions[s % k].first].push_back(corpus.records[idx].id);
                ++s;
            }
            continue;
        }

        // floor allocation, remainder to the largest fractional parts
        std::vector<std::size_t> counts(k);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < k; ++s) {
            const double target = fractions[s].second * static_cast<double>(members.size());
            counts[s] = static_cast<std::size_t>(std::floor(target + 1e-9));
            assigned += counts[s];
            remainders.emplace_back(-(target - std::floor(target + 1e-9)), s);
        }
        std::stable_sort(remainders.begin(), remainders.end());
        for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned) ++counts[remainders[r % k].second];

        std::size_t cursor = 0;
        for (std::size_t s = 0; s < k; ++s)
            for (std::size_t c = 0; c < counts[s]; ++c)
                manifest.subsets[fractions[s].first].push_back(corpus.records[members[cursor++]].id);
    }
    for (auto& [name, ids] : manifest.subsets) std::sort(ids.begin(), ids.end());
    return manifest;
}

// ---------------------------------------------------------------------------
// Corpus IO
// ---------------------------------------------------------------------------

namespace {

json annotation_to_json(const AttributeVector& a) {
    json j;
    for (int i = 0; i < kAttributeCount; ++i) j[kAttributeNames[static_cast<std::size_t>(i)]] = a[i];
    return j;
}

AttributeVector annotation_from_json(const json& j) {
    AttributeVector a;
    for (int i = 0; i < kAttributeCount; ++i) {
        const auto& name = kAttributeNames[static_cast<std::size_t>(i)];
        if (!j.contains(name)) throw ParseError("missing attribute '" + name + "'");
        a[i] = j.at(name).get<double>();
    }
    a.validate();
    return a;
}

}  // namespace

void save_corpus(const Corpus& corpus, const SplitManifest& manifest, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "images");

    json ann;
    ann["schema_version"] = kCorpusSchema;
    ann["records"] = json::array();
    for (const auto& rec : corpus.records) {
        json r;
        r["id"] = rec.id;
        r["provenance"]["kind"] = rec.provenance.kind == Provenance::Kind::Real ? "real" : "synthetic";
        if (rec.provenance.kind == Provenance::Kind::Synthetic) {
            r["provenance"]["seed"] = rec.provenance.seed;
            r["provenance"]["generator_version"] = rec.provenance.generator_version;
        }
        r["annotations"] = json::array();
        for (const auto& a : rec.annotations) r["annotations"].push_back(annotation_to_json(a));
        ann["records"].push_back(std::move(r));
        save_ppm(rec.image, dir / "images" / (rec.id + ".ppm"));
    }
    std::ofstream af(dir / "annotations.json");
    if (!af) throw DataError("cannot write " + (dir / "annotations.json").string());
    af << ann.dump(2) << "\n";

    json man;
    man["schema_version"] = kCorpusSchema;
    man["seed"] = manifest.seed;
    man["splits"] = json::object();
    for (const auto& [name, ids] : manifest.subsets) man["splits"][name] = ids;
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw DataError("cannot write " + (dir / "manifest.json").string());
    mf << man.dump(2) << "\n";
}

LoadedCorpus load_corpus(const std::filesystem::path& dir) {
    LoadedCorpus out;
    const auto ann_path = dir / "annotations.json";
    if (!std::filesystem::exists(ann_path)) return out;  // empty corpus, no error

    json ann;
    {
        std::ifstream in(ann_path);
        if (!in) throw DataError("cannot open " + ann_path.string());
        try {
            in >> ann;
        } catch (const json::exception& e) {
            throw ParseError("annotations.json: " + std::string(e.what()));
        }
    }
    if (ann.value("schema_version", "") != kCorpusSchema)
        throw ParseError("annotations.json: unsupported schema_version '" + ann.value("schema_version", "") + "'");

    for (const auto& r : ann.value("records", json::array())) {
        std::string id = r.value("id", "");
        try {
            if (id.empty()) throw ParseError("record without id");
            PaintingRecord rec;
            rec.id = id;
            const auto& prov = r.at("provenance");
            const std::string kind = prov.at("kind").get<std::string>();
            if (kind == "real") {
                rec.provenance.kind = Provenance::Kind::Real;
            } else if (kind == "synthetic") {
                rec.provenance.kind = Provenance::Kind::Synthetic;
                rec.provenance.seed = prov.at("seed").get<std::uint64_t>();
                rec.provenance.generator_version = prov.value("generator_version", "");
            } else {
                throw ParseError("unknown provenance kind '" + kind + "'");
            }
            for (const auto& a : r.value("annotations", json::array()))
                rec.annotations.push_back(annotation_from_json(a));
            rec.image = load_ppm(dir / "images" / (id + ".ppm"));
            out.corpus.records.push_back(std::move(rec));
        } catch (const ParseError& e) {
            throw ParseError("annotations.json: record '" + id + "': " + e.what());
        } catch (const json::exception& e) {
            throw ParseError("annotations.json: record '" + id + "': " + e.what());
        }
    }

    const auto man_path = dir / "manifest.json";
    if (std::filesystem::exists(man_path)) {
        json man;
        std::ifstream in(man_path);
        try {
            in >> man;
        } catch (const json::exception& e) {
            throw ParseError("manifest.json: " + std::string(e.what()));
        }
        out.manifest.seed = man.value("seed", std::uint64_t{0});
        const json splits = man.value("splits", json::object());
        for (const auto& [name, ids] : splits.items())
            out.manifest.subsets[name] = ids.get<std::vector<std::string>>();
    } else {
        // no manifest: everything is trainable
        for (const auto& rec : out.corpus.records) out.manifest.subsets["train"].push_back(rec.id);
    }
    return out;
}

}  // namespace aacp::data
