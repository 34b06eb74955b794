#pragma once

// Dataset model: the 8-attribute score vector, painting records with expert
// annotations, patch mask layouts, stratified splits, and corpus IO.
//
// On-disk corpus layout (schema "aacp-corpus-1"):
//   <dir>/images/<id>.ppm     8-bit binary PPM
//   <dir>/annotations.json    records, provenance and expert scores
//   <dir>/manifest.json       named splits over record ids

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aacp/image.hpp"

namespace aacp::data {

inline constexpr int kAttributeCount = 8;
inline constexpr const char* kCorpusSchema = "aacp-corpus-1";
inline constexpr const char* kGeneratorVersion = "proc-paint-1";

// Fixed attribute order; every serialized vector uses these names.
extern const std::array<std::string, kAttributeCount> kAttributeNames;

// Index of an attribute name, or throws UsageError listing the valid names.
int attribute_index(const std::string& name);

// Eight aesthetic scores, each on the 0..10 scale.
struct AttributeVector {
    std::array<double, kAttributeCount> values{};

    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    bool operator==(const AttributeVector&) const = default;

    void validate() const;  // throws ValidationError when any value leaves [0,10]
};

struct Provenance {
    enum class Kind { Real, Synthetic };
    Kind kind = Kind::Synthetic;
    std::uint64_t seed = 0;          // meaningful for synthetic records
    std::string generator_version;   // empty for real records
};

struct PaintingRecord {
    std::string id;
    Image image;
    std::vector<AttributeVector> annotations;  // one entry per expert
    Provenance provenance;
};

struct Corpus {
    std::vector<PaintingRecord> records;

    const PaintingRecord* find(const std::string& id) const {
        for (const auto& r : records)
            if (r.id == id) return &r;
        return nullptr;
    }
};

// Per-attribute arithmetic mean over the expert list.
AttributeVector average_expert_scores(const std::vector<AttributeVector>& annotations);

// ---------------------------------------------------------------------------
// Patch masking
// ---------------------------------------------------------------------------

struct MaskLayout {
    int patch = 16;
    std::int64_t total = 0;                  // P = (H/patch) * (W/patch)
    std::vector<std::int64_t> visible_ids;   // ascending
    std::vector<std::int64_t> masked_ids;    // ascending, disjoint from visible
};

// Uniform selection without replacement of floor(ratio * P) masked patches.
MaskLayout mask_patches(int height, int width, double ratio, int patch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic painting generation
// ---------------------------------------------------------------------------

// Parameter ranges are validated; every field maps to attribute labels by the
// closed-form rules documented with generate_synthetic_painting.
struct GeneratorSpec {
    int canvas = 64;               // in {32..512}, divisible by 16
    int element_count = 8;         // 0..16, one element per layout cell
    double stroke_jitter = 0.3;    // [0,1]; outline raggedness -> roughness
    double scatter = 0.3;          // [0,1]; anchor displacement -> chaos
    int shape_kinds = 3;           // 1..4 distinct silhouettes -> singleness
    double symmetry = 0.5;         // [0,1]; mirror correlation -> regularity
    double background_lum = 0.85;  // [0,1] background lightness
    double saturation = 0.6;       // [0,1] palette saturation -> excitement

    void validate() const;
};

struct GeneratedPainting {
    PaintingRecord record;       // single analytic annotation attached
    double covered_fraction;     // of canvas pixels painted by elements
    double mean_luminance;       // of the final image, 0..255
    double mean_saturation;      // mean (max-min)/255 over pixels
};

// Deterministic for (spec, seed). Labels, all on 0..10:
//   brightness = 10 * mean_luminance / 255          (measured)
//   excitement = 10 * mean_saturation               (measured)
//   roughness  = 10 * stroke_jitter                 (parameter)
//   singleness = 10 * (4 - shape_kinds) / 3         (parameter)
//   chaos      = 10 * scatter                       (parameter)
//   emptiness  = 10 * (1 - covered_fraction)        (measured)
//   simplicity = 10 * (1 - element_count / 16)      (parameter)
//   regularity = 10 * symmetry                      (parameter)
// Elements live in disjoint layout cells, so adding an element always paints
// fresh pixels and emptiness is strictly decreasing in element_count for a
// fixed seed.
GeneratedPainting generate_synthetic_painting(const GeneratorSpec& spec, std::uint64_t seed);

// Samples a GeneratorSpec uniformly over the documented ranges.
GeneratorSpec sample_spec(int canvas, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitManifest {
    std::map<std::string, std::vector<std::string>> subsets;  // name -> record ids
    std::uint64_t seed = 0;

    const std::vector<std::string>& subset(const std::string& name) const;
};

// Stratifies by the mean ground-truth score over `bins` equal bins of [0,10];
// within each bin the subset proportions match `fractions` within one record.
// Bins with fewer records than subsets fall back to seeded round-robin (a
// warning is logged).
SplitManifest stratified_split(const Corpus& corpus, const std::vector<std::pair<std::string, double>>& fractions,
                               int bins, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corpus IO
// ---------------------------------------------------------------------------

void save_corpus(const Corpus& corpus, const SplitManifest& manifest, const std::filesystem::path& dir);

struct LoadedCorpus {
    Corpus corpus;
    SplitManifest manifest;
};

// A directory without annotations.json loads as an empty corpus.
LoadedCorpus load_corpus(const std::filesystem::path& dir);

}  // namespace aacp::data
