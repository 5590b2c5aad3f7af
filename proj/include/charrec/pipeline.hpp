#pragma once

#include <charrec/config.hpp>
#include <charrec/error.hpp>
#include <charrec/hog.hpp>
#include <charrec/image.hpp>
#include <charrec/imageio.hpp>
#include <charrec/manifest.hpp>
#include <charrec/parallel.hpp>
#include <charrec/rpca.hpp>
#include <charrec/src.hpp>
#include <charrec/synth.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace charrec {

/// Loads an image and resamples it to the working resolution.
inline GrayImage prepare_image(const std::filesystem::path& path, int side,
                               std::optional<std::string> label = std::nullopt) {
    GrayImage img = resize_bilinear(load_image(path), side);
    img.set_label(std::move(label));
    return img;
}

/// Applies the configured denoiser. In batch mode images sharing a group id are
/// decomposed together; per-image mode ignores the groups.
inline std::vector<GrayImage> denoise_images(std::vector<GrayImage> images,
                                             const std::vector<std::size_t>& groups,
                                             const PipelineConfig& cfg) {
    if (!cfg.denoise) return images;
    if (cfg.rpca_mode == RpcaMode::per_image) {
        parallel_for(images.size(), cfg.workers, [&](std::size_t i) {
            images[i] = denoise_image(images[i], cfg.rpca, cfg.image_side).clean;
        });
        return images;
    }
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < images.size(); ++i) members[groups.at(i)].push_back(i);
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [g, idx] : members) batches.push_back(std::move(idx));
    parallel_for(batches.size(), cfg.workers, [&](std::size_t b) {
        std::vector<GrayImage> stack;
        for (std::size_t i : batches[b]) stack.push_back(images[i]);
        std::vector<GrayImage> clean = denoise_batch(stack, cfg.rpca, cfg.image_side);
        for (std::size_t k = 0; k < batches[b].size(); ++k) images[batches[b][k]] = std::move(clean[k]);
    });
    return images;
}

struct FeatureBatch {
    std::vector<std::vector<double>> descriptors;  // one per image, in input order
    std::vector<bool> flat;                        // the resized input had no intensity variation
    HogLayout layout;
};

inline bool is_flat(const GrayImage& img) {
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    return *hi - *lo < 1e-12;
}

/// Load -> resize -> (denoise) -> HOG for every entry, in manifest order.
inline FeatureBatch extract_features(const CorpusManifest& manifest,
                                     const std::vector<ManifestEntry>& entries,
                                     const std::vector<std::size_t>& groups,
                                     const PipelineConfig& cfg) {
    std::vector<GrayImage> images(entries.size());
    parallel_for(entries.size(), cfg.workers, [&](std::size_t i) {
        images[i] = prepare_image(manifest.resolve(entries[i]), cfg.image_side, entries[i].label);
    });
    FeatureBatch out;
    out.flat.resize(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) out.flat[i] = is_flat(images[i]);
    images = denoise_images(std::move(images), groups, cfg);
    out.layout = hog_layout(cfg.image_side, cfg.image_side, cfg.hog);
    out.descriptors.resize(images.size());
    parallel_for(images.size(), cfg.workers, [&](std::size_t i) {
        out.descriptors[i] = hog_descriptor(images[i], cfg.hog).values;
    });
    return out;
}

/// A dictionary together with the provenance needed to reject mismatched use.
struct TrainedDictionary {
    Dictionary dictionary;
    std::string preprocessing_fingerprint;
    std::string hog_fingerprint;
    std::string rpca_fingerprint;
    std::map<std::string, std::string> config;  // effective settings, minus execution knobs
    std::vector<std::string> sources;           // manifest path of each atom
    std::vector<std::string> warnings;
};

inline std::map<std::string, std::string> reproducible_config(const PipelineConfig& cfg) {
    auto c = effective_config(cfg);
    c.erase("workers");
    c.erase("seed");
    return c;
}

inline bool is_zero_descriptor(const std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    return std::sqrt(sq) < 1e-12;
}

/// A flat crop has an all-zero descriptor before denoising; afterwards round-off
/// in the low-rank estimate can leave tiny gradients that normalization would
/// blow up, so flatness of the input decides as well.
inline bool is_degenerate(const FeatureBatch& feats, std::size_t i) {
    return feats.flat[i] || is_zero_descriptor(feats.descriptors[i]);
}

/// Builds the training dictionary. Degenerate images (flat crops) cannot be
/// normalized; they are skipped and reported as warnings.
inline TrainedDictionary build_dictionary(const CorpusManifest& manifest, const PipelineConfig& cfg) {
    cfg.validate();
    const std::vector<ManifestEntry> train = manifest.split(Split::train);
    if (train.empty()) throw InvalidArgument("build_dictionary: manifest has no train entries");

    std::vector<std::string> classes;
    for (const auto& e : train) classes.push_back(e.label);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<std::size_t> groups;
    for (const auto& e : train) {
        groups.push_back(static_cast<std::size_t>(
            std::lower_bound(classes.begin(), classes.end(), e.label) - classes.begin()));
    }

    const FeatureBatch feats = extract_features(manifest, train, groups, cfg);

    TrainedDictionary out;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (is_degenerate(feats, i)) {
            out.warnings.push_back("skipped " + train[i].path +
                                   ": zero HOG descriptor (flat image)");
        } else {
            kept.push_back(i);
        }
    }
    if (kept.empty()) throw InvalidArgument("build_dictionary: every training image was skipped");

    Matrix features(static_cast<Eigen::Index>(feats.layout.length()),
                    static_cast<Eigen::Index>(kept.size()));
    std::vector<ClassId> labels;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto& d = feats.descriptors[kept[k]];
        for (std::size_t r = 0; r < d.size(); ++r)
            features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = d[r];
        labels.push_back(train[kept[k]].label);
        out.sources.push_back(train[kept[k]].path);
    }
    for (const auto& cls : classes) {
        if (std::find(labels.begin(), labels.end(), cls) == labels.end()) {
            out.warnings.push_back("class " + cls + " has no usable training image");
        }
    }

    out.dictionary = Dictionary::from_features(features, std::move(labels));
    out.preprocessing_fingerprint = preprocessing_fingerprint(cfg);
    out.hog_fingerprint = hog_fingerprint(cfg);
    out.rpca_fingerprint = rpca_fingerprint(cfg);
    out.config = reproducible_config(cfg);
    return out;
}

enum class Classifier { src, nn };

inline const char* to_string(Classifier c) { return c == Classifier::src ? "src" : "nn"; }

struct SamplePrediction {
    std::string path;
    ClassId truth;
    ClassId predicted;
    double margin = 0.0;
    bool degraded = false;
};

struct EvalReport {
    std::string classifier;
    double lambda = 0.0;
    double accuracy = 0.0;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<ClassId> class_ids;
    std::map<ClassId, double> per_class_accuracy;
    std::vector<std::vector<long long>> confusion;  // [truth][predicted], class_ids order
    std::string config_fingerprint;
    std::string dictionary_fingerprint;
    std::size_t degraded_solves = 0;
    std::vector<SamplePrediction> per_sample;
    std::vector<std::string> warnings;
};

inline std::string evaluation_fingerprint(const std::string& preprocessing, Classifier classifier,
                                          double lambda) {
    std::string s = "preprocessing=" + preprocessing + "\nclassifier=" + to_string(classifier) + "\n";
    if (classifier == Classifier::src) s += "src.lambda=" + detail::format_real(lambda) + "\n";
    return sha256_hex(s);
}

struct EvalOptions {
    Classifier classifier = Classifier::src;
    double lambda = 1e-2;
};

/// Classifies every test entry through the train-time feature path and tallies
/// accuracy, per-class accuracy and the confusion matrix.
inline EvalReport evaluate(const CorpusManifest& manifest, const TrainedDictionary& trained,
                           const PipelineConfig& cfg, const EvalOptions& options) {
    cfg.validate();
    const std::string current = preprocessing_fingerprint(cfg);
    if (current != trained.preprocessing_fingerprint) {
        throw FingerprintMismatch(trained.preprocessing_fingerprint, current);
    }
    if (options.classifier == Classifier::src && !(options.lambda > 0.0)) {
        throw InvalidArgument("evaluate: lambda must be positive");
    }
    const Dictionary& dict = trained.dictionary;

    EvalReport report;
    report.classifier = to_string(options.classifier);
    report.lambda = options.classifier == Classifier::src ? options.lambda : 0.0;
    report.class_ids = dict.class_ids();
    report.config_fingerprint =
        evaluation_fingerprint(current, options.classifier, options.lambda);
    report.dictionary_fingerprint = trained.preprocessing_fingerprint;

    std::vector<ManifestEntry> test;
    for (const auto& e : manifest.split(Split::test)) {
        if (dict.find_class(e.label)) {
            test.push_back(e);
        } else {
            report.warnings.push_back("skipped " + e.path + ": class " + e.label +
                                      " is absent from the training set");
        }
    }
    if (test.empty()) throw InvalidArgument("evaluate: empty test set");

    // Batch mode decomposes the whole test split at once; labels are never used.
    const std::vector<std::size_t> groups(test.size(), 0);
    const FeatureBatch feats = extract_features(manifest, test, groups, cfg);

    std::vector<std::optional<SamplePrediction>> predictions(test.size());
    parallel_for(test.size(), cfg.workers, [&](std::size_t i) {
        if (is_degenerate(feats, i)) return;
        const auto& d = feats.descriptors[i];
        const Vector y = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
        SamplePrediction p{test[i].path, test[i].label, {}, 0.0, false};
        if (options.classifier == Classifier::src) {
            const SparseCode code = src_classify(dict, y, options.lambda);
            p.predicted = code.predicted;
            p.margin = code.margin;
            p.degraded = code.status == SolverStatus::degraded;
        } else {
            const NearestNeighbor nn = nn_classify_detailed(dict, y);
            p.predicted = nn.predicted;
            p.margin = nn.margin;
        }
        predictions[i] = std::move(p);
    });

    const std::size_t c = dict.class_count();
    report.confusion.assign(c, std::vector<long long>(c, 0));
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!predictions[i]) {
            report.warnings.push_back("skipped " + test[i].path + ": zero HOG descriptor (flat image)");
            continue;
        }
        const SamplePrediction& p = *predictions[i];
        const std::size_t t = *dict.find_class(p.truth);
        const std::size_t q = *dict.find_class(p.predicted);
        ++report.confusion[t][q];
        ++report.total;
        if (t == q) ++report.correct;
        if (p.degraded) ++report.degraded_solves;
        report.per_sample.push_back(p);
    }
    if (report.total == 0) throw InvalidArgument("evaluate: every test image was skipped");
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    for (std::size_t k = 0; k < c; ++k) {
        long long row = 0;
        for (long long v : report.confusion[k]) row += v;
        if (row > 0) {
            report.per_class_accuracy[report.class_ids[k]] =
                static_cast<double>(report.confusion[k][k]) / static_cast<double>(row);
        }
    }
    return report;
}

struct SynthSpec {
    std::string glyphs = "0123456789";
    int per_class = 10;  // images per glyph across both splits
    double train_fraction = 0.5;
    NoiseSpec noise;
    JitterRange jitter;
    GlyphStyle style;
    std::uint64_t seed = 0;

    void validate() const {
        if (glyphs.empty()) throw InvalidArgument("synth: no glyphs requested");
        for (char g : glyphs) (void)detail::find_glyph(g);
        std::string sorted = glyphs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidArgument("synth: duplicate glyph in '" + glyphs + "'");
        if (per_class < 2) throw InvalidArgument("synth: per_class must be at least 2");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidArgument("synth: train_fraction must lie in (0, 1)");
        noise.validate();
    }

    int train_count() const {
        const int n = static_cast<int>(std::lround(per_class * train_fraction));
        return std::clamp(n, 1, per_class - 1);
    }
};

inline std::string synth_fingerprint(const SynthSpec& s) {
    std::ostringstream out;
    out << "glyphs=" << s.glyphs << "\nper_class=" << s.per_class
        << "\ntrain_fraction=" << detail::format_real(s.train_fraction)
        << "\nnoise.gaussian_sigma=" << detail::format_real(s.noise.gaussian_sigma)
        << "\nnoise.salt_pepper=" << detail::format_real(s.noise.salt_pepper)
        << "\njitter.scale=" << detail::format_real(s.jitter.scale)
        << "\njitter.rotation_deg=" << detail::format_real(s.jitter.rotation_deg)
        << "\njitter.shift_px=" << detail::format_real(s.jitter.shift_px)
        << "\nstyle.side=" << s.style.side
        << "\nstyle.background=" << detail::format_real(s.style.background)
        << "\nstyle.ink=" << detail::format_real(s.style.ink)
        << "\nstyle.supersample=" << s.style.supersample << "\nseed=" << s.seed << '\n';
    return sha256_hex(out.str());
}

/// Renders one synthetic sample; also reports which pixels salt-and-pepper replaced.
inline GrayImage synth_sample(const SynthSpec& spec, std::size_t class_index, std::size_t sample_index,
                              std::vector<bool>* corrupted = nullptr) {
    auto rng = sample_engine(spec.seed, class_index, sample_index);
    const GlyphJitter jitter = sample_jitter(spec.jitter, rng);
    GrayImage img = render_glyph(spec.glyphs.at(class_index), jitter, spec.style);
    std::vector<bool> mask = apply_noise(img, spec.noise, rng);
    if (corrupted) *corrupted = std::move(mask);
    return img;
}

/// Writes images/<glyph>/<glyph>_<n>.pgm plus manifest.csv under `out_dir`.
inline CorpusManifest synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "images");
    const std::string fp = synth_fingerprint(spec);

    CorpusManifest m;
    m.base_dir = out_dir;
    m.image_side = spec.style.side;
    const int n_train = spec.train_count();
    for (std::size_t c = 0; c < spec.glyphs.size(); ++c) {
        const std::string label(1, spec.glyphs[c]);
        fs::create_directories(out_dir / "images" / label);
        for (int k = 0; k < spec.per_class; ++k) {
            const GrayImage img = synth_sample(spec, c, static_cast<std::size_t>(k));
            char name[64];
            std::snprintf(name, sizeof name, "%s_%03d.pgm", label.c_str(), k);
            const std::string rel = "images/" + label + "/" + name;
            write_pgm(out_dir / rel, img, "charrec synth fingerprint=" + fp);
            m.entries.push_back({rel, label, k < n_train ? Split::train : Split::test});
        }
    }
    write_manifest(out_dir / "manifest.csv", m);
    return m;
}

}  // namespace charrec
