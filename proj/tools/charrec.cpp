// charrec: robust-PCA denoising, HOG features and sparse-representation
// classification of character images from the command line.

#include <charrec/charrec.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace charrec;

namespace {

struct GlobalOptions {
    std::string config_file;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> denoise;  // on|off
    std::optional<double> rpca_lambda;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
    PipelineConfig cfg;
    if (!g.config_file.empty()) load_config_file(cfg, g.config_file);
    if (g.workers) cfg.workers = *g.workers;
    if (g.seed) cfg.seed = *g.seed;
    if (g.denoise) apply_setting(cfg, "pipeline.denoise", *g.denoise);
    if (g.rpca_lambda) cfg.rpca.lambda = *g.rpca_lambda;
    cfg.validate();
    return cfg;
}

bool is_image_path(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

// Min-max scales a matrix into [0, 1] for display.
GrayImage display_panel(const Matrix& m) {
    const double lo = m.minCoeff();
    const double hi = m.maxCoeff();
    const Matrix scaled = hi > lo ? Matrix((m.array() - lo) / (hi - lo)) : Matrix(Matrix::Zero(m.rows(), m.cols()));
    return GrayImage::from_matrix_clamped(scaled);
}

GrayImage side_by_side(const std::vector<GrayImage>& panels) {
    const int rows = panels.front().rows();
    int cols = 0;
    for (const auto& p : panels) cols += p.cols() + 1;
    GrayImage out(rows, cols - 1, 1.0);
    int x0 = 0;
    for (const auto& p : panels) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < p.cols(); ++c) out.set(r, x0 + c, p.at(r, c));
        x0 += p.cols() + 1;
    }
    return out;
}

int run_denoise(const GlobalOptions& g, const std::string& input, const std::string& prefix,
                const std::string& panel) {
    const PipelineConfig cfg = resolve_config(g);
    const fs::path in(input);
    if (!fs::exists(in)) throw IoError(input + ": no such file");

    Matrix observed;
    RpcaResult r;
    if (is_image_path(in)) {
        const GrayImage img = prepare_image(in, cfg.image_side);
        observed = img.to_matrix();
        DenoisedImage d = denoise_image(img, cfg.rpca, cfg.image_side);
        r = std::move(d.decomposition);
    } else {
        observed = read_matrix_file(in);
        r = rpca_decompose(observed, cfg.rpca);
    }

    const std::string fp = rpca_fingerprint(cfg);
    write_matrix_file(prefix + ".clean.txt", r.low_rank);
    write_matrix_file(prefix + ".noise.txt", r.sparse);
    const nlohmann::json meta{
        {"input", input},
        {"rpca_fingerprint", fp},
        {"config", reproducible_config(cfg)},
        {"lambda", cfg.rpca.lambda.value_or(default_lambda(observed.rows(), observed.cols()))},
        {"iterations", r.iterations},
        {"converged", r.converged},
        {"residual", r.residual},
        {"noise_l0", l0_count(r.sparse)},
        {"noise_l0_fraction", static_cast<double>(l0_count(r.sparse)) / static_cast<double>(r.sparse.size())},
    };
    write_text_file(prefix + ".json", meta.dump(1) + "\n");
    if (!panel.empty()) {
        const GrayImage out = side_by_side({display_panel(observed), display_panel(r.low_rank),
                                            display_panel(r.sparse.cwiseAbs())});
        write_pgm(panel, out, "charrec denoise rpca_fingerprint=" + fp);
    }
    std::cerr << "denoise: " << r.iterations << " iterations, "
              << (r.converged ? "converged" : "not converged") << ", residual " << r.residual << "\n";
    return 0;
}

int run_hog(const GlobalOptions& g, const std::string& manifest_path,
            const std::vector<std::string>& inputs, const std::string& out) {
    const PipelineConfig cfg = resolve_config(g);
    CorpusManifest m;
    if (!manifest_path.empty()) {
        m = read_manifest(manifest_path);
    }
    for (const auto& p : inputs) m.entries.push_back({p, "", Split::train});
    if (m.entries.empty()) throw InvalidArgument("hog: no images given");

    const std::vector<std::size_t> groups(m.entries.size(), 0);
    const FeatureBatch feats = extract_features(m, m.entries, groups, cfg);
    std::vector<std::string> paths;
    for (const auto& e : m.entries) paths.push_back(e.path);
    write_text_file(out, descriptors_csv(paths, feats.descriptors, feats.layout,
                                         preprocessing_fingerprint(cfg)));
    std::cerr << "hog: wrote " << paths.size() << " descriptors of length " << feats.layout.length()
              << " to " << out << "\n";
    return 0;
}

int run_train(const GlobalOptions& g, const std::string& manifest_path, const std::string& out) {
    const PipelineConfig cfg = resolve_config(g);
    const CorpusManifest m = read_manifest(manifest_path);
    const TrainedDictionary t = build_dictionary(m, cfg);
    for (const auto& w : t.warnings) std::cerr << "warning: " << w << "\n";
    save_dictionary(out, t);
    std::cerr << "train: " << t.dictionary.atom_count() << " atoms, " << t.dictionary.class_count()
              << " classes, fingerprint " << t.preprocessing_fingerprint << "\n";
    return 0;
}

std::string lambda_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", v);
    return buf;
}

int run_eval(const GlobalOptions& g, const std::string& manifest_path, const std::string& dict_path,
             const std::string& classifier, std::optional<double> lambda, bool sweep,
             const std::string& out_dir) {
    const PipelineConfig cfg = resolve_config(g);
    const CorpusManifest m = read_manifest(manifest_path);
    const TrainedDictionary t = load_dictionary(dict_path);
    fs::create_directories(out_dir);

    EvalOptions opt;
    opt.classifier = classifier == "nn" ? Classifier::nn : Classifier::src;
    std::vector<double> lambdas{lambda.value_or(cfg.src_lambda)};
    if (sweep && opt.classifier == Classifier::src) lambdas = {1e-3, 1e-2, 1e-1};

    for (double l : lambdas) {
        opt.lambda = l;
        const EvalReport r = evaluate(m, t, cfg, opt);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::string stem = "report_" + std::string(to_string(opt.classifier));
        if (opt.classifier == Classifier::src) stem += "_lambda_" + lambda_tag(l);
        const fs::path json_path = fs::path(out_dir) / (stem + ".json");
        const fs::path csv_path = fs::path(out_dir) / (stem + "_confusion.csv");
        write_text_file(json_path, report_to_json(r).dump(1) + "\n");
        write_text_file(csv_path, confusion_csv(r));
        std::cerr << "eval: " << to_string(opt.classifier);
        if (opt.classifier == Classifier::src) std::cerr << " lambda=" << l;
        std::cerr << " accuracy=" << r.accuracy << " (" << r.correct << "/" << r.total << ") -> "
                  << json_path.string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Character recognition with robust PCA denoising, HOG features and sparse coding"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_file, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--workers", g.workers, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Random seed");

    auto* denoise = app.add_subcommand("denoise", "Split a matrix or image into low-rank and sparse parts");
    std::string dn_input, dn_prefix, dn_panel;
    denoise->add_option("input", dn_input, "Matrix text file or PGM/PNG image")->required();
    denoise->add_option("-o,--out-prefix", dn_prefix, "Output prefix")->required();
    denoise->add_option("--panel", dn_panel, "Write an input|clean|noise PGM panel here");
    denoise->add_option("--lambda", g.rpca_lambda, "Sparse-term weight (default 1/sqrt(max(d,n)))")
        ->check(CLI::PositiveNumber);

    auto* hog = app.add_subcommand("hog", "Write HOG descriptors as CSV");
    std::string hog_manifest, hog_out;
    std::vector<std::string> hog_inputs;
    hog->add_option("--manifest", hog_manifest, "Manifest CSV")->check(CLI::ExistingFile);
    hog->add_option("inputs", hog_inputs, "Image files");
    hog->add_option("-o,--out", hog_out, "Output CSV")->required();
    hog->add_option("--denoise", g.denoise, "Denoise before extraction (on|off)")
        ->check(CLI::IsMember({"on", "off"}));

    auto* train = app.add_subcommand("train", "Build a dictionary from the train split");
    std::string tr_manifest, tr_out;
    train->add_option("--manifest", tr_manifest, "Manifest CSV")->required();
    train->add_option("-o,--out", tr_out, "Dictionary output file")->required();
    train->add_option("--denoise", g.denoise, "Robust PCA denoising (on|off)")
        ->check(CLI::IsMember({"on", "off"}));

    auto* eval = app.add_subcommand("eval", "Classify the test split and write reports");
    std::string ev_manifest, ev_dict, ev_classifier = "src", ev_out = ".";
    std::optional<double> ev_lambda;
    bool ev_sweep = false;
    eval->add_option("--manifest", ev_manifest, "Manifest CSV")->required();
    eval->add_option("--dictionary", ev_dict, "Dictionary file from 'train'")->required();
    eval->add_option("--classifier", ev_classifier, "src or nn")->check(CLI::IsMember({"src", "nn"}));
    eval->add_option("--lambda", ev_lambda, "l1 weight for src")->check(CLI::PositiveNumber);
    eval->add_flag("--lambda-sweep", ev_sweep, "Evaluate src at lambda 1e-3, 1e-2 and 1e-1");
    eval->add_option("--out-dir", ev_out, "Directory for report files");
    eval->add_option("--denoise", g.denoise, "Must match the setting used for training (on|off)")
        ->check(CLI::IsMember({"on", "off"}));

    auto* synth = app.add_subcommand("synth", "Generate a synthetic glyph corpus");
    SynthSpec spec;
    std::string sy_out;
    bool no_jitter = false;
    synth->add_option("-o,--out-dir", sy_out, "Corpus directory")->required();
    synth->add_option("--glyphs", spec.glyphs, "Glyphs to render (subset of 0-9A-Z)");
    synth->add_option("--per-class", spec.per_class, "Images per glyph across both splits")
        ->check(CLI::PositiveNumber);
    synth->add_option("--train-fraction", spec.train_fraction, "Share of each class in the train split");
    synth->add_option("--sigma", spec.noise.gaussian_sigma, "Gaussian noise sigma");
    synth->add_option("--salt-pepper", spec.noise.salt_pepper, "Salt-and-pepper fraction");
    synth->add_flag("--no-jitter", no_jitter, "Disable the random affine jitter");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*denoise) return run_denoise(g, dn_input, dn_prefix, dn_panel);
        if (*hog) return run_hog(g, hog_manifest, hog_inputs, hog_out);
        if (*train) return run_train(g, tr_manifest, tr_out);
        if (*eval) return run_eval(g, ev_manifest, ev_dict, ev_classifier, ev_lambda, ev_sweep, ev_out);
        if (*synth) {
            const PipelineConfig cfg = resolve_config(g);
            spec.seed = cfg.seed;
            if (no_jitter) spec.jitter = JitterRange{0.0, 0.0, 0.0};
            const CorpusManifest m = synth_corpus(spec, sy_out);
            std::cerr << "synth: wrote " << m.entries.size() << " images to " << sy_out << "\n";
            return 0;
        }
    } catch (const FingerprintMismatch& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "  dictionary fingerprint: " << e.expected() << "\n"
                  << "  current fingerprint:    " << e.actual() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
