#pragma once

#include <charrec/error.hpp>
#include <charrec/hog.hpp>
#include <charrec/manifest.hpp>
#include <charrec/pipeline.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace charrec {

inline constexpr const char* kDictionaryFormat = "charrec-dictionary";
inline constexpr int kDictionaryVersion = 1;

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw IoError(path.string() + ": write failed");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline nlohmann::json dictionary_to_json(const TrainedDictionary& t) {
    const Dictionary& d = t.dictionary;
    nlohmann::json atoms = nlohmann::json::array();
    for (Eigen::Index j = 0; j < d.atom_count(); ++j) {
        atoms.push_back(std::vector<double>(d.atoms().col(j).data(),
                                            d.atoms().col(j).data() + d.feature_dim()));
    }
    return {
        {"format", kDictionaryFormat},
        {"version", kDictionaryVersion},
        {"preprocessing_fingerprint", t.preprocessing_fingerprint},
        {"hog_fingerprint", t.hog_fingerprint},
        {"rpca_fingerprint", t.rpca_fingerprint},
        {"config", t.config},
        {"feature_dim", d.feature_dim()},
        {"class_ids", d.class_ids()},
        {"labels", d.labels()},
        {"sources", t.sources},
        {"warnings", t.warnings},
        {"atoms", std::move(atoms)},
    };
}

inline TrainedDictionary dictionary_from_json(const nlohmann::json& j, const std::string& source) {
    try {
        if (j.at("format").get<std::string>() != kDictionaryFormat ||
            j.at("version").get<int>() != kDictionaryVersion) {
            throw IoError(source + ": not a version " + std::to_string(kDictionaryVersion) +
                          " dictionary file");
        }
        const auto dim = j.at("feature_dim").get<Eigen::Index>();
        const auto& cols = j.at("atoms");
        const auto labels = j.at("labels").get<std::vector<std::string>>();
        if (!cols.is_array() || cols.size() != labels.size() || dim <= 0) {
            throw IoError(source + ": atoms and labels disagree");
        }
        Matrix atoms(dim, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto v = cols[c].get<std::vector<double>>();
            if (static_cast<Eigen::Index>(v.size()) != dim) {
                throw IoError(source + ": atom " + std::to_string(c) + " has wrong length");
            }
            for (Eigen::Index r = 0; r < dim; ++r)
                atoms(r, static_cast<Eigen::Index>(c)) = v[static_cast<std::size_t>(r)];
        }
        TrainedDictionary t;
        t.dictionary = Dictionary(std::move(atoms), labels);
        t.preprocessing_fingerprint = j.at("preprocessing_fingerprint").get<std::string>();
        t.hog_fingerprint = j.at("hog_fingerprint").get<std::string>();
        t.rpca_fingerprint = j.at("rpca_fingerprint").get<std::string>();
        t.config = j.at("config").get<std::map<std::string, std::string>>();
        t.sources = j.at("sources").get<std::vector<std::string>>();
        t.warnings = j.at("warnings").get<std::vector<std::string>>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(source + ": malformed dictionary (" + e.what() + ")");
    } catch (const InvalidArgument& e) {
        throw IoError(source + ": invalid dictionary (" + e.what() + ")");
    }
}

inline void save_dictionary(const std::filesystem::path& path, const TrainedDictionary& t) {
    write_text_file(path, dictionary_to_json(t).dump(1) + "\n");
}

inline TrainedDictionary load_dictionary(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": malformed dictionary (" + e.what() + ")");
    }
    return dictionary_from_json(j, path.string());
}

inline nlohmann::json report_to_json(const EvalReport& r, bool include_samples = true) {
    nlohmann::json j{
        {"classifier", r.classifier},
        {"lambda", r.lambda},
        {"accuracy", r.accuracy},
        {"total", r.total},
        {"correct", r.correct},
        {"class_ids", r.class_ids},
        {"per_class_accuracy", r.per_class_accuracy},
        {"confusion", r.confusion},
        {"config_fingerprint", r.config_fingerprint},
        {"dictionary_fingerprint", r.dictionary_fingerprint},
        {"degraded_solves", r.degraded_solves},
        {"warnings", r.warnings},
    };
    if (include_samples) {
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& s : r.per_sample) {
            samples.push_back({{"path", s.path},
                               {"truth", s.truth},
                               {"predicted", s.predicted},
                               {"margin", s.margin},
                               {"degraded", s.degraded}});
        }
        j["per_sample"] = std::move(samples);
    }
    return j;
}

inline std::string confusion_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "# config_fingerprint=" << r.config_fingerprint << '\n';
    out << "truth\\predicted";
    for (const auto& c : r.class_ids) out << ',' << detail::csv_field(c);
    out << '\n';
    for (std::size_t i = 0; i < r.class_ids.size(); ++i) {
        out << detail::csv_field(r.class_ids[i]);
        for (long long v : r.confusion[i]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

/// Descriptor CSV: a '#' metadata line with the layout and fingerprint, a header
/// naming each entry as b<block_y>_<block_x>_c<cell>_o<bin>, then one row per image.
inline std::string descriptors_csv(const std::vector<std::string>& paths,
                                   const std::vector<std::vector<double>>& rows,
                                   const HogLayout& layout, const std::string& fingerprint) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "# fingerprint=" << fingerprint << " blocks_y=" << layout.blocks_y
        << " blocks_x=" << layout.blocks_x << " cells_per_block=" << layout.cells_per_block
        << " bins=" << layout.bins << '\n';
    out << "path";
    for (int by = 0; by < layout.blocks_y; ++by)
        for (int bx = 0; bx < layout.blocks_x; ++bx)
            for (int c = 0; c < layout.cells_per_block; ++c)
                for (int b = 0; b < layout.bins; ++b)
                    out << ",b" << by << '_' << bx << "_c" << c << "_o" << b;
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << detail::csv_field(paths.at(i));
        for (double v : rows[i]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

}  // namespace charrec
