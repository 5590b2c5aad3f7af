#pragma once

#include <charrec/error.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace charrec {

enum class Split { train, test };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

struct ManifestEntry {
    std::string path;  // as written in the manifest
    std::string label;
    Split split = Split::train;
};

/// Labeled image list. Relative paths resolve against `base_dir`.
struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;
    int image_side = 32;

    std::filesystem::path resolve(const ManifestEntry& e) const {
        const std::filesystem::path p(e.path);
        return p.is_absolute() ? p : base_dir / p;
    }

    std::vector<ManifestEntry> split(Split s) const {
        std::vector<ManifestEntry> out;
        for (const auto& e : entries)
            if (e.split == s) out.push_back(e);
        return out;
    }
};

namespace detail {

// Comma-separated fields; double quotes protect commas and "" escapes a quote.
inline std::vector<std::string> split_csv_line(const std::string& line, bool& ok) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    ok = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back().push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back().push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back().push_back(ch);
        }
    }
    if (quoted) ok = false;
    return fields;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    return out + "\"";
}

}  // namespace detail

/// Parses a `path,class,split` CSV. Errors name the offending line.
inline CorpusManifest read_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError(file.string() + ": cannot open manifest");
    CorpusManifest m;
    m.base_dir = file.parent_path();
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        bool ok = true;
        auto fields = detail::split_csv_line(line, ok);
        const std::string where = file.string() + ":" + std::to_string(lineno) + ": ";
        if (!header_seen) {
            if (!ok || fields.size() != 3 || fields[0] != "path" || fields[1] != "class" ||
                fields[2] != "split") {
                throw IoError(where + "expected header 'path,class,split'");
            }
            header_seen = true;
            continue;
        }
        if (!ok || fields.size() != 3) throw IoError(where + "malformed row '" + line + "'");
        if (fields[0].empty()) throw IoError(where + "empty path");
        if (fields[1].empty()) throw IoError(where + "empty class");
        ManifestEntry e{fields[0], fields[1], Split::train};
        if (fields[2] == "train") e.split = Split::train;
        else if (fields[2] == "test") e.split = Split::test;
        else throw IoError(where + "split must be train or test, got '" + fields[2] + "'");
        if (!seen.insert(e.path).second) throw IoError(where + "duplicate path '" + e.path + "'");
        m.entries.push_back(std::move(e));
    }
    if (!header_seen) throw IoError(file.string() + ": empty manifest");
    return m;
}

inline void write_manifest(const std::filesystem::path& file, const CorpusManifest& m) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError(file.string() + ": cannot open for writing");
    out << "path,class,split\n";
    for (const auto& e : m.entries) {
        out << detail::csv_field(e.path) << ',' << detail::csv_field(e.label) << ','
            << to_string(e.split) << '\n';
    }
    if (!out) throw IoError(file.string() + ": write failed");
}

}  // namespace charrec
