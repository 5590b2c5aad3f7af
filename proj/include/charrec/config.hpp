#pragma once

#include <charrec/error.hpp>
#include <charrec/hog.hpp>
#include <charrec/image.hpp>
#include <charrec/rpca.hpp>

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace charrec {

enum class RpcaMode {
    per_image,  // each image is decomposed as its own side x side matrix
    batch,      // vectorized images are stacked column-wise and decomposed together
};

/// Everything that determines how an image becomes a feature vector, plus the
/// classifier and execution settings that travel with it.
struct PipelineConfig {
    int image_side = kDefaultImageSide;
    bool denoise = true;
    RpcaMode rpca_mode = RpcaMode::per_image;
    RpcaConfig rpca;
    HogConfig hog;
    double src_lambda = 1e-2;
    int workers = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (image_side < 1) throw InvalidArgument("config: image_side must be positive");
        rpca.validate();
        hog.validate(image_side);
        if (!(src_lambda > 0.0)) throw InvalidArgument("config: src.lambda must be positive");
        if (workers < 1) throw InvalidArgument("config: workers must be at least 1");
    }
};

/// Hex SHA-256 digest.
inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest computation failed");
    }
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
    return out.str();
}

namespace detail {

inline std::string format_real(double v) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return out.str();
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_real(*v) : "auto";
}

}  // namespace detail

inline const char* to_string(RpcaMode m) { return m == RpcaMode::batch ? "batch" : "per_image"; }

/// Canonical "key=value" listing of the RPCA settings.
inline std::string canonical_rpca(const RpcaConfig& c, RpcaMode mode) {
    std::ostringstream out;
    out << "rpca.lambda=" << detail::format_optional(c.lambda) << '\n'
        << "rpca.mu0=" << detail::format_optional(c.mu0) << '\n'
        << "rpca.rho=" << detail::format_real(c.rho) << '\n'
        << "rpca.mu_cap=" << detail::format_real(c.mu_cap) << '\n'
        << "rpca.tol=" << detail::format_real(c.tol) << '\n'
        << "rpca.max_iter=" << c.max_iter << '\n'
        << "rpca.mode=" << to_string(mode) << '\n';
    return out.str();
}

inline std::string canonical_hog(const HogConfig& c) {
    std::ostringstream out;
    out << "hog.cell_size=" << c.cell_size << '\n'
        << "hog.bins=" << c.bins << '\n'
        << "hog.block_size=" << c.block_size << '\n'
        << "hog.block_stride=" << c.block_stride << '\n'
        << "hog.signed=" << (c.signed_orientation ? "true" : "false") << '\n'
        << "hog.norm_epsilon=" << detail::format_real(c.norm_epsilon) << '\n';
    return out.str();
}

inline std::string rpca_fingerprint(const PipelineConfig& c) {
    return sha256_hex(canonical_rpca(c.rpca, c.rpca_mode));
}

inline std::string hog_fingerprint(const PipelineConfig& c) { return sha256_hex(canonical_hog(c.hog)); }

/// Digest of the image -> feature path. RPCA settings only count when denoising is on.
inline std::string preprocessing_fingerprint(const PipelineConfig& c) {
    std::ostringstream out;
    out << "pipeline.image_side=" << c.image_side << '\n'
        << "pipeline.denoise=" << (c.denoise ? "on" : "off") << '\n';
    if (c.denoise) out << canonical_rpca(c.rpca, c.rpca_mode);
    out << canonical_hog(c.hog);
    return sha256_hex(out.str());
}

/// The effective configuration in the same key-value schema the config file uses.
inline std::map<std::string, std::string> effective_config(const PipelineConfig& c) {
    return {
        {"pipeline.image_side", std::to_string(c.image_side)},
        {"pipeline.denoise", c.denoise ? "on" : "off"},
        {"rpca.lambda", detail::format_optional(c.rpca.lambda)},
        {"rpca.mu0", detail::format_optional(c.rpca.mu0)},
        {"rpca.rho", detail::format_real(c.rpca.rho)},
        {"rpca.mu_cap", detail::format_real(c.rpca.mu_cap)},
        {"rpca.tol", detail::format_real(c.rpca.tol)},
        {"rpca.max_iter", std::to_string(c.rpca.max_iter)},
        {"rpca.mode", to_string(c.rpca_mode)},
        {"hog.cell_size", std::to_string(c.hog.cell_size)},
        {"hog.bins", std::to_string(c.hog.bins)},
        {"hog.block_size", std::to_string(c.hog.block_size)},
        {"hog.block_stride", std::to_string(c.hog.block_stride)},
        {"hog.signed", c.hog.signed_orientation ? "true" : "false"},
        {"hog.norm_epsilon", detail::format_real(c.hog.norm_epsilon)},
        {"src.lambda", detail::format_real(c.src_lambda)},
        {"workers", std::to_string(c.workers)},
        {"seed", std::to_string(c.seed)},
    };
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || !std::isfinite(x)) {
        throw InvalidArgument("config: " + key + " expects a number, got '" + v + "'");
    }
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) {
        throw InvalidArgument("config: " + key + " expects an integer, got '" + v + "'");
    }
    return x;
}

inline bool parse_switch(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw InvalidArgument("config: " + key + " expects on/off, got '" + v + "'");
}

inline std::optional<double> parse_optional_real(const std::string& key, const std::string& v) {
    if (v == "auto") return std::nullopt;
    return parse_real(key, v);
}

}  // namespace detail

/// Applies one key-value setting; unknown keys are rejected.
inline void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "pipeline.image_side") c.image_side = static_cast<int>(parse_integer(key, value));
    else if (key == "pipeline.denoise") c.denoise = parse_switch(key, value);
    else if (key == "rpca.lambda") c.rpca.lambda = parse_optional_real(key, value);
    else if (key == "rpca.mu0") c.rpca.mu0 = parse_optional_real(key, value);
    else if (key == "rpca.rho") c.rpca.rho = parse_real(key, value);
    else if (key == "rpca.mu_cap") c.rpca.mu_cap = parse_real(key, value);
    else if (key == "rpca.tol") c.rpca.tol = parse_real(key, value);
    else if (key == "rpca.max_iter") c.rpca.max_iter = static_cast<int>(parse_integer(key, value));
    else if (key == "rpca.mode") {
        if (value == "per_image") c.rpca_mode = RpcaMode::per_image;
        else if (value == "batch") c.rpca_mode = RpcaMode::batch;
        else throw InvalidArgument("config: rpca.mode expects per_image or batch, got '" + value + "'");
    }
    else if (key == "hog.cell_size") c.hog.cell_size = static_cast<int>(parse_integer(key, value));
    else if (key == "hog.bins") c.hog.bins = static_cast<int>(parse_integer(key, value));
    else if (key == "hog.block_size") c.hog.block_size = static_cast<int>(parse_integer(key, value));
    else if (key == "hog.block_stride") c.hog.block_stride = static_cast<int>(parse_integer(key, value));
    else if (key == "hog.signed") c.hog.signed_orientation = parse_switch(key, value);
    else if (key == "hog.norm_epsilon") c.hog.norm_epsilon = parse_real(key, value);
    else if (key == "src.lambda") c.src_lambda = parse_real(key, value);
    else if (key == "workers") c.workers = static_cast<int>(parse_integer(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    else throw InvalidArgument("config: unknown key '" + key + "'");
}

/// Reads "key = value" lines; blank lines and '#' comments are ignored.
inline void load_config_file(PipelineConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open config file");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
        }
        try {
            apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace charrec
