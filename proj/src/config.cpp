#include "voxid/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace voxid {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

EngineConfig parse_engine_config(std::string_view text) {
    EngineConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        if (!kv.emplace(key, value).second)
            throw std::invalid_argument("config: duplicate key " + key);
    }

    auto take = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::string();
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto as_double = [](const std::string& key, const std::string& v) {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument("config: bad number for " + key + ": " + v);
        return d;
    };
    auto set_double = [&](const std::string& key, double& out) {
        const std::string v = take(key);
        if (!v.empty()) out = as_double(key, v);
    };
    auto set_int = [&](const std::string& key, auto& out) {
        const std::string v = take(key);
        if (v.empty()) return;
        const double d = as_double(key, v);
        if (d < 0 || d != std::floor(d))
            throw std::invalid_argument("config: " + key + " must be a non-negative integer");
        out = static_cast<std::remove_reference_t<decltype(out)>>(d);
    };

    set_double("frame_len_ms", cfg.mfcc.frame_len_ms);
    set_double("hop_ms", cfg.mfcc.hop_ms);
    set_double("preemphasis", cfg.mfcc.preemphasis);
    set_int("n_fft", cfg.mfcc.n_fft);
    set_int("n_mels", cfg.mfcc.n_mels);
    set_double("fmin", cfg.mfcc.fmin);
    set_double("fmax", cfg.mfcc.fmax);
    set_int("n_coeffs", cfg.mfcc.n_coeffs);
    set_int("vq_k", cfg.vq_k);
    set_int("gmm_m", cfg.gmm_m);
    set_int("em_max_iter", cfg.em_max_iter);
    set_double("em_tol", cfg.em_tol);
    set_int("seed", cfg.seed);
    set_int("sample_rate", cfg.sample_rate);

    if (!kv.empty())
        throw std::invalid_argument("config: unknown key " + kv.begin()->first);
    return cfg;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_engine_config(buf.str());
}

std::string engine_config_to_string(const EngineConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "frame_len_ms = " << cfg.mfcc.frame_len_ms << "\n"
        << "hop_ms = " << cfg.mfcc.hop_ms << "\n"
        << "preemphasis = " << cfg.mfcc.preemphasis << "\n"
        << "n_fft = " << cfg.mfcc.n_fft << "\n"
        << "n_mels = " << cfg.mfcc.n_mels << "\n"
        << "fmin = " << cfg.mfcc.fmin << "\n"
        << "fmax = " << cfg.mfcc.fmax << "\n"
        << "n_coeffs = " << cfg.mfcc.n_coeffs << "\n"
        << "vq_k = " << cfg.vq_k << "\n"
        << "gmm_m = " << cfg.gmm_m << "\n"
        << "em_max_iter = " << cfg.em_max_iter << "\n"
        << "em_tol = " << cfg.em_tol << "\n"
        << "seed = " << cfg.seed << "\n"
        << "sample_rate = " << cfg.sample_rate << "\n";
    return out.str();
}

void save_engine_config(const EngineConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write config file: " + path.string());
    out << engine_config_to_string(cfg);
}

}  // namespace voxid
