#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace fintwit {

// Unrecoverable pipeline error. The CLI maps this to exit code 1.
class FatalError : public std::runtime_error {
public:
    explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void warn(const std::string& msg) {
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

inline void info(const std::string& msg) {
    std::fprintf(stderr, "info: %s\n", msg.c_str());
}

// FNV-1a over raw bytes; used for scaler fingerprints and token hashing.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
    return fnv1a(s.data(), s.size(), h);
}

// Default directory for bundled lexicons/stopwords. Compile-time path,
// overridable with the FINTWIT_DATA_DIR environment variable.
std::string data_dir();

}  // namespace fintwit
