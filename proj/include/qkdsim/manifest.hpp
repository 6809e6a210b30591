#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qkdsim/config_io.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/version.hpp"

namespace qkdsim {

namespace detail {

// FIPS 180-4 SHA-256, single-shot over a byte string.
class sha256 {
  public:
    static std::string hex_digest(const std::string& data) {
        sha256 h;
        h.update(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
        auto d = h.finish();
        static const char* hexc = "0123456789abcdef";
        std::string out;
        out.reserve(64);
        for (std::uint8_t b : d) {
            out.push_back(hexc[b >> 4]);
            out.push_back(hexc[b & 0xf]);
        }
        return out;
    }

  private:
    std::array<std::uint32_t, 8> state_{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                        0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::uint64_t length_ = 0;
    std::array<std::uint8_t, 64> buf_{};
    std::size_t fill_ = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void compress(const std::uint8_t* p) {
        static constexpr std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, h] = state_;
        for (int i = 0; i < 64; ++i) {
            std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = h + S1 + ch + K[i] + w[i];
            std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = S0 + maj;
            h = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        state_[0] += a; state_[1] += b; state_[2] += c; state_[3] += d;
        state_[4] += e; state_[5] += f; state_[6] += g; state_[7] += h;
    }

    void update(const std::uint8_t* p, std::size_t n) {
        length_ += n;
        while (n > 0) {
            std::size_t take = std::min(n, buf_.size() - fill_);
            std::memcpy(buf_.data() + fill_, p, take);
            fill_ += take;
            p += take;
            n -= take;
            if (fill_ == buf_.size()) {
                compress(buf_.data());
                fill_ = 0;
            }
        }
    }

    std::array<std::uint8_t, 32> finish() {
        std::uint64_t bits = length_ * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        std::uint8_t zero = 0;
        while (fill_ != 56) update(&zero, 1);
        std::uint8_t len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(len, 8);
        std::array<std::uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 4; ++j)
                out[4 * i + j] = static_cast<std::uint8_t>(state_[i] >> (24 - 8 * j));
        return out;
    }
};

} // namespace detail

inline std::string sha256_hex(const std::string& data) {
    return detail::sha256::hex_digest(data);
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error({"cannot open file '" + path + "'"});
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const std::string& path) {
    return sha256_hex(read_file_bytes(path));
}

// Everything needed to reproduce one tool invocation byte-for-byte: the
// resolved configuration, the subcommand with its parameters, and digests of
// the files the run wrote. Deliberately carries no timestamps or host
// details, so a rerun regenerates an identical manifest.
struct run_manifest {
    std::string command;
    std::map<std::string, std::string> config;     // dotted-key snapshot
    std::map<std::string, std::string> params;     // subcommand parameters
    std::map<std::string, std::string> outputs;    // file name -> sha256
    std::string tool = "qkdsim";
    std::string version = version_string;
};

// nlohmann json objects keep keys in sorted order, so dumps are
// deterministic for a given manifest.
inline std::string manifest_to_json(const run_manifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["outputs"] = m.outputs;
    j["params"] = m.params;
    j["tool"] = m.tool;
    j["version"] = m.version;
    return j.dump(2) + "\n";
}

inline run_manifest manifest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error({std::string("manifest: not valid JSON: ") + e.what()});
    }
    run_manifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.params = j.at("params").get<std::map<std::string, std::string>>();
        m.tool = j.at("tool").get<std::string>();
        m.version = j.at("version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error({std::string("manifest: missing or mistyped field: ") + e.what()});
    }
    return m;
}

inline run_manifest load_manifest(const std::string& path) {
    return manifest_from_json(read_file_bytes(path));
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw validation_error({"cannot write file '" + path + "'"});
    f << content;
    if (!f) throw validation_error({"write failed for '" + path + "'"});
}

} // namespace qkdsim
