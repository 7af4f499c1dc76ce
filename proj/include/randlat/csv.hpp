#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>

#include "randlat/configuration.hpp"

namespace randlat {

// Shortest round-trip decimal form of a double; bit-identical output for
// bit-identical values, independent of locale.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// FNV-1a, used to fingerprint output files in run manifests.
class Fnv1a64 {
public:
    void update(const char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= static_cast<unsigned char>(data[i]);
            h_ *= 0x100000001b3ULL;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// Comma-separated writer with LF line endings and a mandatory header row.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    template <class... Ts>
    void header(const Ts&... names) {
        row(names...);
    }
    template <class... Ts>
    void row(const Ts&... fields) {
        std::string line;
        bool first = true;
        (append_field(line, fields, first), ...);
        line.push_back('\n');
        os_ << line;
        hash_.update(line);
        bytes_ += line.size();
    }

    std::uint64_t checksum() const { return hash_.digest(); }
    std::uint64_t bytes_written() const { return bytes_; }

private:
    static void append_field(std::string& line, const std::string& s, bool& first) {
        if (!first) line.push_back(',');
        first = false;
        line += s;
    }
    static void append_field(std::string& line, const char* s, bool& first) {
        append_field(line, std::string(s), first);
    }
    static void append_field(std::string& line, double v, bool& first) {
        append_field(line, format_double(v), first);
    }
    static void append_field(std::string& line, std::int64_t v, bool& first) {
        append_field(line, std::to_string(v), first);
    }
    static void append_field(std::string& line, std::uint64_t v, bool& first) {
        append_field(line, std::to_string(v), first);
    }
    static void append_field(std::string& line, int v, bool& first) {
        append_field(line, std::to_string(v), first);
    }

    std::ostream& os_;
    Fnv1a64 hash_;
    std::uint64_t bytes_ = 0;
};

// Nuclei export: cartesian position, charge, and the source lattice site.
inline void export_nuclei_csv_writer(const NuclearConfiguration& cfg, CsvWriter& w) {
    w.header("x", "y", "z", "charge", "site_i", "site_j", "site_k");
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        Vec3 p = cfg.position(i);
        const Nucleus& n = cfg.nuclei[i];
        w.row(p.x, p.y, p.z, n.charge, n.site.x, n.site.y, n.site.z);
    }
}

inline void export_nuclei_csv(const NuclearConfiguration& cfg, std::ostream& os) {
    CsvWriter w(os);
    export_nuclei_csv_writer(cfg, w);
}

}  // namespace randlat
