#include "siamq/ppgs_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "siamq/errors.hpp"

namespace siamq {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'G', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_uint(std::istream& is, int n_bytes) {
    unsigned char b[8] = {0};
    is.read(reinterpret_cast<char*>(b), n_bytes);
    if (!is) throw DataError("truncated PPGS header");
    std::uint64_t v = 0;
    for (int i = 0; i < n_bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

std::vector<float> read_f32_block(std::istream& is, std::uint64_t n) {
    std::vector<float> out(n);
    // Host is little-endian; read the raw block and reinterpret.
    is.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(n * 4));
    if (!is) throw DataError("truncated PPGS sample data");
    return out;
}

struct PpgsHeader {
    std::uint32_t sample_rate_hz;
    std::uint64_t n_samples;
};

PpgsHeader read_header(std::istream& is, const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a PPGS file: " + path);
    const auto version = static_cast<std::uint16_t>(get_uint(is, 2));
    if (version != kVersion)
        throw DataError("unsupported PPGS version in " + path);
    PpgsHeader h;
    h.sample_rate_hz = static_cast<std::uint32_t>(get_uint(is, 4));
    h.n_samples = get_uint(is, 8);
    return h;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad numeric field '" + s + "' in " + what);
    }
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw DataError("bad integer field '" + s + "' in " + what);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

void write_ppgs(const std::string& path, const SampleSeries& series) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for write: " + path);
    os.write(kMagic, 4);
    put_u16(os, kVersion);
    put_u32(os, series.sample_rate_hz);
    put_u64(os, series.samples.size());
    for (float v : series.samples) put_f32(os, v);
    if (!os) throw DataError("write failed: " + path);
}

SampleSeries read_ppgs(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    const PpgsHeader h = read_header(is, path);
    SampleSeries out;
    out.sample_rate_hz = h.sample_rate_hz;
    out.samples = read_f32_block(is, h.n_samples);
    return out;
}

std::vector<float> read_ppgs_window(const std::string& path,
                                    std::uint64_t offset_samples,
                                    std::uint64_t n_samples) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    const PpgsHeader h = read_header(is, path);
    if (offset_samples + n_samples > h.n_samples)
        throw DataError("window out of range in " + path);
    is.seekg(static_cast<std::streamoff>(18 + offset_samples * 4));
    return read_f32_block(is, n_samples);
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "segment_id,patient_id,t_start_s,quality_y,file,offset_samples,n_samples\n";
    for (const auto& r : rows) {
        os << r.segment_id << ',' << r.patient_id << ',' << format_double(r.t_start_s)
           << ',' << format_double(r.quality_y) << ',' << r.file << ','
           << r.offset_samples << ',' << r.n_samples << '\n';
    }
    if (!os) throw DataError("write failed: " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty manifest: " + path);
    if (split_csv_line(line) !=
        std::vector<std::string>{"segment_id", "patient_id", "t_start_s",
                                 "quality_y", "file", "offset_samples", "n_samples"})
        throw DataError("bad manifest header in " + path);
    std::vector<ManifestRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 7) throw DataError("bad manifest row in " + path);
        ManifestRow r;
        r.segment_id = f[0];
        r.patient_id = f[1];
        r.t_start_s = parse_double(f[2], path);
        r.quality_y = parse_double(f[3], path);
        r.file = f[4];
        r.offset_samples = parse_u64(f[5], path);
        r.n_samples = parse_u64(f[6], path);
        if (r.quality_y < 0.0 || r.quality_y > 1.0)
            throw DataError("quality_y out of [0,1] for " + r.segment_id);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_labels(const std::string& path,
                  const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "segment_id,target\n";
    for (const auto& [id, target] : rows)
        os << id << ',' << format_double(target) << '\n';
    if (!os) throw DataError("write failed: " + path);
}

std::vector<std::pair<std::string, double>> read_labels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty labels file: " + path);
    if (split_csv_line(line) != std::vector<std::string>{"segment_id", "target"})
        throw DataError("bad labels header in " + path);
    std::vector<std::pair<std::string, double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw DataError("bad labels row in " + path);
        rows.emplace_back(f[0], parse_double(f[1], path));
    }
    return rows;
}

}  // namespace siamq
