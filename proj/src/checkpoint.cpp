#include "siamq/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "siamq/errors.hpp"

namespace siamq {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

void put_le(std::ostream& os, std::uint64_t v, int n_bytes) {
    unsigned char b[8];
    for (int i = 0; i < n_bytes; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), n_bytes);
}

std::uint64_t get_le(std::istream& is, int n_bytes) {
    unsigned char b[8] = {0};
    is.read(reinterpret_cast<char*>(b), n_bytes);
    if (!is) throw DataError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < n_bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::string head_name(HeadKind k) {
    switch (k) {
        case HeadKind::None: return "none";
        case HeadKind::Regression: return "regression";
        case HeadKind::BinaryClassification: return "binary_classification";
    }
    throw DataError("bad head kind");
}

HeadKind head_from_name(const std::string& s) {
    if (s == "none") return HeadKind::None;
    if (s == "regression") return HeadKind::Regression;
    if (s == "binary_classification") return HeadKind::BinaryClassification;
    throw DataError("bad head kind in checkpoint: " + s);
}

std::string encode_config(const EncoderConfig& c) {
    std::ostringstream os;
    os << "n_blocks=" << c.n_blocks << '\n'
       << "base_channels=" << c.base_channels << '\n'
       << "embedding_dim=" << c.embedding_dim << '\n'
       << "input_length=" << c.input_length << '\n'
       << "z_dim=" << c.z_dim << '\n'
       << "head=" << head_name(c.head) << '\n';
    return os.str();
}

EncoderConfig decode_config(const std::string& blob) {
    EncoderConfig c;
    std::istringstream is(blob);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("bad checkpoint config line");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "n_blocks") c.n_blocks = std::stoull(value);
        else if (key == "base_channels") c.base_channels = std::stoull(value);
        else if (key == "embedding_dim") c.embedding_dim = std::stoull(value);
        else if (key == "input_length") c.input_length = std::stoull(value);
        else if (key == "z_dim") c.z_dim = std::stoull(value);
        else if (key == "head") c.head = head_from_name(value);
        else throw DataError("unknown checkpoint config key: " + key);
    }
    return c;
}

bool config_equal(const EncoderConfig& a, const EncoderConfig& b) {
    return a.n_blocks == b.n_blocks && a.base_channels == b.base_channels &&
           a.embedding_dim == b.embedding_dim && a.input_length == b.input_length &&
           a.z_dim == b.z_dim && a.head == b.head;
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for write: " + path);
    os.write(kMagic, 4);
    put_le(os, kVersion, 2);
    const std::string cfg = encode_config(bundle.config);
    put_le(os, cfg.size(), 4);
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_le(os, bundle.tensors.size(), 4);
    for (std::size_t i = 0; i < bundle.tensors.size(); ++i) {
        const auto& name = bundle.names[i];
        const auto& t = bundle.tensors[i];
        put_le(os, name.size(), 2);
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le(os, t.shape.size(), 1);
        for (std::size_t d : t.shape) put_le(os, d, 4);
        for (float v : t.data) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_le(os, bits, 4);
        }
    }
    if (!os) throw DataError("write failed: " + path);
}

ModelBundle load_checkpoint(const std::string& path,
                            const std::optional<EncoderConfig>& expected) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("incompatible checkpoint: bad magic in " + path);
    if (get_le(is, 2) != kVersion)
        throw DataError("incompatible checkpoint: unsupported version in " + path);

    const auto cfg_len = get_le(is, 4);
    std::string cfg_blob(cfg_len, '\0');
    is.read(cfg_blob.data(), static_cast<std::streamsize>(cfg_len));
    if (!is) throw DataError("truncated checkpoint");

    ModelBundle bundle;
    bundle.config = decode_config(cfg_blob);
    if (expected && !config_equal(bundle.config, *expected))
        throw DataError("incompatible checkpoint: config mismatch in " + path);

    const auto n_tensors = get_le(is, 4);
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        const auto name_len = get_le(is, 2);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!is) throw DataError("truncated checkpoint");
        const auto ndim = get_le(is, 1);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = static_cast<std::size_t>(get_le(is, 4));
        ad::TensorF t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * 4));
        if (!is) throw DataError("truncated checkpoint");
        bundle.names.push_back(std::move(name));
        bundle.tensors.push_back(std::move(t));
    }

    // Structural sanity: the stored tensors must match a fresh allocation for
    // this config, name for name and shape for shape.
    const ModelBundle ref = init_model<float>(bundle.config, 0);
    if (ref.names != bundle.names)
        throw DataError("incompatible checkpoint: parameter set mismatch in " + path);
    for (std::size_t i = 0; i < ref.tensors.size(); ++i)
        if (ref.tensors[i].shape != bundle.tensors[i].shape)
            throw DataError("incompatible checkpoint: tensor shape mismatch in " + path);
    return bundle;
}

}  // namespace siamq
