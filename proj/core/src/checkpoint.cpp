#include "polyhuman/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace polyhuman {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Out {
public:
    template <typename T>
    void pod(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void text(const std::string& s) {
        pod(static_cast<std::uint64_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void blobs(const std::vector<Blob>& list) {
        pod(static_cast<std::uint32_t>(list.size()));
        for (const auto& b : list) {
            text(b.name);
            pod(static_cast<std::uint8_t>(b.wide ? 8 : 4));
            pod(static_cast<std::uint32_t>(b.shape.size()));
            std::size_t n = 1;
            for (auto d : b.shape) {
                pod(static_cast<std::uint64_t>(d));
                n *= d;
            }
            if (n != b.values.size()) throw CheckpointError("blob " + b.name + " holds the wrong number of values");
            for (double v : b.values) {
                if (b.wide) pod(v);
                else pod(static_cast<float>(v));
            }
        }
    }
    std::vector<std::uint8_t> bytes;
};

class In {
public:
    In(const std::vector<std::uint8_t>& b, std::size_t end, std::string source)
        : bytes_(b), end_(end), source_(std::move(source)) {}

    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string text() {
        const auto n = pod<std::uint64_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::vector<Blob> blobs() {
        const auto count = pod<std::uint32_t>();
        std::vector<Blob> out;
        for (std::uint32_t i = 0; i < count; ++i) {
            Blob b;
            b.name = text();
            const auto width = pod<std::uint8_t>();
            if (width != 4 && width != 8) throw CheckpointError(source_ + ": corrupt blob " + b.name);
            b.wide = width == 8;
            const auto rank = pod<std::uint32_t>();
            std::uint64_t n = 1;
            for (std::uint32_t r = 0; r < rank; ++r) {
                const auto d = pod<std::uint64_t>();
                b.shape.push_back(static_cast<std::size_t>(d));
                n *= d;
            }
            need(n * width);
            b.values.resize(n);
            for (auto& v : b.values) v = b.wide ? pod<double>() : static_cast<double>(pod<float>());
            out.push_back(std::move(b));
        }
        return out;
    }
    bool done() const { return pos_ == end_; }

private:
    void need(std::uint64_t n) const {
        if (n > end_ - pos_) throw CheckpointError(source_ + ": corrupt checkpoint (truncated)");
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
    std::size_t end_;
    std::string source_;
};

std::uint32_t crc(const std::uint8_t* data, std::size_t n) {
    uLong c = crc32(0L, Z_NULL, 0);
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = crc32(c, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    Out out;
    out.bytes.insert(out.bytes.end(), std::begin(kMagic), std::end(kMagic));
    out.pod(ckpt.version);
    out.pod(ckpt.iteration);
    out.text(ckpt.config);
    out.text(ckpt.subjects);
    out.blobs(ckpt.parameters);
    out.blobs(ckpt.optimizer);
    out.pod(crc(out.bytes.data(), out.bytes.size()));
    return std::move(out.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw CheckpointError(source + ": not a checkpoint file");
    }
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != kCheckpointVersion) {
        throw CheckpointError(source + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body, 4);
    if (stored != crc(bytes.data(), body)) throw CheckpointError(source + ": corrupt checkpoint (CRC mismatch)");

    In in(bytes, body, source);
    in.pod<std::uint32_t>();
    Checkpoint c;
    c.version = in.pod<std::uint32_t>();
    c.iteration = in.pod<std::uint64_t>();
    c.config = in.text();
    c.subjects = in.text();
    c.parameters = in.blobs();
    c.optimizer = in.blobs();
    if (!in.done()) throw CheckpointError(source + ": corrupt checkpoint (trailing bytes)");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(ckpt);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw CheckpointError("cannot write " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw CheckpointError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    return decode_checkpoint(bytes, path.string());
}

} // namespace polyhuman
