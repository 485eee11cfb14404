#include "facefuse/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "facefuse/error.hpp"

namespace facefuse {
namespace {

constexpr char kMagic[4] = {'F', 'F', 'C', 'K'};

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    template <class UInt>
    void uint(UInt value) {
        for (std::size_t i = 0; i < sizeof(UInt); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
    void text(const std::string& s) {
        uint(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    template <class Real>
    void tensor(const Tensor<Real>& t) {
        uint(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t extent : t.shape()) uint(static_cast<std::uint32_t>(extent));
        using Bits = std::conditional_t<sizeof(Real) == 4, std::uint32_t, std::uint64_t>;
        for (Real v : t.data()) uint(std::bit_cast<Bits>(v));
    }
    std::vector<std::uint8_t>& data() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    void need(std::size_t n, const char* what) const {
        if (size_ - pos_ < n) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
    template <class UInt>
    UInt uint(const char* what) {
        need(sizeof(UInt), what);
        UInt value = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(UInt);
        return value;
    }
    std::string text(const char* what) {
        const auto n = uint<std::uint32_t>(what);
        need(n, what);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    template <class Real>
    Tensor<Real> tensor(const char* what) {
        const auto rank = uint<std::uint32_t>(what);
        if (rank == 0 || rank > 4) throw CheckpointError(std::string("checkpoint: bad tensor rank for ") + what);
        Shape shape;
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const auto extent = uint<std::uint32_t>(what);
            if (extent == 0) throw CheckpointError(std::string("checkpoint: zero extent in ") + what);
            shape.push_back(extent);
            count *= extent;
            if (count > (size_ - pos_)) throw CheckpointError(std::string("checkpoint truncated in ") + what);
        }
        need(count * sizeof(Real), what);
        using Bits = std::conditional_t<sizeof(Real) == 4, std::uint32_t, std::uint64_t>;
        std::vector<Real> values(count);
        for (Real& v : values) v = std::bit_cast<Real>(uint<Bits>(what));
        return Tensor<Real>(std::move(shape), std::move(values));
    }
    std::size_t position() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
    return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

// Validates magic, version and checksum; returns a reader over the body.
Reader open_body(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12) throw CheckpointError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("not a checkpoint (bad magic)");
    Reader reader(bytes.data(), bytes.size() - 4);
    reader.uint<std::uint32_t>("magic");
    const auto version = reader.uint<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    Reader trailer(bytes.data() + bytes.size() - 4, 4);
    if (trailer.uint<std::uint32_t>("crc") != crc32_of(bytes.data(), bytes.size() - 4)) {
        throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated file)");
    }
    return reader;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

template <class Real>
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint<Real>& checkpoint) {
    Writer w;
    w.bytes(kMagic, 4);
    w.uint(kCheckpointVersion);
    w.text(checkpoint.network.spec().to_text());
    w.uint(static_cast<std::uint8_t>(sizeof(Real)));
    w.uint(static_cast<std::uint64_t>(checkpoint.iteration));
    w.text(checkpoint.rng_state);
    w.text(checkpoint.config_echo);
    const auto& params = checkpoint.network.params();
    w.uint(static_cast<std::uint32_t>(params.size()));
    for (const LayerParams<Real>& p : params) {
        w.uint(static_cast<std::uint8_t>(p.kind == LayerKind::conv ? 0 : 1));
        w.tensor(p.weights);
        w.tensor(p.bias);
    }
    w.uint(crc32_of(w.data().data(), w.data().size()));
    return std::move(w.data());
}

template <class Real>
Checkpoint<Real> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r = open_body(bytes);
    const std::string spec_text = r.text("spec");
    const auto element_size = r.uint<std::uint8_t>("precision");
    if (element_size != sizeof(Real)) {
        throw CheckpointError("checkpoint stores " + std::to_string(element_size * 8) + "-bit parameters, expected " +
                              std::to_string(sizeof(Real) * 8));
    }
    Checkpoint<Real> checkpoint;
    checkpoint.iteration = r.uint<std::uint64_t>("iteration");
    checkpoint.rng_state = r.text("rng state");
    checkpoint.config_echo = r.text("config");
    const auto layers = r.uint<std::uint32_t>("layer count");
    std::vector<LayerParams<Real>> params;
    for (std::uint32_t i = 0; i < layers; ++i) {
        const auto kind = r.uint<std::uint8_t>("layer kind");
        if (kind > 1) throw CheckpointError("checkpoint: unknown layer kind " + std::to_string(kind));
        LayerParams<Real> p;
        p.kind = kind == 0 ? LayerKind::conv : LayerKind::fully_connected;
        p.weights = r.tensor<Real>("weights");
        p.bias = r.tensor<Real>("bias");
        params.push_back(std::move(p));
    }
    if (r.position() != bytes.size() - 4) throw CheckpointError("checkpoint has trailing bytes");
    try {
        checkpoint.network = Network<Real>(NetworkSpec::from_text(spec_text), std::move(params));
    } catch (const Error& e) {
        throw CheckpointError(std::string("checkpoint spec/parameter disagreement: ") + e.what());
    }
    return checkpoint;
}

template <class Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
    try {
        return deserialize_checkpoint<Real>(read_file(path));
    } catch (const CheckpointError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

Precision checkpoint_precision(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    Reader r = open_body(bytes);
    r.text("spec");
    const auto element_size = r.uint<std::uint8_t>("precision");
    if (element_size == 4) return Precision::f32;
    if (element_size == 8) return Precision::f64;
    throw CheckpointError(path.string() + ": unknown element size " + std::to_string(element_size));
}

template std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint<float>&);
template std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint<double>&);
template Checkpoint<float> deserialize_checkpoint(const std::vector<std::uint8_t>&);
template Checkpoint<double> deserialize_checkpoint(const std::vector<std::uint8_t>&);
template void save_checkpoint(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace facefuse
