#include "adk/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace adk {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw UsageError("tensor dimension must be nonnegative");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size())) {
        throw UsageError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::full(std::vector<int> shape, float v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

bool Tensor::all_finite() const { return first_non_finite() < 0; }

std::int64_t Tensor::first_non_finite() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) return static_cast<std::int64_t>(i);
    }
    return -1;
}

Eigen::Map<RowMatrixXf> Tensor::mat() {
    if (rank() != 2) throw UsageError("mat() requires a rank-2 tensor");
    return {data_.data(), shape_[0], shape_[1]};
}

Eigen::Map<const RowMatrixXf> Tensor::mat() const {
    if (rank() != 2) throw UsageError("mat() requires a rank-2 tensor");
    return {data_.data(), shape_[0], shape_[1]};
}

Eigen::Map<Eigen::VectorXf> Tensor::vec() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<const Eigen::VectorXf> Tensor::vec() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

std::uint64_t bytes_checksum(const Tensor& t, std::uint64_t seed) {
    std::uint64_t h = seed;
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t n = t.storage().size() * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// container IO
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'D', 'K', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, std::int64_t& offset) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw FormatError("truncated u32 field", offset);
    offset += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tensor_container(const std::string& path, const std::vector<Tensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    for (const Tensor& t : tensors) {
        os.write(kMagic, 4);
        put_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * 4));
    }
    if (!os) throw FormatError("write failed: " + path);
}

std::vector<Tensor> load_tensor_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    std::vector<Tensor> out;
    std::int64_t offset = 0;
    while (true) {
        char magic[4];
        is.read(magic, 4);
        if (is.gcount() == 0) break;  // clean end of file
        if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
            throw FormatError("bad magic bytes, expected ADK1", offset);
        }
        offset += 4;
        const std::uint32_t rank = get_u32(is, offset);
        if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), offset - 4);
        std::vector<int> shape(rank);
        std::int64_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape[i] = static_cast<int>(get_u32(is, offset));
            numel *= shape[i];
        }
        std::vector<float> data(static_cast<std::size_t>(numel));
        is.read(reinterpret_cast<char*>(data.data()), numel * 4);
        if (is.gcount() != numel * 4) throw FormatError("truncated tensor payload", offset);
        offset += numel * 4;
        out.emplace_back(std::move(shape), std::move(data));
    }
    return out;
}

}  // namespace adk
