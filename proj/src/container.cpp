#include "logsem/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "logsem/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container io assumes a little-endian host");

namespace logsem {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'E', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("container: truncated file");
    return v;
}

size_t checked_numel(const std::vector<uint64_t>& dims) {
    if (dims.empty()) throw FormatError("container: rank-0 tensor");
    size_t n = 1;
    for (uint64_t d : dims) {
        if (d == 0 || d > (1ULL << 40))
            throw FormatError("container: implausible dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}

}  // namespace

Tensor make_f32_tensor(std::string name, std::vector<uint64_t> dims,
                       std::vector<float> data) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = DType::F32;
    t.dims = std::move(dims);
    t.f32 = std::move(data);
    if (t.f32.size() != checked_numel(t.dims))
        throw ContractError("tensor '" + t.name + "': data size does not match dims");
    return t;
}

Tensor make_i8_tensor(std::string name, std::vector<uint64_t> dims,
                      std::vector<int8_t> data) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = DType::I8;
    t.dims = std::move(dims);
    t.i8 = std::move(data);
    if (t.i8.size() != checked_numel(t.dims))
        throw ContractError("tensor '" + t.name + "': data size does not match dims");
    return t;
}

void write_container(const std::string& path, const std::vector<Tensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("container: cannot open for write: " + path);
    os.write(kMagic, 4);
    put<uint32_t>(os, kVersion);
    put<uint64_t>(os, tensors.size());
    for (const Tensor& t : tensors) {
        put<uint32_t>(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<uint8_t>(os, static_cast<uint8_t>(t.dtype));
        put<uint8_t>(os, static_cast<uint8_t>(t.dims.size()));
        for (uint64_t d : t.dims) put<uint64_t>(os, d);
        size_t n = checked_numel(t.dims);
        if (t.dtype == DType::F32) {
            if (t.f32.size() != n)
                throw ContractError("tensor '" + t.name + "': bad payload size");
            os.write(reinterpret_cast<const char*>(t.f32.data()),
                     static_cast<std::streamsize>(n * sizeof(float)));
        } else {
            if (t.i8.size() != n)
                throw ContractError("tensor '" + t.name + "': bad payload size");
            os.write(reinterpret_cast<const char*>(t.i8.data()),
                     static_cast<std::streamsize>(n));
        }
    }
    if (!os) throw FormatError("container: write failed: " + path);
}

std::vector<Tensor> read_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingArtifactError("container: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("container: bad magic in " + path);
    uint32_t version = get<uint32_t>(is);
    if (version != kVersion)
        throw FormatError("container: unsupported version in " + path);
    uint64_t count = get<uint64_t>(is);
    if (count > (1ULL << 24)) throw FormatError("container: implausible tensor count");
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(count));
    for (uint64_t i = 0; i < count; ++i) {
        Tensor t;
        uint32_t name_len = get<uint32_t>(is);
        if (name_len > (1u << 16)) throw FormatError("container: implausible name length");
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        uint8_t dtype = get<uint8_t>(is);
        if (dtype > 1) throw FormatError("container: unknown dtype");
        t.dtype = static_cast<DType>(dtype);
        uint8_t rank = get<uint8_t>(is);
        t.dims.resize(rank);
        for (uint8_t r = 0; r < rank; ++r) t.dims[r] = get<uint64_t>(is);
        size_t n = checked_numel(t.dims);
        if (t.dtype == DType::F32) {
            t.f32.resize(n);
            is.read(reinterpret_cast<char*>(t.f32.data()),
                    static_cast<std::streamsize>(n * sizeof(float)));
        } else {
            t.i8.resize(n);
            is.read(reinterpret_cast<char*>(t.i8.data()),
                    static_cast<std::streamsize>(n));
        }
        if (!is) throw FormatError("container: truncated payload in " + path);
        out.push_back(std::move(t));
    }
    return out;
}

const Tensor& find_tensor(const std::vector<Tensor>& ts, const std::string& name) {
    for (const Tensor& t : ts)
        if (t.name == name) return t;
    throw ContractError("tensor not found: " + name);
}

bool has_tensor(const std::vector<Tensor>& ts, const std::string& name) {
    for (const Tensor& t : ts)
        if (t.name == name) return true;
    return false;
}

}  // namespace logsem
