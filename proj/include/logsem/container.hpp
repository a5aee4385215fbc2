#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace logsem {

// Binary tensor container ("LREP"):
//   magic "LREP" | u32 version (=1) | u64 tensor_count
//   per tensor: u32 name_len | name bytes | u8 dtype | u8 rank
//               | rank x u64 dims | raw payload
// All integers little-endian; payload row-major.  dtype 0 = float32,
// dtype 1 = int8.  Round-trips are bitwise lossless.
enum class DType : uint8_t { F32 = 0, I8 = 1 };

struct Tensor {
    std::string name;
    DType dtype = DType::F32;
    std::vector<uint64_t> dims;
    std::vector<float> f32;
    std::vector<int8_t> i8;

    size_t numel() const {
        size_t n = 1;
        for (uint64_t d : dims) n *= static_cast<size_t>(d);
        return dims.empty() ? 0 : n;
    }
};

Tensor make_f32_tensor(std::string name, std::vector<uint64_t> dims,
                       std::vector<float> data);
Tensor make_i8_tensor(std::string name, std::vector<uint64_t> dims,
                      std::vector<int8_t> data);

void write_container(const std::string& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_container(const std::string& path);

// Lookup by exact name; throws ContractError when absent.
const Tensor& find_tensor(const std::vector<Tensor>& ts, const std::string& name);
bool has_tensor(const std::vector<Tensor>& ts, const std::string& name);

}  // namespace logsem
