#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tinyunet {

// Rank-4 NCHW float tensor. Contiguous row-major storage, value semantics.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_);
    Tensor(int n_, int c_, int h_, int w_, std::vector<float> values);

    std::size_t size() const { return data.size(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    float& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    bool same_shape(const Tensor& other) const {
        return n == other.n && c == other.c && h == other.h && w == other.w;
    }
    std::string shape_str() const;

    bool all_finite() const;
};

Tensor zeros_like(const Tensor& t);

// Per-pixel class ids, shape (n, h, w), values 0..num_classes-1.
struct ClassMap {
    int n = 0, h = 0, w = 0;
    std::vector<std::uint8_t> data;

    ClassMap() = default;
    ClassMap(int n_, int h_, int w_);

    std::size_t size() const { return data.size(); }
    std::size_t index(int in, int iy, int ix) const {
        return (static_cast<std::size_t>(in) * h + iy) * w + ix;
    }
    std::uint8_t& at(int in, int iy, int ix) { return data[index(in, iy, ix)]; }
    std::uint8_t at(int in, int iy, int ix) const { return data[index(in, iy, ix)]; }
};

// Error categories map to CLI exit codes: config=2, data=3, numeric=4.
enum class ErrorKind { config, data, numeric };

class Error : public std::exception {
public:
    Error(ErrorKind kind, std::string message) : kind_(kind), message_(std::move(message)) {}
    const char* what() const noexcept override { return message_.c_str(); }
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
    std::string message_;
};

[[noreturn]] void fail_config(const std::string& msg);
[[noreturn]] void fail_data(const std::string& msg);
[[noreturn]] void fail_numeric(const std::string& msg);

}  // namespace tinyunet
