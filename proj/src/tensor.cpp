#include "tinyunet/tensor.hpp"

#include <sstream>

namespace tinyunet {

namespace {
std::size_t checked_size(int n, int c, int h, int w) {
    if (n < 1 || c < 1 || h < 1 || w < 1) {
        std::ostringstream os;
        os << "tensor dims must be >= 1, got (" << n << "," << c << "," << h << "," << w << ")";
        throw Error(ErrorKind::config, os.str());
    }
    return static_cast<std::size_t>(n) * c * h * w;
}
}  // namespace

Tensor::Tensor(int n_, int c_, int h_, int w_)
    : n(n_), c(c_), h(h_), w(w_), data(checked_size(n_, c_, h_, w_), 0.0f) {}

Tensor::Tensor(int n_, int c_, int h_, int w_, std::vector<float> values)
    : n(n_), c(c_), h(h_), w(w_), data(std::move(values)) {
    if (data.size() != checked_size(n_, c_, h_, w_)) {
        std::ostringstream os;
        os << "tensor data length " << data.size() << " does not match shape " << shape_str();
        throw Error(ErrorKind::config, os.str());
    }
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

ClassMap::ClassMap(int n_, int h_, int w_)
    : n(n_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * h_ * w_, 0) {
    if (n_ < 1 || h_ < 1 || w_ < 1) {
        throw Error(ErrorKind::config, "class map dims must be >= 1");
    }
}

void fail_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
void fail_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
void fail_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }

}  // namespace tinyunet
