#include "tinyunet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tinyunet::ops {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) fail_config(msg);
}

std::string shape_mismatch(const char* what, const Tensor& a, const Tensor& b) {
    std::ostringstream os;
    os << what << ": incompatible shapes " << a.shape_str() << " vs " << b.shape_str();
    return os.str();
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, std::span<const float> bias) {
    const int k = weights.h;
    require(k == weights.w && (k == 1 || k == 3), "conv2d: kernel must be 1x1 or 3x3");
    require(weights.c == input.c, shape_mismatch("conv2d", input, weights));
    require(bias.empty() || static_cast<int>(bias.size()) == weights.n,
            "conv2d: bias length does not match out channels");
    const int pad = k / 2;
    const int out_c = weights.n;
    Tensor out(input.n, out_c, input.h, input.w);
    for (int in = 0; in < input.n; ++in) {
        for (int oc = 0; oc < out_c; ++oc) {
            const double b = bias.empty() ? 0.0 : bias[oc];
            for (int y = 0; y < input.h; ++y) {
                for (int x = 0; x < input.w; ++x) {
                    double acc = b;
                    for (int ic = 0; ic < input.c; ++ic) {
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = y + ky - pad;
                            if (iy < 0 || iy >= input.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = x + kx - pad;
                                if (ix < 0 || ix >= input.w) continue;
                                acc += static_cast<double>(input.at(in, ic, iy, ix)) *
                                       weights.at(oc, ic, ky, kx);
                            }
                        }
                    }
                    out.at(in, oc, y, x) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

LayerGrad conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output) {
    const int k = weights.h;
    require(k == weights.w && (k == 1 || k == 3), "conv2d_backward: kernel must be 1x1 or 3x3");
    require(weights.c == input.c, shape_mismatch("conv2d_backward", input, weights));
    require(d_output.n == input.n && d_output.c == weights.n && d_output.h == input.h && d_output.w == input.w,
            shape_mismatch("conv2d_backward: d_output", d_output, input));
    const int pad = k / 2;
    const int out_c = weights.n;

    std::vector<double> d_in(input.size(), 0.0);
    std::vector<double> d_w(weights.size(), 0.0);
    std::vector<double> d_b(static_cast<std::size_t>(out_c), 0.0);

    for (int in = 0; in < input.n; ++in) {
        for (int oc = 0; oc < out_c; ++oc) {
            for (int y = 0; y < input.h; ++y) {
                for (int x = 0; x < input.w; ++x) {
                    const double g = d_output.at(in, oc, y, x);
                    if (g == 0.0) continue;
                    d_b[oc] += g;
                    for (int ic = 0; ic < input.c; ++ic) {
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = y + ky - pad;
                            if (iy < 0 || iy >= input.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = x + kx - pad;
                                if (ix < 0 || ix >= input.w) continue;
                                d_in[input.index(in, ic, iy, ix)] += g * weights.at(oc, ic, ky, kx);
                                d_w[weights.index(oc, ic, ky, kx)] += g * input.at(in, ic, iy, ix);
                            }
                        }
                    }
                }
            }
        }
    }

    LayerGrad grad;
    grad.d_input = zeros_like(input);
    grad.d_weights = zeros_like(weights);
    for (std::size_t i = 0; i < d_in.size(); ++i) grad.d_input.data[i] = static_cast<float>(d_in[i]);
    for (std::size_t i = 0; i < d_w.size(); ++i) grad.d_weights.data[i] = static_cast<float>(d_w[i]);
    grad.d_bias.resize(d_b.size());
    for (std::size_t i = 0; i < d_b.size(); ++i) grad.d_bias[i] = static_cast<float>(d_b[i]);
    return grad;
}

Tensor conv1x1_forward(const Tensor& input, const Tensor& weights, std::span<const float> bias) {
    require(weights.h == 1 && weights.w == 1, "conv1x1: kernel must be 1x1");
    return conv2d_forward(input, weights, bias);
}

PoolResult maxpool2x2(const Tensor& input) {
    require(input.h % 2 == 0 && input.w % 2 == 0,
            "maxpool2x2: spatial dims must be even, got " + input.shape_str());
    PoolResult res;
    res.output = Tensor(input.n, input.c, input.h / 2, input.w / 2);
    res.argmax.resize(res.output.size());
    std::size_t o = 0;
    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            for (int y = 0; y < input.h; y += 2) {
                for (int x = 0; x < input.w; x += 2) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = input.index(in, ic, y + dy, x + dx);
                            if (input.data[idx] > best) {  // strict: ties keep the first
                                best = input.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    res.output.data[o] = best;
                    res.argmax[o] = static_cast<std::uint32_t>(best_idx);
                    ++o;
                }
            }
        }
    }
    return res;
}

Tensor maxpool2x2_backward(const PoolResult& fwd, const Tensor& d_output, int in_h, int in_w) {
    require(fwd.output.same_shape(d_output), shape_mismatch("maxpool2x2_backward", fwd.output, d_output));
    Tensor d_input(d_output.n, d_output.c, in_h, in_w);
    for (std::size_t o = 0; o < d_output.size(); ++o) {
        d_input.data[fwd.argmax[o]] += d_output.data[o];
    }
    return d_input;
}

Tensor transpose_conv2x2(const Tensor& input, const Tensor& weights, std::span<const float> bias) {
    require(weights.h == 2 && weights.w == 2, "transpose_conv2x2: kernel must be 2x2");
    require(weights.n == input.c, shape_mismatch("transpose_conv2x2", input, weights));
    const int out_c = weights.c;
    require(bias.empty() || static_cast<int>(bias.size()) == out_c,
            "transpose_conv2x2: bias length does not match out channels");
    Tensor out(input.n, out_c, input.h * 2, input.w * 2);
    std::vector<double> acc(out.size(), 0.0);
    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            for (int oc = 0; oc < out_c; ++oc) {
                for (int y = 0; y < input.h; ++y) {
                    for (int x = 0; x < input.w; ++x) {
                        const double v = input.at(in, ic, y, x);
                        for (int ky = 0; ky < 2; ++ky) {
                            for (int kx = 0; kx < 2; ++kx) {
                                acc[out.index(in, oc, 2 * y + ky, 2 * x + kx)] +=
                                    v * weights.at(ic, oc, ky, kx);
                            }
                        }
                    }
                }
            }
        }
    }
    for (int in = 0; in < out.n; ++in) {
        for (int oc = 0; oc < out_c; ++oc) {
            const double b = bias.empty() ? 0.0 : bias[oc];
            for (int y = 0; y < out.h; ++y) {
                for (int x = 0; x < out.w; ++x) {
                    const std::size_t i = out.index(in, oc, y, x);
                    out.data[i] = static_cast<float>(acc[i] + b);
                }
            }
        }
    }
    return out;
}

LayerGrad transpose_conv2x2_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output) {
    require(weights.h == 2 && weights.w == 2, "transpose_conv2x2_backward: kernel must be 2x2");
    require(weights.n == input.c, shape_mismatch("transpose_conv2x2_backward", input, weights));
    require(d_output.n == input.n && d_output.c == weights.c && d_output.h == input.h * 2 &&
                d_output.w == input.w * 2,
            shape_mismatch("transpose_conv2x2_backward: d_output", d_output, input));
    const int out_c = weights.c;

    std::vector<double> d_in(input.size(), 0.0);
    std::vector<double> d_w(weights.size(), 0.0);
    std::vector<double> d_b(static_cast<std::size_t>(out_c), 0.0);

    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            for (int oc = 0; oc < out_c; ++oc) {
                for (int y = 0; y < input.h; ++y) {
                    for (int x = 0; x < input.w; ++x) {
                        const double v = input.at(in, ic, y, x);
                        double s = 0.0;
                        for (int ky = 0; ky < 2; ++ky) {
                            for (int kx = 0; kx < 2; ++kx) {
                                const double g = d_output.at(in, oc, 2 * y + ky, 2 * x + kx);
                                s += g * weights.at(ic, oc, ky, kx);
                                d_w[weights.index(ic, oc, ky, kx)] += g * v;
                            }
                        }
                        d_in[input.index(in, ic, y, x)] += s;
                    }
                }
            }
        }
    }
    for (int in = 0; in < d_output.n; ++in) {
        for (int oc = 0; oc < out_c; ++oc) {
            for (int y = 0; y < d_output.h; ++y) {
                for (int x = 0; x < d_output.w; ++x) {
                    d_b[oc] += d_output.at(in, oc, y, x);
                }
            }
        }
    }

    LayerGrad grad;
    grad.d_input = zeros_like(input);
    grad.d_weights = zeros_like(weights);
    for (std::size_t i = 0; i < d_in.size(); ++i) grad.d_input.data[i] = static_cast<float>(d_in[i]);
    for (std::size_t i = 0; i < d_w.size(); ++i) grad.d_weights.data[i] = static_cast<float>(d_w[i]);
    grad.d_bias.resize(d_b.size());
    for (std::size_t i = 0; i < d_b.size(); ++i) grad.d_bias[i] = static_cast<float>(d_b[i]);
    return grad;
}

Tensor batchnorm_forward(const Tensor& input, std::span<const float> gamma, std::span<const float> beta,
                         std::vector<float>& running_mean, std::vector<float>& running_var, BatchNormMode mode,
                         float momentum, float eps, BatchNormCache* cache) {
    const int c = input.c;
    require(static_cast<int>(gamma.size()) == c && static_cast<int>(beta.size()) == c &&
                static_cast<int>(running_mean.size()) == c && static_cast<int>(running_var.size()) == c,
            "batchnorm: parameter vectors must have length c=" + std::to_string(c));

    std::vector<double> mean(c, 0.0), var(c, 0.0);
    const double count = static_cast<double>(input.n) * input.h * input.w;
    if (mode == BatchNormMode::train) {
        for (int in = 0; in < input.n; ++in)
            for (int ic = 0; ic < c; ++ic)
                for (int y = 0; y < input.h; ++y)
                    for (int x = 0; x < input.w; ++x) mean[ic] += input.at(in, ic, y, x);
        for (int ic = 0; ic < c; ++ic) mean[ic] /= count;
        for (int in = 0; in < input.n; ++in)
            for (int ic = 0; ic < c; ++ic)
                for (int y = 0; y < input.h; ++y)
                    for (int x = 0; x < input.w; ++x) {
                        const double d = input.at(in, ic, y, x) - mean[ic];
                        var[ic] += d * d;
                    }
        for (int ic = 0; ic < c; ++ic) var[ic] /= count;  // biased, used for both normalization and running stats
        for (int ic = 0; ic < c; ++ic) {
            running_mean[ic] = static_cast<float>((1.0 - momentum) * running_mean[ic] + momentum * mean[ic]);
            running_var[ic] = static_cast<float>((1.0 - momentum) * running_var[ic] + momentum * var[ic]);
        }
    } else {
        for (int ic = 0; ic < c; ++ic) {
            mean[ic] = running_mean[ic];
            var[ic] = running_var[ic];
        }
    }

    std::vector<double> inv_std(c);
    for (int ic = 0; ic < c; ++ic) inv_std[ic] = 1.0 / std::sqrt(var[ic] + eps);
    if (cache) {
        cache->mean.assign(mean.begin(), mean.end());
        cache->inv_std.assign(inv_std.begin(), inv_std.end());
    }

    Tensor out = zeros_like(input);
    for (int in = 0; in < input.n; ++in)
        for (int ic = 0; ic < c; ++ic) {
            const double m = mean[ic], s = inv_std[ic], g = gamma[ic], b = beta[ic];
            for (int y = 0; y < input.h; ++y)
                for (int x = 0; x < input.w; ++x)
                    out.at(in, ic, y, x) = static_cast<float>(g * (input.at(in, ic, y, x) - m) * s + b);
        }
    return out;
}

BatchNormGrad batchnorm_backward(const Tensor& input, std::span<const float> gamma, const BatchNormCache& cache,
                                 const Tensor& d_output) {
    require(input.same_shape(d_output), shape_mismatch("batchnorm_backward", input, d_output));
    const int c = input.c;
    const double m_count = static_cast<double>(input.n) * input.h * input.w;

    BatchNormGrad grad;
    grad.d_input = zeros_like(input);
    grad.d_gamma.assign(c, 0.0f);
    grad.d_beta.assign(c, 0.0f);

    for (int ic = 0; ic < c; ++ic) {
        const double mean = cache.mean[ic];
        const double inv_std = cache.inv_std[ic];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int in = 0; in < input.n; ++in)
            for (int y = 0; y < input.h; ++y)
                for (int x = 0; x < input.w; ++x) {
                    const double dy = d_output.at(in, ic, y, x);
                    const double xhat = (input.at(in, ic, y, x) - mean) * inv_std;
                    sum_dy += dy;
                    sum_dy_xhat += dy * xhat;
                }
        grad.d_gamma[ic] = static_cast<float>(sum_dy_xhat);
        grad.d_beta[ic] = static_cast<float>(sum_dy);
        const double g = gamma[ic];
        for (int in = 0; in < input.n; ++in)
            for (int y = 0; y < input.h; ++y)
                for (int x = 0; x < input.w; ++x) {
                    const double dy = d_output.at(in, ic, y, x);
                    const double xhat = (input.at(in, ic, y, x) - mean) * inv_std;
                    const double dx = g * inv_std * (dy - sum_dy / m_count - xhat * sum_dy_xhat / m_count);
                    grad.d_input.at(in, ic, y, x) = static_cast<float>(dx);
                }
    }
    return grad;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (float& v : out.data) v = std::max(0.0f, v);
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& d_output) {
    require(input.same_shape(d_output), shape_mismatch("relu_backward", input, d_output));
    Tensor d_input = d_output;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input.data[i] <= 0.0f) d_input.data[i] = 0.0f;
    }
    return d_input;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require(a.n == b.n && a.h == b.h && a.w == b.w, shape_mismatch("concat_channels", a, b));
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    for (int in = 0; in < a.n; ++in) {
        std::copy_n(a.data.begin() + in * a.c * plane, a.c * plane,
                    out.data.begin() + static_cast<std::size_t>(in) * out.c * plane);
        std::copy_n(b.data.begin() + in * b.c * plane, b.c * plane,
                    out.data.begin() + static_cast<std::size_t>(in) * out.c * plane + a.c * plane);
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int c_a) {
    require(c_a >= 1 && c_a < t.c, "split_channels: bad split point");
    Tensor a(t.n, c_a, t.h, t.w);
    Tensor b(t.n, t.c - c_a, t.h, t.w);
    const std::size_t plane = static_cast<std::size_t>(t.h) * t.w;
    for (int in = 0; in < t.n; ++in) {
        std::copy_n(t.data.begin() + static_cast<std::size_t>(in) * t.c * plane, c_a * plane,
                    a.data.begin() + static_cast<std::size_t>(in) * a.c * plane);
        std::copy_n(t.data.begin() + static_cast<std::size_t>(in) * t.c * plane + c_a * plane,
                    (t.c - c_a) * plane, b.data.begin() + static_cast<std::size_t>(in) * b.c * plane);
    }
    return {std::move(a), std::move(b)};
}

Tensor softmax_channels(const Tensor& input) {
    Tensor out = zeros_like(input);
    for (int in = 0; in < input.n; ++in)
        for (int y = 0; y < input.h; ++y)
            for (int x = 0; x < input.w; ++x) {
                float mx = -std::numeric_limits<float>::infinity();
                for (int ic = 0; ic < input.c; ++ic) mx = std::max(mx, input.at(in, ic, y, x));
                double denom = 0.0;
                for (int ic = 0; ic < input.c; ++ic) denom += std::exp(static_cast<double>(input.at(in, ic, y, x)) - mx);
                for (int ic = 0; ic < input.c; ++ic)
                    out.at(in, ic, y, x) =
                        static_cast<float>(std::exp(static_cast<double>(input.at(in, ic, y, x)) - mx) / denom);
            }
    return out;
}

Tensor softmax_channels_backward(const Tensor& softmax_out, const Tensor& d_output) {
    require(softmax_out.same_shape(d_output), shape_mismatch("softmax_backward", softmax_out, d_output));
    Tensor d_input = zeros_like(softmax_out);
    for (int in = 0; in < softmax_out.n; ++in)
        for (int y = 0; y < softmax_out.h; ++y)
            for (int x = 0; x < softmax_out.w; ++x) {
                double dot = 0.0;
                for (int ic = 0; ic < softmax_out.c; ++ic)
                    dot += static_cast<double>(softmax_out.at(in, ic, y, x)) * d_output.at(in, ic, y, x);
                for (int ic = 0; ic < softmax_out.c; ++ic) {
                    const double s = softmax_out.at(in, ic, y, x);
                    d_input.at(in, ic, y, x) = static_cast<float>(s * (d_output.at(in, ic, y, x) - dot));
                }
            }
    return d_input;
}

}  // namespace tinyunet::ops
