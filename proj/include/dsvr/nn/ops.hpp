#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsvr/nn/blas.hpp"
#include "dsvr/nn/tensor.hpp"
#include "dsvr/nn/var.hpp"

namespace dsvr::nn {

namespace detail {

/// Unrolls one (C, H, W) plane into a (C*k*k, Ho*Wo) patch matrix for GEMM.
template <typename T>
void im2col(const T* src, int c, int h, int w, int k, int stride, int pad, int ho,
            int wo, T* col) {
    for (int ci = 0; ci < c; ++ci) {
        const T* plane = src + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + (static_cast<std::size_t>(ci) * k * k + ky * k + kx) *
                                   (static_cast<std::size_t>(ho) * wo);
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    T* dst = row + static_cast<std::size_t>(oy) * wo;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + wo, T(0));
                        continue;
                    }
                    const T* srow = plane + static_cast<std::size_t>(iy) * w;
                    if (stride == 1) {
                        const int ix0 = -pad + kx;
                        int lead = std::max(0, -ix0);
                        int valid = std::min(wo, w - ix0) - lead;
                        if (valid < 0) valid = 0;
                        std::fill(dst, dst + lead, T(0));
                        if (valid > 0) {
                            std::memcpy(dst + lead, srow + ix0 + lead,
                                        static_cast<std::size_t>(valid) * sizeof(T));
                        }
                        std::fill(dst + lead + valid, dst + wo, T(0));
                    } else {
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            dst[ox] = (ix >= 0 && ix < w) ? srow[ix] : T(0);
                        }
                    }
                }
            }
        }
    }
}

/// Scatters a patch-matrix gradient back onto the (C, H, W) input plane.
template <typename T>
void col2im_accum(const T* col, int c, int h, int w, int k, int stride, int pad,
                  int ho, int wo, T* dst) {
    for (int ci = 0; ci < c; ++ci) {
        T* plane = dst + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + (static_cast<std::size_t>(ci) * k * k + ky * k + kx) *
                                         (static_cast<std::size_t>(ho) * wo);
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    const T* srow = row + static_cast<std::size_t>(oy) * wo;
                    T* drow = plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

/// 2-D cross-correlation. x: (N, Cin, H, W), w: (Cout, Cin, k, k),
/// b: (1, Cout, 1, 1) or nullptr. Zero padding, square kernel.
template <typename T>
VarPtr<T> conv2d(const VarPtr<T>& x, const VarPtr<T>& w, const VarPtr<T>& b, int stride,
                 int pad) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    if (ws[2] != ws[3]) {
        throw std::invalid_argument("conv2d: kernel must be square, got " + w->value.shape_str());
    }
    if (xs[1] != ws[1]) {
        throw std::invalid_argument("conv2d: input has " + std::to_string(xs[1]) +
                                    " channels but kernel expects " + std::to_string(ws[1]));
    }
    if (stride < 1 || pad < 0) {
        throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
    }
    if (b && (b->value.c() != ws[0] || b->value.numel() != static_cast<std::size_t>(ws[0]))) {
        throw std::invalid_argument("conv2d: bias shape must be (1, Cout, 1, 1)");
    }
    const int batch = xs[0], cin = xs[1], h = xs[2], iw = xs[3];
    const int cout = ws[0], k = ws[2];
    const int ho = (h + 2 * pad - k) / stride + 1;
    const int wo = (iw + 2 * pad - k) / stride + 1;
    if (ho < 1 || wo < 1) {
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    }

    const std::size_t ckk = static_cast<std::size_t>(cin) * k * k;
    const std::size_t ospatial = static_cast<std::size_t>(ho) * wo;
    std::vector<T> col(ckk * ospatial);

    Tensor4<T> out(batch, cout, ho, wo);
    for (int n = 0; n < batch; ++n) {
        detail::im2col(x->value.data() + x->value.index(n, 0, 0, 0), cin, h, iw, k, stride,
                       pad, ho, wo, col.data());
        gemm(false, false, cout, static_cast<int>(ospatial), static_cast<int>(ckk), T(1),
             w->value.data(), static_cast<int>(ckk), col.data(),
             static_cast<int>(ospatial), T(0), out.data() + out.index(n, 0, 0, 0),
             static_cast<int>(ospatial));
    }
    if (b) {
        for (int n = 0; n < batch; ++n) {
            for (int c = 0; c < cout; ++c) {
                T* dst = out.data() + out.index(n, c, 0, 0);
                const T bv = b->value.data()[c];
                for (std::size_t i = 0; i < ospatial; ++i) dst[i] += bv;
            }
        }
    }

    std::vector<VarPtr<T>> parents{x, w};
    if (b) parents.push_back(b);
    return make_op<T>(
        std::move(out), std::move(parents),
        [x, w, b, stride, pad, k, cin, cout, h, iw, ho, wo](Var<T>& self) {
            const std::size_t ckk = static_cast<std::size_t>(cin) * k * k;
            const std::size_t ospatial = static_cast<std::size_t>(ho) * wo;
            const int batch = self.value.n();
            const T* go = self.grad.data();

            std::vector<T> col;
            std::vector<T> colg;
            if (w->requires_grad || x->requires_grad) col.resize(ckk * ospatial);
            if (x->requires_grad) colg.resize(ckk * ospatial);

            if (w->requires_grad) w->ensure_grad();
            if (x->requires_grad) x->ensure_grad();

            for (int n = 0; n < batch; ++n) {
                const T* go_n = go + self.grad.index(n, 0, 0, 0);
                if (w->requires_grad || x->requires_grad) {
                    detail::im2col(x->value.data() + x->value.index(n, 0, 0, 0), cin, h, iw,
                                   k, stride, pad, ho, wo, col.data());
                }
                if (w->requires_grad) {
                    // dW += dY * col^T
                    gemm(false, true, cout, static_cast<int>(ckk),
                         static_cast<int>(ospatial), T(1), go_n,
                         static_cast<int>(ospatial), col.data(),
                         static_cast<int>(ospatial), T(1), w->grad.data(),
                         static_cast<int>(ckk));
                }
                if (x->requires_grad) {
                    // dcol = W^T * dY, then scatter back.
                    gemm(true, false, static_cast<int>(ckk), static_cast<int>(ospatial),
                         cout, T(1), w->value.data(), static_cast<int>(ckk), go_n,
                         static_cast<int>(ospatial), T(0), colg.data(),
                         static_cast<int>(ospatial));
                    detail::col2im_accum(colg.data(), cin, h, iw, k, stride, pad, ho, wo,
                                         x->grad.data() + x->grad.index(n, 0, 0, 0));
                }
            }
            if (w->requires_grad) w->grad_seen = true;
            if (x->requires_grad) x->grad_seen = true;
            if (b && b->requires_grad) {
                auto& gb = b->ensure_grad();
                for (int n = 0; n < batch; ++n) {
                    for (int c = 0; c < cout; ++c) {
                        const T* src = go + self.grad.index(n, c, 0, 0);
                        T acc = T(0);
                        for (std::size_t i = 0; i < ospatial; ++i) acc += src[i];
                        gb.data()[c] += acc;
                    }
                }
                b->grad_seen = true;
            }
        });
}

template <typename T>
VarPtr<T> conv2d(const VarPtr<T>& x, const VarPtr<T>& w, int stride, int pad) {
    return conv2d<T>(x, w, nullptr, stride, pad);
}

/// Elementwise max(v, slope*v). The subgradient at exactly 0 uses the
/// positive branch (slope 1).
template <typename T>
VarPtr<T> leaky_relu(const VarPtr<T>& x, T slope) {
    if (!(slope > T(0) && slope < T(1))) {
        throw std::invalid_argument("leaky_relu: slope must be in (0, 1)");
    }
    Tensor4<T> out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        if (out.data()[i] < T(0)) out.data()[i] *= slope;
    }
    return make_op<T>(std::move(out), {x}, [x, slope](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const T* go = self.grad.data();
        const T* v = x->value.data();
        for (std::size_t i = 0; i < gx.numel(); ++i) {
            gx.data()[i] += go[i] * (v[i] >= T(0) ? T(1) : slope);
        }
        x->grad_seen = true;
    });
}

template <typename T>
VarPtr<T> add(const VarPtr<T>& a, const VarPtr<T>& b) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("add: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    Tensor4<T> out = a->value;
    const T* bd = b->value.data();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] += bd[i];
    return make_op<T>(std::move(out), {a, b}, [a, b](Var<T>& self) {
        if (a->requires_grad) a->accumulate(self.grad);
        if (b->requires_grad) b->accumulate(self.grad);
    });
}

template <typename T>
VarPtr<T> mul_scalar(const VarPtr<T>& x, T s) {
    Tensor4<T> out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] *= s;
    return make_op<T>(std::move(out), {x}, [x, s](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const T* go = self.grad.data();
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data()[i] += go[i] * s;
        x->grad_seen = true;
    });
}

/// Concatenates along the channel axis; all parts share (n, h, w).
template <typename T>
VarPtr<T> concat_channels(const std::vector<VarPtr<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const auto& s0 = parts[0]->value.shape();
    int ctotal = 0;
    for (const auto& p : parts) {
        const auto& s = p->value.shape();
        if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
            throw std::invalid_argument("concat_channels: spatial/batch dims differ");
        }
        ctotal += s[1];
    }
    Tensor4<T> out(s0[0], ctotal, s0[2], s0[3]);
    const std::size_t plane = static_cast<std::size_t>(s0[2]) * s0[3];
    for (int n = 0; n < s0[0]; ++n) {
        std::size_t coff = 0;
        for (const auto& p : parts) {
            const int pc = p->value.c();
            std::memcpy(out.data() + out.index(n, static_cast<int>(coff), 0, 0),
                        p->value.data() + p->value.index(n, 0, 0, 0),
                        static_cast<std::size_t>(pc) * plane * sizeof(T));
            coff += pc;
        }
    }
    return make_op<T>(std::move(out), parts, [parts, plane](Var<T>& self) {
        const int batch = self.value.n();
        for (int n = 0; n < batch; ++n) {
            std::size_t coff = 0;
            for (const auto& p : parts) {
                const int pc = p->value.c();
                if (p->requires_grad) {
                    auto& gp = p->ensure_grad();
                    const T* src = self.grad.data() + self.grad.index(n, static_cast<int>(coff), 0, 0);
                    T* dst = gp.data() + gp.index(n, 0, 0, 0);
                    const std::size_t count = static_cast<std::size_t>(pc) * plane;
                    for (std::size_t i = 0; i < count; ++i) dst[i] += src[i];
                    p->grad_seen = true;
                }
                coff += pc;
            }
        }
    });
}

/// (N, C*r^2, H, W) -> (N, C, r*H, r*W) channel-to-space rearrangement.
template <typename T>
VarPtr<T> pixel_shuffle(const VarPtr<T>& x, int r) {
    if (r < 1) throw std::invalid_argument("pixel_shuffle: factor must be >= 1");
    const auto& s = x->value.shape();
    if (s[1] % (r * r) != 0) {
        throw std::invalid_argument("pixel_shuffle: channel count " + std::to_string(s[1]) +
                                    " not divisible by r^2 = " + std::to_string(r * r));
    }
    const int n = s[0], co = s[1] / (r * r), h = s[2], w = s[3];
    Tensor4<T> out(n, co, h * r, w * r);
    for (int ni = 0; ni < n; ++ni) {
        for (int c = 0; c < co; ++c) {
            for (int dy = 0; dy < r; ++dy) {
                for (int dx = 0; dx < r; ++dx) {
                    const int ci = c * r * r + dy * r + dx;
                    for (int y = 0; y < h; ++y) {
                        const T* src = x->value.data() + x->value.index(ni, ci, y, 0);
                        for (int xx = 0; xx < w; ++xx) {
                            out.at(ni, c, y * r + dy, xx * r + dx) = src[xx];
                        }
                    }
                }
            }
        }
    }
    return make_op<T>(std::move(out), {x}, [x, r, co, h, w](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        for (int ni = 0; ni < self.value.n(); ++ni) {
            for (int c = 0; c < co; ++c) {
                for (int dy = 0; dy < r; ++dy) {
                    for (int dx = 0; dx < r; ++dx) {
                        const int ci = c * r * r + dy * r + dx;
                        for (int y = 0; y < h; ++y) {
                            T* dst = gx.data() + gx.index(ni, ci, y, 0);
                            for (int xx = 0; xx < w; ++xx) {
                                dst[xx] += self.grad.at(ni, c, y * r + dy, xx * r + dx);
                            }
                        }
                    }
                }
            }
        }
        x->grad_seen = true;
    });
}

/// Exact inverse of pixel_shuffle (space-to-channel); plain tensor version.
template <typename T>
Tensor4<T> pixel_unshuffle_tensor(const Tensor4<T>& x, int r) {
    const auto& s = x.shape();
    if (s[2] % r != 0 || s[3] % r != 0) {
        throw std::invalid_argument("pixel_unshuffle: spatial dims not divisible by r");
    }
    Tensor4<T> out(s[0], s[1] * r * r, s[2] / r, s[3] / r);
    for (int ni = 0; ni < s[0]; ++ni) {
        for (int c = 0; c < s[1]; ++c) {
            for (int y = 0; y < s[2]; ++y) {
                for (int xx = 0; xx < s[3]; ++xx) {
                    const int dy = y % r, dx = xx % r;
                    out.at(ni, c * r * r + dy * r + dx, y / r, xx / r) = x.at(ni, c, y, xx);
                }
            }
        }
    }
    return out;
}

template <typename T>
VarPtr<T> upsample_nearest2x(const VarPtr<T>& x) {
    const auto& s = x->value.shape();
    Tensor4<T> out(s[0], s[1], s[2] * 2, s[3] * 2);
    for (int n = 0; n < s[0]; ++n) {
        for (int c = 0; c < s[1]; ++c) {
            for (int y = 0; y < s[2]; ++y) {
                const T* src = x->value.data() + x->value.index(n, c, y, 0);
                T* d0 = out.data() + out.index(n, c, 2 * y, 0);
                T* d1 = out.data() + out.index(n, c, 2 * y + 1, 0);
                for (int xx = 0; xx < s[3]; ++xx) {
                    d0[2 * xx] = d0[2 * xx + 1] = src[xx];
                    d1[2 * xx] = d1[2 * xx + 1] = src[xx];
                }
            }
        }
    }
    return make_op<T>(std::move(out), {x}, [x](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const auto& s = x->value.shape();
        for (int n = 0; n < s[0]; ++n) {
            for (int c = 0; c < s[1]; ++c) {
                for (int y = 0; y < s[2]; ++y) {
                    const T* g0 = self.grad.data() + self.grad.index(n, c, 2 * y, 0);
                    const T* g1 = self.grad.data() + self.grad.index(n, c, 2 * y + 1, 0);
                    T* dst = gx.data() + gx.index(n, c, y, 0);
                    for (int xx = 0; xx < s[3]; ++xx) {
                        dst[xx] += g0[2 * xx] + g0[2 * xx + 1] + g1[2 * xx] + g1[2 * xx + 1];
                    }
                }
            }
        }
        x->grad_seen = true;
    });
}

/// Replicate (edge-clamp) padding.
template <typename T>
VarPtr<T> pad_replicate(const VarPtr<T>& x, int top, int bottom, int left, int right) {
    if (top < 0 || bottom < 0 || left < 0 || right < 0) {
        throw std::invalid_argument("pad_replicate: negative padding");
    }
    const auto& s = x->value.shape();
    Tensor4<T> out(s[0], s[1], s[2] + top + bottom, s[3] + left + right);
    for (int n = 0; n < s[0]; ++n) {
        for (int c = 0; c < s[1]; ++c) {
            for (int y = 0; y < out.h(); ++y) {
                const int sy = std::clamp(y - top, 0, s[2] - 1);
                const T* src = x->value.data() + x->value.index(n, c, sy, 0);
                T* dst = out.data() + out.index(n, c, y, 0);
                for (int xx = 0; xx < out.w(); ++xx) {
                    dst[xx] = src[std::clamp(xx - left, 0, s[3] - 1)];
                }
            }
        }
    }
    return make_op<T>(std::move(out), {x}, [x, top, left](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const auto& s = x->value.shape();
        for (int n = 0; n < s[0]; ++n) {
            for (int c = 0; c < s[1]; ++c) {
                for (int y = 0; y < self.value.h(); ++y) {
                    const int sy = std::clamp(y - top, 0, s[2] - 1);
                    const T* src = self.grad.data() + self.grad.index(n, c, y, 0);
                    T* dst = gx.data() + gx.index(n, c, sy, 0);
                    for (int xx = 0; xx < self.value.w(); ++xx) {
                        dst[std::clamp(xx - left, 0, s[3] - 1)] += src[xx];
                    }
                }
            }
        }
        x->grad_seen = true;
    });
}

template <typename T>
VarPtr<T> crop(const VarPtr<T>& x, int top, int left, int oh, int ow) {
    const auto& s = x->value.shape();
    if (top < 0 || left < 0 || oh < 1 || ow < 1 || top + oh > s[2] || left + ow > s[3]) {
        throw std::invalid_argument("crop: window out of bounds");
    }
    Tensor4<T> out(s[0], s[1], oh, ow);
    for (int n = 0; n < s[0]; ++n) {
        for (int c = 0; c < s[1]; ++c) {
            for (int y = 0; y < oh; ++y) {
                std::memcpy(out.data() + out.index(n, c, y, 0),
                            x->value.data() + x->value.index(n, c, top + y, left),
                            static_cast<std::size_t>(ow) * sizeof(T));
            }
        }
    }
    return make_op<T>(std::move(out), {x}, [x, top, left, oh, ow](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        for (int n = 0; n < self.value.n(); ++n) {
            for (int c = 0; c < self.value.c(); ++c) {
                for (int y = 0; y < oh; ++y) {
                    const T* src = self.grad.data() + self.grad.index(n, c, y, 0);
                    T* dst = gx.data() + gx.index(n, c, top + y, left);
                    for (int xx = 0; xx < ow; ++xx) dst[xx] += src[xx];
                }
            }
        }
        x->grad_seen = true;
    });
}

/// Reinterprets the flat buffer under a new (n, c, h, w); element count must
/// match. Gradients route through unchanged.
template <typename T>
VarPtr<T> reshape(const VarPtr<T>& x, int n, int c, int h, int w) {
    Tensor4<T> out(n, c, h, w);
    if (out.numel() != x->value.numel()) {
        throw std::invalid_argument("reshape: element count mismatch " + x->value.shape_str() +
                                    " -> " + out.shape_str());
    }
    std::memcpy(out.data(), x->value.data(), out.numel() * sizeof(T));
    return make_op<T>(std::move(out), {x}, [x](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const T* go = self.grad.data();
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data()[i] += go[i];
        x->grad_seen = true;
    });
}

template <typename T>
VarPtr<T> mean_all(const VarPtr<T>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x->value.numel(); ++i) acc += x->value.data()[i];
    Tensor4<T> out(1, 1, 1, 1);
    out.data()[0] = static_cast<T>(acc / static_cast<double>(x->value.numel()));
    return make_op<T>(std::move(out), {x}, [x](Var<T>& self) {
        if (!x->requires_grad) return;
        auto& gx = x->ensure_grad();
        const T g = self.grad.data()[0] / static_cast<T>(x->value.numel());
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data()[i] += g;
        x->grad_seen = true;
    });
}

/// Mean absolute difference.
template <typename T>
VarPtr<T> l1_loss(const VarPtr<T>& pred, const VarPtr<T>& target) {
    if (!pred->value.same_shape(target->value)) {
        throw std::invalid_argument("l1_loss: shape mismatch " + pred->value.shape_str() +
                                    " vs " + target->value.shape_str());
    }
    const std::size_t count = pred->value.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        acc += std::abs(static_cast<double>(pred->value.data()[i]) -
                        static_cast<double>(target->value.data()[i]));
    }
    Tensor4<T> out(1, 1, 1, 1);
    out.data()[0] = static_cast<T>(acc / static_cast<double>(count));
    return make_op<T>(std::move(out), {pred, target}, [pred, target, count](Var<T>& self) {
        const T g = self.grad.data()[0] / static_cast<T>(count);
        const T* p = pred->value.data();
        const T* t = target->value.data();
        if (pred->requires_grad) {
            auto& gp = pred->ensure_grad();
            for (std::size_t i = 0; i < count; ++i) {
                const T d = p[i] - t[i];
                gp.data()[i] += g * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
            }
            pred->grad_seen = true;
        }
        if (target->requires_grad) {
            auto& gt = target->ensure_grad();
            for (std::size_t i = 0; i < count; ++i) {
                const T d = p[i] - t[i];
                gt.data()[i] -= g * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
            }
            target->grad_seen = true;
        }
    });
}

/// Mean of sqrt((pred - target)^2 + eps^2); smooth L1 surrogate.
template <typename T>
VarPtr<T> charbonnier_loss(const VarPtr<T>& pred, const VarPtr<T>& target, T eps) {
    if (!pred->value.same_shape(target->value)) {
        throw std::invalid_argument("charbonnier_loss: shape mismatch " +
                                    pred->value.shape_str() + " vs " +
                                    target->value.shape_str());
    }
    if (!(eps > T(0))) throw std::invalid_argument("charbonnier_loss: eps must be > 0");
    const std::size_t count = pred->value.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = static_cast<double>(pred->value.data()[i]) -
                         static_cast<double>(target->value.data()[i]);
        acc += std::sqrt(d * d + static_cast<double>(eps) * static_cast<double>(eps));
    }
    Tensor4<T> out(1, 1, 1, 1);
    out.data()[0] = static_cast<T>(acc / static_cast<double>(count));
    return make_op<T>(std::move(out), {pred, target}, [pred, target, eps, count](Var<T>& self) {
        const T g = self.grad.data()[0] / static_cast<T>(count);
        const T* p = pred->value.data();
        const T* t = target->value.data();
        if (pred->requires_grad) {
            auto& gp = pred->ensure_grad();
            for (std::size_t i = 0; i < count; ++i) {
                const T d = p[i] - t[i];
                gp.data()[i] += g * d / std::sqrt(d * d + eps * eps);
            }
            pred->grad_seen = true;
        }
        if (target->requires_grad) {
            auto& gt = target->ensure_grad();
            for (std::size_t i = 0; i < count; ++i) {
                const T d = p[i] - t[i];
                gt.data()[i] -= g * d / std::sqrt(d * d + eps * eps);
            }
            target->grad_seen = true;
        }
    });
}

/// Two 3x3 convolutions around a LReLU with an identity skip. Channel count
/// is preserved; the caller zero-initializes w2 so fresh blocks start as the
/// identity.
template <typename T>
VarPtr<T> residual_block(const VarPtr<T>& x, const VarPtr<T>& w1, const VarPtr<T>& b1,
                         const VarPtr<T>& w2, const VarPtr<T>& b2, T slope) {
    if (w2->value.n() != x->value.c()) {
        throw std::invalid_argument("residual_block: block output channels " +
                                    std::to_string(w2->value.n()) +
                                    " do not match input channels " +
                                    std::to_string(x->value.c()));
    }
    auto h = conv2d<T>(x, w1, b1, 1, (w1->value.h() - 1) / 2);
    h = leaky_relu<T>(h, slope);
    h = conv2d<T>(h, w2, b2, 1, (w2->value.h() - 1) / 2);
    return add<T>(x, h);
}

}  // namespace dsvr::nn
