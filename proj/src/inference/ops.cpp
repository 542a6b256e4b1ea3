// Copyright 2026 The WSSV Surveillance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CPU float32 reference kernels for the supported ONNX operator subset.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "common/error.hpp"
#include "inference/graph.hpp"

namespace wssv::inference {

namespace {

[[noreturn]] void op_fail(const Node& node, const std::string& what) {
  fail(ErrorCode::kConfiguration,
       node.op_type + (node.name.empty() ? "" : " '" + node.name + "'") + ": " + what);
}

const Tensor& required(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  if (k >= in.size() || in[k] == nullptr) op_fail(node, "missing input " + std::to_string(k));
  return *in[k];
}

const Tensor* optional_input(const std::vector<const Tensor*>& in, std::size_t k) {
  return k < in.size() ? in[k] : nullptr;
}

const Tensor& float_input(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  const Tensor& t = required(node, in, k);
  if (t.dtype != DType::kFloat) op_fail(node, "input " + std::to_string(k) + " must be float");
  return t;
}

std::vector<std::int64_t> as_int64s(const Tensor& t) {
  if (t.dtype == DType::kInt64) return t.i;
  std::vector<std::int64_t> out;
  out.reserve(t.f.size());
  for (float v : t.f) out.push_back(static_cast<std::int64_t>(v));
  return out;
}

std::int64_t normalize_axis(const Node& node, std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) op_fail(node, "axis " + std::to_string(axis) + " out of range");
  return axis < 0 ? axis + r : axis;
}

// ---- broadcasting ---------------------------------------------------------

Shape broadcast_shape(const Node& node, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::int64_t da = k < rank - a.size() ? 1 : a[k - (rank - a.size())];
    const std::int64_t db = k < rank - b.size() ? 1 : b[k - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      op_fail(node, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[k] = da == 1 ? db : da;
  }
  return out;
}

// Element strides of `in` viewed with shape `out` (0 on broadcast dims).
std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::int64_t> strides(out.size(), 0);
  std::int64_t s = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    const std::size_t ok = k + (out.size() - in.size());
    strides[ok] = in[k] == 1 ? 0 : s;
    s *= in[k];
  }
  return strides;
}

template <typename T, typename F>
std::vector<T> broadcast_apply(const std::vector<T>& a, const Shape& sa, const std::vector<T>& b,
                               const Shape& sb, const Shape& out_shape, F f) {
  const auto n = static_cast<std::size_t>(num_elements(out_shape));
  std::vector<T> out(n);
  if (sa == sb) {
    for (std::size_t k = 0; k < n; ++k) out[k] = f(a[k], b[k]);
    return out;
  }
  if (b.size() == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = f(a[a.size() == 1 ? 0 : k], b[0]);
    if (a.size() == n) return out;
  }
  const auto st_a = broadcast_strides(sa, out_shape);
  const auto st_b = broadcast_strides(sb, out_shape);
  const std::size_t rank = out_shape.size();
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = f(a[static_cast<std::size_t>(ia)], b[static_cast<std::size_t>(ib)]);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += st_a[d];
      ib += st_b[d];
      if (idx[d] < out_shape[d]) break;
      ia -= st_a[d] * idx[d];
      ib -= st_b[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor binary(const Node& node, const std::vector<const Tensor*>& in,
              const std::function<float(float, float)>& ff,
              const std::function<std::int64_t(std::int64_t, std::int64_t)>& fi) {
  const Tensor& a = required(node, in, 0);
  const Tensor& b = required(node, in, 1);
  if (a.dtype != b.dtype) op_fail(node, "mixed element types");
  const Shape out_shape = broadcast_shape(node, a.shape, b.shape);
  if (a.dtype == DType::kInt64) {
    return Tensor::int64s(out_shape, broadcast_apply(a.i, a.shape, b.i, b.shape, out_shape, fi));
  }
  return Tensor::floats(out_shape, broadcast_apply(a.f, a.shape, b.f, b.shape, out_shape, ff));
}

Tensor unary(const Node& node, const std::vector<const Tensor*>& in, const std::function<float(float)>& f) {
  Tensor out = float_input(node, in, 0);
  for (auto& v : out.f) v = f(v);
  return out;
}

// ---- spatial helpers --------------------------------------------------------

struct Window {
  std::int64_t kh, kw, sh, sw, dh, dw;
  std::int64_t pt, pl, pb, pr;
  std::int64_t oh, ow;
};

Window plan_window(const Node& node, std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
                   bool allow_ceil) {
  Window win{};
  win.kh = kh;
  win.kw = kw;
  auto strides = node.attr_ints("strides");
  auto dil = node.attr_ints("dilations");
  auto pads = node.attr_ints("pads");
  win.sh = strides.size() == 2 ? strides[0] : 1;
  win.sw = strides.size() == 2 ? strides[1] : 1;
  win.dh = dil.size() == 2 ? dil[0] : 1;
  win.dw = dil.size() == 2 ? dil[1] : 1;
  if (win.sh < 1 || win.sw < 1 || win.dh < 1 || win.dw < 1) op_fail(node, "strides/dilations must be >= 1");
  const std::string auto_pad = node.attr_string("auto_pad", "NOTSET");
  const std::int64_t ekh = win.dh * (kh - 1) + 1;
  const std::int64_t ekw = win.dw * (kw - 1) + 1;
  if (auto_pad == "NOTSET") {
    if (!pads.empty() && pads.size() != 4) op_fail(node, "expected 4 pads for 2-D input");
    if (pads.size() == 4) {
      win.pt = pads[0];
      win.pl = pads[1];
      win.pb = pads[2];
      win.pr = pads[3];
    }
  } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    const std::int64_t oh = (h + win.sh - 1) / win.sh;
    const std::int64_t ow = (w + win.sw - 1) / win.sw;
    const std::int64_t ph = std::max<std::int64_t>(0, (oh - 1) * win.sh + ekh - h);
    const std::int64_t pw = std::max<std::int64_t>(0, (ow - 1) * win.sw + ekw - w);
    const bool upper = auto_pad == "SAME_UPPER";
    win.pt = upper ? ph / 2 : ph - ph / 2;
    win.pb = ph - win.pt;
    win.pl = upper ? pw / 2 : pw - pw / 2;
    win.pr = pw - win.pl;
  } else if (auto_pad != "VALID") {
    op_fail(node, "unsupported auto_pad " + auto_pad);
  }
  const bool ceil_mode = allow_ceil && node.attr_int("ceil_mode", 0) != 0;
  auto out_dim = [&](std::int64_t n, std::int64_t pa, std::int64_t pb, std::int64_t ek, std::int64_t s) {
    const std::int64_t span = n + pa + pb - ek;
    if (span < 0) op_fail(node, "kernel larger than padded input");
    std::int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    if (ceil_mode && (o - 1) * s >= n + pa) --o;
    return o;
  };
  win.oh = out_dim(h, win.pt, win.pb, ekh, win.sh);
  win.ow = out_dim(w, win.pl, win.pr, ekw, win.sw);
  return win;
}

Tensor conv(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = float_input(node, in, 0);
  const Tensor& wt = float_input(node, in, 1);
  const Tensor* bias = optional_input(in, 2);
  if (x.rank() != 4 || wt.rank() != 4) op_fail(node, "only 2-D convolution (rank-4 tensors) is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t m = wt.shape[0], cg = wt.shape[1], kh = wt.shape[2], kw = wt.shape[3];
  const std::int64_t group = node.attr_int("group", 1);
  if (group < 1 || c % group != 0 || m % group != 0 || cg != c / group) {
    op_fail(node, "channel/group mismatch: input " + shape_string(x.shape) + " weight " + shape_string(wt.shape));
  }
  if (bias && bias->size() != m) op_fail(node, "bias length must equal output channels");
  const Window win = plan_window(node, h, w, kh, kw, false);
  Tensor out = Tensor::zeros({n, m, win.oh, win.ow});
  const std::int64_t m_per_group = m / group;

  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oc = 0; oc < m; ++oc) {
      const std::int64_t g = oc / m_per_group;
      float* dst = out.f.data() + ((b * m + oc) * win.oh) * win.ow;
      const float bv = bias ? bias->f[static_cast<std::size_t>(oc)] : 0.0f;
      std::fill(dst, dst + win.oh * win.ow, bv);
      for (std::int64_t icg = 0; icg < cg; ++icg) {
        const std::int64_t ic = g * cg + icg;
        const float* src = x.f.data() + ((b * c + ic) * h) * w;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const float wv = wt.f[static_cast<std::size_t>(((oc * cg + icg) * kh + ky) * kw + kx)];
            if (wv == 0.0f) continue;
            for (std::int64_t oy = 0; oy < win.oh; ++oy) {
              const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
              if (iy < 0 || iy >= h) continue;
              const float* row = src + iy * w;
              float* drow = dst + oy * win.ow;
              for (std::int64_t ox = 0; ox < win.ow; ++ox) {
                const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
                if (ix < 0 || ix >= w) continue;
                drow[ox] += wv * row[ix];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor pool(const Node& node, const std::vector<const Tensor*>& in, bool is_max) {
  const Tensor& x = float_input(node, in, 0);
  if (x.rank() != 4) op_fail(node, "only 2-D pooling is supported");
  auto k = node.attr_ints("kernel_shape");
  if (k.size() != 2) op_fail(node, "kernel_shape must have 2 entries");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const Window win = plan_window(node, h, w, k[0], k[1], true);
  const bool include_pad = node.attr_int("count_include_pad", 0) != 0;
  Tensor out = Tensor::zeros({n, c, win.oh, win.ow});
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.f.data() + plane * h * w;
    float* dst = out.f.data() + plane * win.oh * win.ow;
    for (std::int64_t oy = 0; oy < win.oh; ++oy) {
      for (std::int64_t ox = 0; ox < win.ow; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        std::int64_t count = 0, padded_count = 0;
        for (std::int64_t ky = 0; ky < win.kh; ++ky) {
          const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
          for (std::int64_t kx = 0; kx < win.kw; ++kx) {
            const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
            if (iy >= -win.pt && iy < h + win.pb && ix >= -win.pl && ix < w + win.pr) ++padded_count;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            const float v = src[iy * w + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++count;
          }
        }
        if (!is_max) {
          const std::int64_t denom = include_pad ? padded_count : count;
          acc = denom > 0 ? acc / static_cast<float>(denom) : 0.0f;
        }
        dst[oy * win.ow + ox] = acc;
      }
    }
  }
  return out;
}

Tensor global_pool(const Node& node, const std::vector<const Tensor*>& in, bool is_max) {
  const Tensor& x = float_input(node, in, 0);
  if (x.rank() < 3) op_fail(node, "input rank must be >= 3");
  const std::int64_t n = x.shape[0], c = x.shape[1];
  const std::int64_t spatial = x.size() / (n * c);
  Shape shape = x.shape;
  for (std::size_t d = 2; d < shape.size(); ++d) shape[d] = 1;
  Tensor out = Tensor::zeros(shape);
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.f.data() + plane * spatial;
    if (is_max) {
      out.f[static_cast<std::size_t>(plane)] = *std::max_element(src, src + spatial);
    } else {
      double acc = 0.0;
      for (std::int64_t k = 0; k < spatial; ++k) acc += src[k];
      out.f[static_cast<std::size_t>(plane)] = static_cast<float>(acc / static_cast<double>(spatial));
    }
  }
  return out;
}

Tensor batch_norm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = float_input(node, in, 0);
  const Tensor& scale = float_input(node, in, 1);
  const Tensor& b = float_input(node, in, 2);
  const Tensor& mean = float_input(node, in, 3);
  const Tensor& var = float_input(node, in, 4);
  if (x.rank() < 2) op_fail(node, "input rank must be >= 2");
  const float eps = node.attr_float("epsilon", 1e-5f);
  const std::int64_t n = x.shape[0], c = x.shape[1];
  if (scale.size() != c || b.size() != c || mean.size() != c || var.size() != c) {
    op_fail(node, "parameter length must equal channel count");
  }
  const std::int64_t spatial = x.size() / (n * c);
  Tensor out = x;
  for (std::int64_t bi = 0; bi < n; ++bi) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const auto k = static_cast<std::size_t>(ch);
      const float mul = scale.f[k] / std::sqrt(var.f[k] + eps);
      const float add = b.f[k] - mean.f[k] * mul;
      float* p = out.f.data() + (bi * c + ch) * spatial;
      for (std::int64_t s = 0; s < spatial; ++s) p[s] = p[s] * mul + add;
    }
  }
  return out;
}

Tensor gemm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& a = float_input(node, in, 0);
  const Tensor& b = float_input(node, in, 1);
  const Tensor* c = optional_input(in, 2);
  if (a.rank() != 2 || b.rank() != 2) op_fail(node, "A and B must be rank 2");
  const bool ta = node.attr_int("transA", 0) != 0;
  const bool tb = node.attr_int("transB", 0) != 0;
  const float alpha = node.attr_float("alpha", 1.0f);
  const float beta = node.attr_float("beta", 1.0f);
  const std::int64_t m = ta ? a.shape[1] : a.shape[0];
  const std::int64_t k = ta ? a.shape[0] : a.shape[1];
  const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t n = tb ? b.shape[0] : b.shape[1];
  if (k != kb) op_fail(node, "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(b.shape));
  Tensor out = Tensor::zeros({m, n});
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = ta ? a.f[static_cast<std::size_t>(p * m + i)] : a.f[static_cast<std::size_t>(i * k + p)];
        const float bv = tb ? b.f[static_cast<std::size_t>(j * k + p)] : b.f[static_cast<std::size_t>(p * n + j)];
        acc += av * bv;
      }
      out.f[static_cast<std::size_t>(i * n + j)] = alpha * acc;
    }
  }
  if (c && c->size() > 0) {
    const Shape target{m, n};
    broadcast_shape(node, c->shape, target);
    auto cb = broadcast_apply(std::vector<float>(static_cast<std::size_t>(m * n), 0.0f), target, c->f, c->shape,
                              target, [](float, float y) { return y; });
    for (std::size_t q = 0; q < out.f.size(); ++q) out.f[q] += beta * cb[q];
  }
  return out;
}

Tensor matmul(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& a = float_input(node, in, 0);
  const Tensor& b = float_input(node, in, 1);
  if (a.rank() < 1 || b.rank() < 1) op_fail(node, "scalar operands are not allowed");
  Shape as = a.shape, bs = b.shape;
  const bool a_vec = as.size() == 1, b_vec = bs.size() == 1;
  if (a_vec) as.insert(as.begin(), 1);
  if (b_vec) bs.push_back(1);
  const std::int64_t m = as[as.size() - 2], k = as.back();
  const std::int64_t kb = bs[bs.size() - 2], n = bs.back();
  if (k != kb) op_fail(node, "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(b.shape));
  const Shape a_batch(as.begin(), as.end() - 2), b_batch(bs.begin(), bs.end() - 2);
  const Shape batch = broadcast_shape(node, a_batch, b_batch);
  const std::int64_t nb = num_elements(batch);
  const auto sa = broadcast_strides(a_batch, batch);
  const auto sb = broadcast_strides(b_batch, batch);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out = Tensor::zeros(out_shape);
  for (std::int64_t bi = 0; bi < nb; ++bi) {
    std::int64_t rem = bi, oa = 0, ob = 0;
    for (std::size_t d = batch.size(); d-- > 0;) {
      const std::int64_t idx = rem % batch[d];
      rem /= batch[d];
      oa += idx * sa[d];
      ob += idx * sb[d];
    }
    const float* ap = a.f.data() + oa * m * k;
    const float* bp = b.f.data() + ob * k * n;
    float* op = out.f.data() + bi * m * n;
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = ap[i * k + p];
        for (std::int64_t j = 0; j < n; ++j) op[i * n + j] += av * bp[p * n + j];
      }
  }
  if (a_vec) out.shape.erase(out.shape.end() - 2);
  if (b_vec) out.shape.pop_back();
  return out;
}

Tensor flatten(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor out = required(node, in, 0);
  const auto r = static_cast<std::int64_t>(out.rank());
  std::int64_t axis = node.attr_int("axis", 1);
  if (axis < 0) axis += r;
  if (axis < 0 || axis > r) op_fail(node, "axis out of range");
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= out.shape[static_cast<std::size_t>(d)];
  out.shape = {outer, out.size() / std::max<std::int64_t>(outer, 1)};
  return out;
}

Tensor reshape(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor out = required(node, in, 0);
  const auto target = as_int64s(required(node, in, 1));
  const bool allow_zero = node.attr_int("allowzero", 0) != 0;
  Shape shape(target.size());
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t d = 0; d < target.size(); ++d) {
    std::int64_t v = target[d];
    if (v == 0 && !allow_zero) {
      if (d >= out.rank()) op_fail(node, "0 in shape refers past input rank");
      v = out.shape[d];
    }
    if (v == -1) {
      if (infer >= 0) op_fail(node, "more than one -1 in shape");
      infer = static_cast<int>(d);
      continue;
    }
    shape[d] = v;
    known *= v;
  }
  if (infer >= 0) {
    if (known == 0 || out.size() % known != 0) op_fail(node, "cannot infer -1 dimension");
    shape[static_cast<std::size_t>(infer)] = out.size() / known;
  }
  if (num_elements(shape) != out.size()) {
    op_fail(node, "cannot reshape " + shape_string(out.shape) + " to " + shape_string(shape));
  }
  out.shape = std::move(shape);
  return out;
}

template <typename T>
std::vector<T> permute(const std::vector<T>& src, const Shape& shape, const std::vector<std::int64_t>& perm,
                       Shape& out_shape) {
  const std::size_t rank = shape.size();
  out_shape.resize(rank);
  std::vector<std::int64_t> in_strides(rank, 1);
  for (std::size_t d = rank - 1; d-- > 0;) in_strides[d] = in_strides[d + 1] * shape[d + 1];
  std::vector<std::int64_t> strides(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    out_shape[d] = shape[static_cast<std::size_t>(perm[d])];
    strides[d] = in_strides[static_cast<std::size_t>(perm[d])];
  }
  std::vector<T> out(src.size());
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t off = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = src[static_cast<std::size_t>(off)];
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < out_shape[d]) break;
      off -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor transpose(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = required(node, in, 0);
  auto perm = node.attr_ints("perm");
  if (perm.empty()) {
    perm.resize(x.rank());
    for (std::size_t d = 0; d < x.rank(); ++d) perm[d] = static_cast<std::int64_t>(x.rank() - 1 - d);
  }
  if (perm.size() != x.rank()) op_fail(node, "perm length must equal rank");
  std::vector<bool> seen(x.rank(), false);
  for (auto p : perm) {
    if (p < 0 || p >= static_cast<std::int64_t>(x.rank()) || seen[static_cast<std::size_t>(p)]) {
      op_fail(node, "perm is not a permutation");
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
  Tensor out;
  out.dtype = x.dtype;
  if (x.rank() == 0) return x;
  if (x.dtype == DType::kFloat) out.f = permute(x.f, x.shape, perm, out.shape);
  else out.i = permute(x.i, x.shape, perm, out.shape);
  return out;
}

std::vector<std::int64_t> axes_operand(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  if (const Tensor* t = optional_input(in, k)) return as_int64s(*t);
  return node.attr_ints("axes");
}

Tensor reduce_mean(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = float_input(node, in, 0);
  auto axes = axes_operand(node, in, 1);
  const bool keep = node.attr_int("keepdims", 1) != 0;
  std::vector<bool> reduce(x.rank(), false);
  if (axes.empty()) {
    if (node.attr_int("noop_with_empty_axes", 0) != 0) return x;
    std::fill(reduce.begin(), reduce.end(), true);
  }
  for (auto a : axes) reduce[static_cast<std::size_t>(normalize_axis(node, a, x.rank()))] = true;
  Shape kept_shape = x.shape;
  std::int64_t count = 1;
  for (std::size_t d = 0; d < x.rank(); ++d)
    if (reduce[d]) {
      count *= x.shape[d];
      kept_shape[d] = 1;
    }
  std::vector<double> acc(static_cast<std::size_t>(num_elements(kept_shape)), 0.0);
  const auto strides = broadcast_strides(kept_shape, x.shape);
  std::vector<std::int64_t> idx(x.rank(), 0);
  std::int64_t off = 0;
  for (std::int64_t k = 0; k < x.size(); ++k) {
    acc[static_cast<std::size_t>(off)] += x.f[static_cast<std::size_t>(k)];
    for (std::size_t d = x.rank(); d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < x.shape[d]) break;
      off -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  Tensor out;
  out.f.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out.f[k] = static_cast<float>(acc[k] / static_cast<double>(count));
  if (keep) {
    out.shape = kept_shape;
  } else {
    for (std::size_t d = 0; d < x.rank(); ++d)
      if (!reduce[d]) out.shape.push_back(x.shape[d]);
  }
  return out;
}

Tensor squeeze(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor out = required(node, in, 0);
  auto axes = axes_operand(node, in, 1);
  std::vector<bool> drop(out.rank(), false);
  if (axes.empty()) {
    for (std::size_t d = 0; d < out.rank(); ++d) drop[d] = out.shape[d] == 1;
  }
  for (auto a : axes) {
    const auto d = static_cast<std::size_t>(normalize_axis(node, a, out.rank()));
    if (out.shape[d] != 1) op_fail(node, "cannot squeeze a dimension that is not 1");
    drop[d] = true;
  }
  Shape shape;
  for (std::size_t d = 0; d < out.rank(); ++d)
    if (!drop[d]) shape.push_back(out.shape[d]);
  out.shape = std::move(shape);
  return out;
}

Tensor unsqueeze(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor out = required(node, in, 0);
  auto axes = axes_operand(node, in, 1);
  const std::size_t rank = out.rank() + axes.size();
  std::vector<bool> insert(rank, false);
  for (auto a : axes) insert[static_cast<std::size_t>(normalize_axis(node, a, rank))] = true;
  Shape shape;
  std::size_t src = 0;
  for (std::size_t d = 0; d < rank; ++d) shape.push_back(insert[d] ? 1 : out.shape[src++]);
  out.shape = std::move(shape);
  return out;
}

Tensor concat(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.empty()) op_fail(node, "no inputs");
  const Tensor& first = required(node, in, 0);
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", 0), first.rank()));
  Shape shape = first.shape;
  shape[axis] = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const Tensor& t = required(node, in, k);
    if (t.rank() != first.rank() || t.dtype != first.dtype) op_fail(node, "inputs differ in rank or type");
    for (std::size_t d = 0; d < t.rank(); ++d)
      if (d != axis && t.shape[d] != first.shape[d]) op_fail(node, "inputs differ outside the concat axis");
    shape[axis] += t.shape[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  Tensor out;
  out.dtype = first.dtype;
  out.shape = shape;
  for (std::int64_t o = 0; o < outer; ++o) {
    for (const Tensor* t : in) {
      const std::int64_t chunk = t->shape[axis] * inner;
      if (first.dtype == DType::kFloat)
        out.f.insert(out.f.end(), t->f.begin() + o * chunk, t->f.begin() + (o + 1) * chunk);
      else
        out.i.insert(out.i.end(), t->i.begin() + o * chunk, t->i.begin() + (o + 1) * chunk);
    }
  }
  return out;
}

Tensor gather(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& data = required(node, in, 0);
  const auto indices = as_int64s(required(node, in, 1));
  const Shape idx_shape = required(node, in, 1).shape;
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", 0), data.rank()));
  const std::int64_t dim = data.shape[axis];
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= data.shape[d];
  for (std::size_t d = axis + 1; d < data.rank(); ++d) inner *= data.shape[d];
  Shape shape(data.shape.begin(), data.shape.begin() + static_cast<std::ptrdiff_t>(axis));
  shape.insert(shape.end(), idx_shape.begin(), idx_shape.end());
  shape.insert(shape.end(), data.shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, data.shape.end());
  Tensor out;
  out.dtype = data.dtype;
  out.shape = shape;
  for (std::int64_t o = 0; o < outer; ++o) {
    for (auto raw : indices) {
      const std::int64_t idx = raw < 0 ? raw + dim : raw;
      if (idx < 0 || idx >= dim) op_fail(node, "index out of range");
      const std::int64_t base = (o * dim + idx) * inner;
      if (data.dtype == DType::kFloat) out.f.insert(out.f.end(), data.f.begin() + base, data.f.begin() + base + inner);
      else out.i.insert(out.i.end(), data.i.begin() + base, data.i.begin() + base + inner);
    }
  }
  return out;
}

Tensor constant(const Node& node) {
  if (const auto* a = node.attr("value"); a && a->t) return *a->t;
  if (const auto* a = node.attr("value_float")) return Tensor::floats({}, {a->f});
  if (const auto* a = node.attr("value_floats"))
    return Tensor::floats({static_cast<std::int64_t>(a->floats.size())}, a->floats);
  if (const auto* a = node.attr("value_int")) return Tensor::int64s({}, {a->i});
  if (const auto* a = node.attr("value_ints"))
    return Tensor::int64s({static_cast<std::int64_t>(a->ints.size())}, a->ints);
  fail(ErrorCode::kCapability, "Constant '" + node.name + "': unsupported value attribute");
}

Tensor clip(const Node& node, const std::vector<const Tensor*>& in) {
  // opset < 11 carries bounds as attributes, later opsets as inputs.
  float lo = node.attr_float("min", -std::numeric_limits<float>::infinity());
  float hi = node.attr_float("max", std::numeric_limits<float>::infinity());
  if (const Tensor* t = optional_input(in, 1); t && !t->f.empty()) lo = t->f[0];
  if (const Tensor* t = optional_input(in, 2); t && !t->f.empty()) hi = t->f[0];
  return unary(node, in, [lo, hi](float v) { return std::min(std::max(v, lo), hi); });
}

const std::vector<std::string> kSupported = {
    "Add", "AveragePool", "BatchNormalization", "Clip", "Concat", "Constant", "Conv", "Div", "Flatten",
    "Gather", "Gemm", "GlobalAveragePool", "GlobalMaxPool", "HardSigmoid", "HardSwish", "Identity",
    "LeakyRelu", "MatMul", "MaxPool", "Mul", "ReduceMean", "Relu", "Reshape", "Shape", "Sigmoid",
    "Squeeze", "Sub", "Tanh", "Transpose", "Unsqueeze",
};

}  // namespace

const std::vector<std::string>& supported_ops() { return kSupported; }

bool is_supported_op(const std::string& op_type) {
  return std::find(kSupported.begin(), kSupported.end(), op_type) != kSupported.end();
}

std::vector<Tensor> run_node(const Node& node, const std::vector<const Tensor*>& in) {
  const std::string& op = node.op_type;
  if (op == "Conv") return {conv(node, in)};
  if (op == "Relu") return {unary(node, in, [](float v) { return v > 0.0f ? v : 0.0f; })};
  if (op == "LeakyRelu") {
    const float alpha = node.attr_float("alpha", 0.01f);
    return {unary(node, in, [alpha](float v) { return v >= 0.0f ? v : alpha * v; })};
  }
  if (op == "Sigmoid") return {unary(node, in, [](float v) { return 1.0f / (1.0f + std::exp(-v)); })};
  if (op == "Tanh") return {unary(node, in, [](float v) { return std::tanh(v); })};
  if (op == "HardSigmoid") {
    const float alpha = node.attr_float("alpha", 0.2f);
    const float beta = node.attr_float("beta", 0.5f);
    return {unary(node, in, [=](float v) { return std::max(0.0f, std::min(1.0f, alpha * v + beta)); })};
  }
  if (op == "HardSwish") {
    return {unary(node, in, [](float v) { return v * std::max(0.0f, std::min(1.0f, v / 6.0f + 0.5f)); })};
  }
  if (op == "Clip") return {clip(node, in)};
  if (op == "Add") return {binary(node, in, std::plus<float>(), std::plus<std::int64_t>())};
  if (op == "Sub") return {binary(node, in, std::minus<float>(), std::minus<std::int64_t>())};
  if (op == "Mul") return {binary(node, in, std::multiplies<float>(), std::multiplies<std::int64_t>())};
  if (op == "Div") {
    return {binary(node, in, std::divides<float>(), [&node](std::int64_t a, std::int64_t b) {
      if (b == 0) op_fail(node, "integer division by zero");
      return a / b;
    })};
  }
  if (op == "MatMul") return {matmul(node, in)};
  if (op == "Gemm") return {gemm(node, in)};
  if (op == "MaxPool") return {pool(node, in, true)};
  if (op == "AveragePool") return {pool(node, in, false)};
  if (op == "GlobalAveragePool") return {global_pool(node, in, false)};
  if (op == "GlobalMaxPool") return {global_pool(node, in, true)};
  if (op == "BatchNormalization") return {batch_norm(node, in)};
  if (op == "Flatten") return {flatten(node, in)};
  if (op == "Reshape") return {reshape(node, in)};
  if (op == "Transpose") return {transpose(node, in)};
  if (op == "ReduceMean") return {reduce_mean(node, in)};
  if (op == "Squeeze") return {squeeze(node, in)};
  if (op == "Unsqueeze") return {unsqueeze(node, in)};
  if (op == "Concat") return {concat(node, in)};
  if (op == "Gather") return {gather(node, in)};
  if (op == "Identity") return {required(node, in, 0)};
  if (op == "Constant") return {constant(node)};
  if (op == "Shape") {
    const Tensor& x = required(node, in, 0);
    return {Tensor::int64s({static_cast<std::int64_t>(x.rank())}, x.shape)};
  }
  fail(ErrorCode::kCapability, "unsupported operator " + op);
}

}  // namespace wssv::inference
