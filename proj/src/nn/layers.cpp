#include "cathseg/nn/layers.hpp"

#include <cmath>

namespace cathseg::nn {

Shape4 conv2d_output_shape(const Shape4& input, const Shape4& kernel, ConvGeometry g) {
  if (g.stride < 1 || g.pad < 0) throw std::invalid_argument("conv2d: stride must be >= 1 and pad >= 0");
  if (input.c != kernel.c)
    throw std::invalid_argument("conv2d: input has " + std::to_string(input.c) + " channels, kernel expects " +
                                std::to_string(kernel.c));
  const int hp = input.h + 2 * g.pad - kernel.h, wp = input.w + 2 * g.pad - kernel.w;
  if (hp < 0 || wp < 0) throw std::invalid_argument("conv2d: kernel larger than padded input");
  return {input.n, kernel.n, hp / g.stride + 1, wp / g.stride + 1};
}

Shape4 transposed_conv2d_output_shape(const Shape4& input, const Shape4& kernel, ConvGeometry g) {
  if (g.stride < 1 || g.pad < 0) throw std::invalid_argument("transposed_conv2d: stride must be >= 1 and pad >= 0");
  if (input.c != kernel.n)
    throw std::invalid_argument("transposed_conv2d: input has " + std::to_string(input.c) +
                                " channels, kernel expects " + std::to_string(kernel.n));
  const Shape4 out{input.n, kernel.c, (input.h - 1) * g.stride + kernel.h - 2 * g.pad,
                   (input.w - 1) * g.stride + kernel.w - 2 * g.pad};
  if (out.h <= 0 || out.w <= 0) throw std::invalid_argument("transposed_conv2d: empty output");
  return out;
}

namespace {

template <typename Scalar>
using Matrix = typename Tensor4<Scalar>::Matrix;

// Unfolds one sample (C, H, W) into (C*kh*kw, Ho*Wo) patch columns.
template <typename Scalar>
void im2col(const Scalar* x, int channels, int h, int w, int kh, int kw, ConvGeometry g, int ho, int wo,
            Matrix<Scalar>& cols) {
  cols.resize(Eigen::Index(channels) * kh * kw, Eigen::Index(ho) * wo);
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        Scalar* row = cols.data() + ((Eigen::Index(c) * kh + ky) * kw + kx) * cols.cols();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          Scalar* dst = row + Eigen::Index(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, Scalar(0));
            continue;
          }
          const Scalar* src = x + (Eigen::Index(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : Scalar(0);
          }
        }
      }
}

// Adjoint of im2col: scatters patch columns back, accumulating into x.
template <typename Scalar>
void col2im(const Matrix<Scalar>& cols, int channels, int h, int w, int kh, int kw, ConvGeometry g, int ho, int wo,
            Scalar* x) {
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const Scalar* row = cols.data() + ((Eigen::Index(c) * kh + ky) * kw + kx) * cols.cols();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= h) continue;
          const Scalar* src = row + Eigen::Index(oy) * wo;
          Scalar* dst = x + (Eigen::Index(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
}

template <typename Scalar>
bool is_pointwise(const Shape4& k, ConvGeometry g) {
  return k.h == 1 && k.w == 1 && g.stride == 1 && g.pad == 0;
}

template <typename Scalar>
void check_bias(const ConvParams<Scalar>& p, int out_channels, const char* op) {
  if (p.bias.size() != out_channels) throw std::invalid_argument(std::string(op) + ": bias size mismatch");
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, ConvGeometry g) {
  const Shape4 ks = p.kernel.shape();
  const Shape4 os = conv2d_output_shape(x.shape(), ks, g);
  check_bias(p, ks.n, "conv2d");
  Tensor4<Scalar> out(os);
  const typename Tensor4<Scalar>::ConstMatrixMap kmat(p.kernel.data(), ks.n, Eigen::Index(ks.c) * ks.h * ks.w);
  Matrix<Scalar> cols;
  for (int b = 0; b < os.n; ++b) {
    auto ob = out.sample(b);
    if (is_pointwise<Scalar>(ks, g)) {
      ob.noalias() = kmat * x.sample(b);
    } else {
      im2col(x.data() + x.offset(b, 0, 0, 0), ks.c, x.height(), x.width(), ks.h, ks.w, g, os.h, os.w, cols);
      ob.noalias() = kmat * cols;
    }
    ob.colwise() += p.bias.matrix();
  }
  return out;
}

template <typename Scalar>
ConvGradients<Scalar> conv2d_backward(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, ConvGeometry g,
                                      const Tensor4<Scalar>& grad_out) {
  const Shape4 ks = p.kernel.shape();
  const Shape4 os = conv2d_output_shape(x.shape(), ks, g);
  if (!(grad_out.shape() == os)) throw std::invalid_argument("conv2d_backward: grad_out shape mismatch");
  ConvGradients<Scalar> grads{Tensor4<Scalar>(x.shape()), Tensor4<Scalar>(ks), Vector<Scalar>::Zero(ks.n)};
  const Eigen::Index patch = Eigen::Index(ks.c) * ks.h * ks.w;
  const typename Tensor4<Scalar>::ConstMatrixMap kmat(p.kernel.data(), ks.n, patch);
  typename Tensor4<Scalar>::MatrixMap gk(grads.kernel.data(), ks.n, patch);
  Matrix<Scalar> cols, gcols;
  for (int b = 0; b < os.n; ++b) {
    const auto gb = grad_out.sample(b);
    grads.bias += gb.rowwise().sum().array();
    if (is_pointwise<Scalar>(ks, g)) {
      gk.noalias() += gb * x.sample(b).transpose();
      grads.input.sample(b).noalias() = kmat.transpose() * gb;
    } else {
      im2col(x.data() + x.offset(b, 0, 0, 0), ks.c, x.height(), x.width(), ks.h, ks.w, g, os.h, os.w, cols);
      gk.noalias() += gb * cols.transpose();
      gcols.noalias() = kmat.transpose() * gb;
      col2im(gcols, ks.c, x.height(), x.width(), ks.h, ks.w, g, os.h, os.w,
             grads.input.data() + grads.input.offset(b, 0, 0, 0));
    }
  }
  return grads;
}

template <typename Scalar>
Tensor4<Scalar> transposed_conv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, ConvGeometry g) {
  const Shape4 ks = p.kernel.shape();
  const Shape4 os = transposed_conv2d_output_shape(x.shape(), ks, g);
  check_bias(p, ks.c, "transposed_conv2d");
  Tensor4<Scalar> out(os);
  const Eigen::Index patch = Eigen::Index(ks.c) * ks.h * ks.w;
  const typename Tensor4<Scalar>::ConstMatrixMap kmat(p.kernel.data(), ks.n, patch);
  Matrix<Scalar> cols;
  for (int b = 0; b < os.n; ++b) {
    cols.noalias() = kmat.transpose() * x.sample(b);
    col2im(cols, ks.c, os.h, os.w, ks.h, ks.w, g, x.height(), x.width(), out.data() + out.offset(b, 0, 0, 0));
    out.sample(b).colwise() += p.bias.matrix();
  }
  return out;
}

template <typename Scalar>
ConvGradients<Scalar> transposed_conv2d_backward(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p,
                                                 ConvGeometry g, const Tensor4<Scalar>& grad_out) {
  const Shape4 ks = p.kernel.shape();
  const Shape4 os = transposed_conv2d_output_shape(x.shape(), ks, g);
  if (!(grad_out.shape() == os)) throw std::invalid_argument("transposed_conv2d_backward: grad_out shape mismatch");
  ConvGradients<Scalar> grads{Tensor4<Scalar>(x.shape()), Tensor4<Scalar>(ks), Vector<Scalar>::Zero(ks.c)};
  const Eigen::Index patch = Eigen::Index(ks.c) * ks.h * ks.w;
  const typename Tensor4<Scalar>::ConstMatrixMap kmat(p.kernel.data(), ks.n, patch);
  typename Tensor4<Scalar>::MatrixMap gk(grads.kernel.data(), ks.n, patch);
  Matrix<Scalar> gcols;
  for (int b = 0; b < os.n; ++b) {
    const auto gb = grad_out.sample(b);
    grads.bias += gb.rowwise().sum().array();
    im2col(grad_out.data() + grad_out.offset(b, 0, 0, 0), ks.c, os.h, os.w, ks.h, ks.w, g, x.height(), x.width(),
           gcols);
    grads.input.sample(b).noalias() = kmat * gcols;
    gk.noalias() += x.sample(b) * gcols.transpose();
  }
  return grads;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Scalar>
void check_channels(const Tensor4<Scalar>& x, const BatchNormParams<Scalar>& p) {
  if (x.channels() != p.channels() || p.beta.size() != p.gamma.size() || p.running_mean.size() != p.gamma.size() ||
      p.running_var.size() != p.gamma.size())
    throw std::invalid_argument("batchnorm: channel count mismatch");
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar> batchnorm(const Tensor4<Scalar>& x, BatchNormParams<Scalar>& p, Mode mode,
                          BatchNormCache<Scalar>* cache, BatchNormSettings s) {
  check_channels(x, p);
  const Shape4 sh = x.shape();
  const Eigen::Index plane = sh.plane();
  const double count = static_cast<double>(sh.n) * static_cast<double>(plane);
  Vector<double> mean(sh.c), inv_std(sh.c);

  if (mode == Mode::train) {
    if (count < 1) throw std::invalid_argument("batchnorm: empty batch");
    for (int c = 0; c < sh.c; ++c) {
      double sum = 0.0;
      for (int b = 0; b < sh.n; ++b) sum += x.sample(b).row(c).template cast<double>().sum();
      const double m = sum / count;
      double sq = 0.0;
      for (int b = 0; b < sh.n; ++b) sq += (x.sample(b).row(c).template cast<double>().array() - m).square().sum();
      const double var = sq / count;
      mean(c) = m;
      inv_std(c) = 1.0 / std::sqrt(var + s.epsilon);
      p.running_mean(c) = static_cast<Scalar>(s.momentum * p.running_mean(c) + (1.0 - s.momentum) * m);
      p.running_var(c) = static_cast<Scalar>(s.momentum * p.running_var(c) + (1.0 - s.momentum) * var);
    }
  } else {
    mean = p.running_mean.template cast<double>();
    inv_std = 1.0 / (p.running_var.template cast<double>() + s.epsilon).sqrt();
  }

  Tensor4<Scalar> normalized(sh), out(sh);
  for (int b = 0; b < sh.n; ++b)
    for (int c = 0; c < sh.c; ++c) {
      auto xn = normalized.sample(b).row(c).array();
      xn = (x.sample(b).row(c).array() - static_cast<Scalar>(mean(c))) * static_cast<Scalar>(inv_std(c));
      out.sample(b).row(c).array() = xn * p.gamma(c) + p.beta(c);
    }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> batchnorm_infer(const Tensor4<Scalar>& x, const BatchNormParams<Scalar>& p, BatchNormSettings s) {
  check_channels(x, p);
  Tensor4<Scalar> out(x.shape());
  for (int c = 0; c < x.channels(); ++c) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(p.running_var(c)) + s.epsilon);
    const auto scale = static_cast<Scalar>(p.gamma(c) * inv_std);
    const auto shift = static_cast<Scalar>(p.beta(c) - p.running_mean(c) * p.gamma(c) * inv_std);
    for (int b = 0; b < x.batch(); ++b) out.sample(b).row(c).array() = x.sample(b).row(c).array() * scale + shift;
  }
  return out;
}

template <typename Scalar>
BatchNormGradients<Scalar> batchnorm_backward(const Tensor4<Scalar>& grad_out, const BatchNormParams<Scalar>& p,
                                              const BatchNormCache<Scalar>& cache) {
  const Shape4 sh = grad_out.shape();
  if (!(cache.normalized.shape() == sh)) throw std::invalid_argument("batchnorm_backward: shape mismatch");
  BatchNormGradients<Scalar> grads{Tensor4<Scalar>(sh), Vector<Scalar>::Zero(sh.c), Vector<Scalar>::Zero(sh.c)};
  const double count = static_cast<double>(sh.n) * static_cast<double>(sh.plane());
  for (int c = 0; c < sh.c; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < sh.n; ++b) {
      const auto g = grad_out.sample(b).row(c).template cast<double>().array();
      sum_g += g.sum();
      sum_gx += (g * cache.normalized.sample(b).row(c).template cast<double>().array()).sum();
    }
    grads.gamma(c) = static_cast<Scalar>(sum_gx);
    grads.beta(c) = static_cast<Scalar>(sum_g);
    const double gamma = static_cast<double>(p.gamma(c));
    const double inv_std = cache.inv_std(c);
    for (int b = 0; b < sh.n; ++b) {
      const auto g = grad_out.sample(b).row(c).template cast<double>().array();
      auto gi = grads.input.sample(b).row(c).array();
      if (cache.mode == Mode::train) {
        const auto xn = cache.normalized.sample(b).row(c).template cast<double>().array();
        gi = (gamma * inv_std / count * (count * g - sum_g - xn * sum_gx)).template cast<Scalar>();
      } else {
        gi = (gamma * inv_std * g).template cast<Scalar>();
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& x) {
  return Tensor4<Scalar>(x.shape(), x.array().max(Scalar(0)));
}

template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& x, const Tensor4<Scalar>& grad_out) {
  return Tensor4<Scalar>(x.shape(), (x.array() > Scalar(0)).select(grad_out.array(), Scalar(0)));
}

template <typename Scalar>
DropoutResult<Scalar> dropout(const Tensor4<Scalar>& x, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return {x, Tensor4<Scalar>(x.shape(), Scalar(1))};
  Tensor4<Scalar> mask(x.shape());
  const auto keep = static_cast<Scalar>(1.0 / (1.0 - rate));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.array()(i) = uniform(rng) < rate ? Scalar(0) : keep;
  return {Tensor4<Scalar>(x.shape(), x.array() * mask.array()), std::move(mask)};
}

template <typename Scalar>
Tensor4<Scalar> sigmoid(const Tensor4<Scalar>& x) {
  return Tensor4<Scalar>(x.shape(), Scalar(1) / (Scalar(1) + (-x.array()).exp()));
}

template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& y, const Tensor4<Scalar>& grad_out) {
  return Tensor4<Scalar>(y.shape(), grad_out.array() * y.array() * (Scalar(1) - y.array()));
}

template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("concat_channels: " + a.shape().str() + " vs " + b.shape().str());
  Tensor4<Scalar> out(Shape4{a.batch(), a.channels() + b.channels(), a.height(), a.width()});
  for (int n = 0; n < a.batch(); ++n) {
    out.sample(n).topRows(a.channels()) = a.sample(n);
    out.sample(n).bottomRows(b.channels()) = b.sample(n);
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> slice_channels(const Tensor4<Scalar>& x, int first, int count) {
  if (first < 0 || count < 0 || first + count > x.channels()) throw std::invalid_argument("slice_channels: out of range");
  Tensor4<Scalar> out(Shape4{x.batch(), count, x.height(), x.width()});
  for (int n = 0; n < x.batch(); ++n) out.sample(n) = x.sample(n).middleRows(first, count);
  return out;
}

#define CATHSEG_INSTANTIATE_LAYERS(S)                                                                          \
  template Tensor4<S> conv2d(const Tensor4<S>&, const ConvParams<S>&, ConvGeometry);                            \
  template ConvGradients<S> conv2d_backward(const Tensor4<S>&, const ConvParams<S>&, ConvGeometry,              \
                                            const Tensor4<S>&);                                                 \
  template Tensor4<S> transposed_conv2d(const Tensor4<S>&, const ConvParams<S>&, ConvGeometry);                 \
  template ConvGradients<S> transposed_conv2d_backward(const Tensor4<S>&, const ConvParams<S>&, ConvGeometry,   \
                                                       const Tensor4<S>&);                                      \
  template Tensor4<S> batchnorm(const Tensor4<S>&, BatchNormParams<S>&, Mode, BatchNormCache<S>*,               \
                                BatchNormSettings);                                                             \
  template Tensor4<S> batchnorm_infer(const Tensor4<S>&, const BatchNormParams<S>&, BatchNormSettings);         \
  template BatchNormGradients<S> batchnorm_backward(const Tensor4<S>&, const BatchNormParams<S>&,               \
                                                    const BatchNormCache<S>&);                                  \
  template Tensor4<S> relu(const Tensor4<S>&);                                                                  \
  template Tensor4<S> relu_backward(const Tensor4<S>&, const Tensor4<S>&);                                      \
  template DropoutResult<S> dropout(const Tensor4<S>&, double, Rng&, Mode);                                     \
  template Tensor4<S> sigmoid(const Tensor4<S>&);                                                               \
  template Tensor4<S> sigmoid_backward(const Tensor4<S>&, const Tensor4<S>&);                                   \
  template Tensor4<S> concat_channels(const Tensor4<S>&, const Tensor4<S>&);                                    \
  template Tensor4<S> slice_channels(const Tensor4<S>&, int, int);

CATHSEG_INSTANTIATE_LAYERS(float)
CATHSEG_INSTANTIATE_LAYERS(double)

}  // namespace cathseg::nn
