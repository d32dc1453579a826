#include "rmpc/policy.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace rmpc {

namespace {

using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;
using ConstVecMap = Eigen::Map<const Vec>;
using MutVecMap = Eigen::Map<Vec>;

ConstMap mat_of(const Vec& flat, const ParamBlock& b) {
  return ConstMap(flat.data() + b.offset, b.rows, b.cols);
}
MutMap mat_of(Vec& flat, const ParamBlock& b) {
  return MutMap(flat.data() + b.offset, b.rows, b.cols);
}
ConstVecMap vec_of(const Vec& flat, const ParamBlock& b) {
  return ConstVecMap(flat.data() + b.offset, b.rows);
}
MutVecMap vec_of(Vec& flat, const ParamBlock& b) {
  return MutVecMap(flat.data() + b.offset, b.rows);
}

Vec sigmoid(const Vec& v) { return (1.0 + (-v.array()).exp()).inverse().matrix(); }

}  // namespace

std::string to_string(CellKind kind) { return kind == CellKind::gated ? "gated" : "simple"; }

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "gated") return CellKind::gated;
  if (s == "simple") return CellKind::simple;
  throw std::invalid_argument("unknown cell kind '" + s + "'");
}

Policy::Policy(PolicyArchitecture arch, int state_dim, int ref_dim, int output_dim,
               InputNormalization norm)
    : arch_(std::move(arch)),
      state_dim_(state_dim),
      ref_dim_(ref_dim),
      output_dim_(output_dim),
      norm_(std::move(norm)) {
  assert(arch_.valid());
  assert(state_dim_ >= 1 && ref_dim_ >= 1 && output_dim_ >= 1);
  assert(arch_.output_scale.size() == output_dim_);
  assert(norm_.center.size() == input_dim() && norm_.halfwidth.size() == input_dim());
  assert((norm_.halfwidth.array() > 0).all());

  const Eigen::Index q = arch_.hidden;
  Eigen::Index off = 0;
  auto push = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back({name, off, rows, cols});
    off += rows * (cols > 0 ? cols : 1);
  };
  for (int l = 0; l < arch_.depth; ++l) {
    const Eigen::Index d = l == 0 ? input_dim() : q;
    const std::string tag = std::to_string(l);
    if (arch_.cell == CellKind::gated) {
      push("Wz" + tag, q, d);
      push("Uz" + tag, q, q);
      push("bz" + tag, q, 0);
      push("Wr" + tag, q, d);
      push("Ur" + tag, q, q);
      push("br" + tag, q, 0);
      push("Wg" + tag, q, d);
      push("Ug" + tag, q, q);
      push("bg" + tag, q, 0);
    } else {
      push("W" + tag, q, d);
      push("U" + tag, q, q);
      push("b" + tag, q, 0);
    }
  }
  push("Wy", output_dim_, q);
  push("by", output_dim_, 0);
  param_count_ = off;
}

int Policy::per_layer_blocks() const { return arch_.cell == CellKind::gated ? 9 : 3; }

const ParamBlock& Policy::layer_block(int layer, int which) const {
  return blocks_[static_cast<std::size_t>(layer) * per_layer_blocks() + which];
}

const ParamBlock& Policy::head_w() const { return blocks_[blocks_.size() - 2]; }
const ParamBlock& Policy::head_b() const { return blocks_.back(); }

Vec Policy::init_params(std::uint64_t seed, double scale) const {
  Rng rng(seed);
  Vec flat = Vec::Zero(param_count_);
  for (const ParamBlock& b : blocks_) {
    if (b.cols == 0) continue; // biases stay zero
    const double s = scale / std::sqrt(static_cast<double>(b.cols));
    for (Eigen::Index i = 0; i < b.size(); ++i) flat[b.offset + i] = rng.uniform(-s, s);
  }
  return flat;
}

std::vector<Vec> Policy::zero_hidden() const {
  return std::vector<Vec>(arch_.depth, Vec::Zero(arch_.hidden));
}

Vec Policy::cycle(const Vec& params, const Vec& x0, double r, std::vector<Vec>& h) const {
  assert(params.size() == param_count_);
  assert(x0.size() == state_dim_);
  assert(static_cast<int>(h.size()) == arch_.depth);

  Vec raw(input_dim());
  raw.head(state_dim_) = x0;
  raw[state_dim_] = r;
  Vec a = norm_.apply(raw);

  for (int l = 0; l < arch_.depth; ++l) {
    const Vec& hp = h[l];
    if (arch_.cell == CellKind::gated) {
      Vec z = sigmoid(mat_of(params, layer_block(l, 0)) * a +
                      mat_of(params, layer_block(l, 1)) * hp + vec_of(params, layer_block(l, 2)));
      Vec rr = sigmoid(mat_of(params, layer_block(l, 3)) * a +
                       mat_of(params, layer_block(l, 4)) * hp + vec_of(params, layer_block(l, 5)));
      Vec g = (mat_of(params, layer_block(l, 6)) * a +
               mat_of(params, layer_block(l, 7)) * hp.cwiseProduct(rr) +
               vec_of(params, layer_block(l, 8)))
                  .array()
                  .tanh()
                  .matrix();
      h[l] = (Vec::Ones(arch_.hidden) - z).cwiseProduct(g) + z.cwiseProduct(hp);
    } else {
      Vec pre = mat_of(params, layer_block(l, 0)) * a + mat_of(params, layer_block(l, 1)) * hp +
                vec_of(params, layer_block(l, 2));
      h[l] = pre.cwiseMax(0.0);
    }
    a = h[l];
  }
  return output_from_hidden(params, h.back());
}

Vec Policy::output_from_hidden(const Vec& params, const Vec& h_top) const {
  Vec y = (mat_of(params, head_w()) * h_top + vec_of(params, head_b())).array().tanh().matrix();
  return arch_.output_scale.cwiseProduct(y);
}

Vec Policy::forward(const Vec& params, const Vec& x0, const Eigen::Ref<const Vec>& window,
                    PolicyTrace* trace) const {
  assert(params.size() == param_count_);
  assert(x0.size() == state_dim_);
  const int c = static_cast<int>(window.size());
  assert(c >= 1);

  const Eigen::Index q = arch_.hidden;
  if (trace) {
    trace->x0 = x0;
    trace->cycles.clear();
    trace->cycles.reserve(c);
  }

  Vec raw(input_dim());
  raw.head(state_dim_) = x0;
  raw[state_dim_] = 0.0;
  Vec v = norm_.apply(raw); // reference slot rewritten per cycle

  std::vector<Vec> h = zero_hidden();
  for (int t = 0; t < c; ++t) {
    v[state_dim_] = (window[t] - norm_.center[state_dim_]) / norm_.halfwidth[state_dim_];
    CycleTrace cyc;
    if (trace) {
      cyc.input = v;
      cyc.h.resize(arch_.depth);
      if (arch_.cell == CellKind::gated) {
        cyc.z.resize(arch_.depth);
        cyc.r.resize(arch_.depth);
        cyc.g.resize(arch_.depth);
      }
    }
    const Vec* a = &v;
    for (int l = 0; l < arch_.depth; ++l) {
      const Vec& hp = h[l];
      if (arch_.cell == CellKind::gated) {
        Vec z = sigmoid(mat_of(params, layer_block(l, 0)) * (*a) +
                        mat_of(params, layer_block(l, 1)) * hp +
                        vec_of(params, layer_block(l, 2)));
        Vec rr = sigmoid(mat_of(params, layer_block(l, 3)) * (*a) +
                         mat_of(params, layer_block(l, 4)) * hp +
                         vec_of(params, layer_block(l, 5)));
        Vec g = (mat_of(params, layer_block(l, 6)) * (*a) +
                 mat_of(params, layer_block(l, 7)) * hp.cwiseProduct(rr) +
                 vec_of(params, layer_block(l, 8)))
                    .array()
                    .tanh()
                    .matrix();
        Vec hn = (Vec::Ones(q) - z).cwiseProduct(g) + z.cwiseProduct(hp);
        if (trace) {
          cyc.z[l] = std::move(z);
          cyc.r[l] = std::move(rr);
          cyc.g[l] = std::move(g);
        }
        h[l] = std::move(hn);
      } else {
        Vec pre = mat_of(params, layer_block(l, 0)) * (*a) +
                  mat_of(params, layer_block(l, 1)) * hp + vec_of(params, layer_block(l, 2));
        h[l] = pre.cwiseMax(0.0);
      }
      if (trace) cyc.h[l] = h[l];
      a = &h[l];
    }
    if (trace) trace->cycles.push_back(std::move(cyc));
  }

  Vec y = (mat_of(params, head_w()) * h.back() + vec_of(params, head_b())).array().tanh().matrix();
  Vec u = arch_.output_scale.cwiseProduct(y);
  if (trace) {
    trace->y_raw = y;
    trace->u = u;
  }
  return u;
}

void Policy::backward(const Vec& params, const PolicyTrace& trace, const Vec& upstream,
                      Vec& grad_params, Vec& grad_x0) const {
  assert(params.size() == param_count_);
  assert(grad_params.size() == param_count_);
  assert(upstream.size() == output_dim_);
  const int c = static_cast<int>(trace.cycles.size());
  assert(c >= 1);
  const Eigen::Index q = arch_.hidden;

  // Head: u = scale .* tanh(Wy h + by).
  Vec dy_pre =
      upstream.cwiseProduct(arch_.output_scale)
          .cwiseProduct((Vec::Ones(output_dim_) - trace.y_raw.cwiseProduct(trace.y_raw)));
  const Vec& h_last = trace.cycles.back().h[arch_.depth - 1];
  mat_of(grad_params, head_w()).noalias() += dy_pre * h_last.transpose();
  vec_of(grad_params, head_b()) += dy_pre;

  // carry[l] = dL/d h_t^l arriving from cycle t+1 (and the head at t=c).
  std::vector<Vec> carry(arch_.depth, Vec::Zero(q));
  carry[arch_.depth - 1].noalias() = mat_of(params, head_w()).transpose() * dy_pre;

  Vec dv_accum = Vec::Zero(input_dim());
  const Vec zero_h = Vec::Zero(q);

  for (int t = c - 1; t >= 0; --t) {
    const CycleTrace& cyc = trace.cycles[t];
    Vec da_above; // input gradient emitted by the layer above
    for (int l = arch_.depth - 1; l >= 0; --l) {
      Vec dh = std::move(carry[l]);
      if (l < arch_.depth - 1) dh += da_above;
      const Vec& a = l == 0 ? cyc.input : cyc.h[l - 1];
      const Vec& hp = t == 0 ? zero_h : trace.cycles[t - 1].h[l];

      if (arch_.cell == CellKind::gated) {
        const Vec& z = cyc.z[l];
        const Vec& rr = cyc.r[l];
        const Vec& g = cyc.g[l];
        Vec dz = dh.cwiseProduct(hp - g);
        Vec dzpre = dz.cwiseProduct(z).cwiseProduct(Vec::Ones(q) - z);
        Vec dg = dh.cwiseProduct(Vec::Ones(q) - z);
        Vec dgpre = dg.cwiseProduct(Vec::Ones(q) - g.cwiseProduct(g));
        Vec dhp = dh.cwiseProduct(z);

        mat_of(grad_params, layer_block(l, 6)).noalias() += dgpre * a.transpose();
        mat_of(grad_params, layer_block(l, 7)).noalias() +=
            dgpre * hp.cwiseProduct(rr).transpose();
        vec_of(grad_params, layer_block(l, 8)) += dgpre;

        Vec drh = mat_of(params, layer_block(l, 7)).transpose() * dgpre;
        dhp += drh.cwiseProduct(rr);
        Vec dr = drh.cwiseProduct(hp);
        Vec drpre = dr.cwiseProduct(rr).cwiseProduct(Vec::Ones(q) - rr);

        mat_of(grad_params, layer_block(l, 3)).noalias() += drpre * a.transpose();
        mat_of(grad_params, layer_block(l, 4)).noalias() += drpre * hp.transpose();
        vec_of(grad_params, layer_block(l, 5)) += drpre;
        dhp.noalias() += mat_of(params, layer_block(l, 4)).transpose() * drpre;

        mat_of(grad_params, layer_block(l, 0)).noalias() += dzpre * a.transpose();
        mat_of(grad_params, layer_block(l, 1)).noalias() += dzpre * hp.transpose();
        vec_of(grad_params, layer_block(l, 2)) += dzpre;
        dhp.noalias() += mat_of(params, layer_block(l, 1)).transpose() * dzpre;

        Vec da = mat_of(params, layer_block(l, 0)).transpose() * dzpre;
        da.noalias() += mat_of(params, layer_block(l, 3)).transpose() * drpre;
        da.noalias() += mat_of(params, layer_block(l, 6)).transpose() * dgpre;

        carry[l] = std::move(dhp);
        if (l == 0)
          dv_accum += da;
        else
          da_above = std::move(da);
      } else {
        // h = relu(W a + U hp + b); post-activation > 0 iff pre > 0.
        Vec dpre = dh.cwiseProduct((cyc.h[l].array() > 0.0).cast<double>().matrix());
        mat_of(grad_params, layer_block(l, 0)).noalias() += dpre * a.transpose();
        mat_of(grad_params, layer_block(l, 1)).noalias() += dpre * hp.transpose();
        vec_of(grad_params, layer_block(l, 2)) += dpre;
        carry[l].noalias() = mat_of(params, layer_block(l, 1)).transpose() * dpre;
        Vec da = mat_of(params, layer_block(l, 0)).transpose() * dpre;
        if (l == 0)
          dv_accum += da;
        else
          da_above = std::move(da);
      }
    }
  }

  grad_x0 = dv_accum.head(state_dim_).cwiseQuotient(norm_.halfwidth.head(state_dim_));
}

}  // namespace rmpc
