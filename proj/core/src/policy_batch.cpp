#include "rmpc/policy_batch.hpp"

#include <cassert>
#include <cmath>

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

}  // namespace

Mat BatchPolicy::forward(const Vec& params, const Mat& x0, const Mat& window, Trace& trace) const {
  const Policy& p = p_;
  const int n = p.state_dim();
  const int depth = p.arch().depth;
  const Eigen::Index q = p.arch().hidden;
  const Eigen::Index bsz = x0.cols();
  const int c = static_cast<int>(window.rows());
  assert(x0.rows() == n);
  assert(window.cols() == bsz);
  assert(c >= 1);

  const InputNormalization& norm = p.normalization();
  Mat xn = (x0.colwise() - norm.center.head(n)).array().colwise() /
           norm.halfwidth.head(n).array();
  const double rc = norm.center[n];
  const double rh = norm.halfwidth[n];

  trace.cycles.assign(c, {});

  std::vector<Mat> h(depth, Mat::Zero(q, bsz));
  const bool gated = p.arch().cell == CellKind::gated;

  for (int t = 0; t < c; ++t) {
    CycleTrace& cyc = trace.cycles[t];
    cyc.input.resize(n + 1, bsz);
    cyc.input.topRows(n) = xn;
    cyc.input.row(n) = (window.row(t).array() - rc) / rh;
    cyc.h.resize(depth);
    if (gated) {
      cyc.z.resize(depth);
      cyc.r.resize(depth);
      cyc.g.resize(depth);
    }

    const Mat* a = &cyc.input;
    for (int l = 0; l < depth; ++l) {
      const Mat& hp = h[l];
      if (gated) {
        Mat z = mat_of(params, p.layer_block(l, 0)) * (*a);
        z.noalias() += mat_of(params, p.layer_block(l, 1)) * hp;
        z.colwise() += vec_of(params, p.layer_block(l, 2));
        z = (1.0 + (-z.array()).exp()).inverse();

        Mat r = mat_of(params, p.layer_block(l, 3)) * (*a);
        r.noalias() += mat_of(params, p.layer_block(l, 4)) * hp;
        r.colwise() += vec_of(params, p.layer_block(l, 5));
        r = (1.0 + (-r.array()).exp()).inverse();

        Mat g = mat_of(params, p.layer_block(l, 6)) * (*a);
        g.noalias() += mat_of(params, p.layer_block(l, 7)) * hp.cwiseProduct(r);
        g.colwise() += vec_of(params, p.layer_block(l, 8));
        g = g.array().tanh();

        h[l] = (1.0 - z.array()) * g.array() + z.array() * hp.array();
        cyc.z[l] = std::move(z);
        cyc.r[l] = std::move(r);
        cyc.g[l] = std::move(g);
      } else {
        Mat pre = mat_of(params, p.layer_block(l, 0)) * (*a);
        pre.noalias() += mat_of(params, p.layer_block(l, 1)) * hp;
        pre.colwise() += vec_of(params, p.layer_block(l, 2));
        h[l] = pre.cwiseMax(0.0);
      }
      cyc.h[l] = h[l];
      a = &cyc.h[l];
    }
  }

  Mat y = mat_of(params, p.head_w()) * h.back();
  y.colwise() += vec_of(params, p.head_b());
  y = y.array().tanh();
  trace.y_raw = y;
  trace.u = y.array().colwise() * p.arch().output_scale.array();
  return trace.u;
}

void BatchPolicy::backward(const Vec& params, const Trace& trace, const Mat& upstream,
                           Vec& grad_params, Mat& grad_x0) const {
  const Policy& p = p_;
  const int n = p.state_dim();
  const int depth = p.arch().depth;
  const Eigen::Index q = p.arch().hidden;
  const int c = static_cast<int>(trace.cycles.size());
  const Eigen::Index bsz = upstream.cols();
  assert(grad_params.size() == p.param_count());
  const bool gated = p.arch().cell == CellKind::gated;

  Mat dy_pre = (upstream.array().colwise() * p.arch().output_scale.array()) *
               (1.0 - trace.y_raw.array().square());
  const Mat& h_last = trace.cycles.back().h[depth - 1];
  mat_of(grad_params, p.head_w()).noalias() += dy_pre * h_last.transpose();
  vec_of(grad_params, p.head_b()) += dy_pre.rowwise().sum();

  std::vector<Mat> carry(depth, Mat::Zero(q, bsz));
  carry[depth - 1].noalias() = mat_of(params, p.head_w()).transpose() * dy_pre;

  Mat dv_x = Mat::Zero(n, bsz);
  const Mat zero_h = Mat::Zero(q, bsz);

  Mat da_above;
  for (int t = c - 1; t >= 0; --t) {
    const CycleTrace& cyc = trace.cycles[t];
    for (int l = depth - 1; l >= 0; --l) {
      Mat dh = std::move(carry[l]);
      if (l < depth - 1) dh += da_above;
      const Mat& a = l == 0 ? cyc.input : cyc.h[l - 1];
      const Mat& hp = t == 0 ? zero_h : trace.cycles[t - 1].h[l];

      Mat da;
      if (gated) {
        const Mat& z = cyc.z[l];
        const Mat& r = cyc.r[l];
        const Mat& g = cyc.g[l];
        Mat dzpre = dh.array() * (hp.array() - g.array()) * z.array() * (1.0 - z.array());
        Mat dgpre = dh.array() * (1.0 - z.array()) * (1.0 - g.array().square());
        Mat dhp = dh.cwiseProduct(z);

        mat_of(grad_params, p.layer_block(l, 6)).noalias() += dgpre * a.transpose();
        mat_of(grad_params, p.layer_block(l, 7)).noalias() +=
            dgpre * hp.cwiseProduct(r).transpose();
        vec_of(grad_params, p.layer_block(l, 8)) += dgpre.rowwise().sum();

        Mat drh = mat_of(params, p.layer_block(l, 7)).transpose() * dgpre;
        dhp += drh.cwiseProduct(r);
        Mat drpre = drh.array() * hp.array() * r.array() * (1.0 - r.array());

        mat_of(grad_params, p.layer_block(l, 3)).noalias() += drpre * a.transpose();
        mat_of(grad_params, p.layer_block(l, 4)).noalias() += drpre * hp.transpose();
        vec_of(grad_params, p.layer_block(l, 5)) += drpre.rowwise().sum();
        dhp.noalias() += mat_of(params, p.layer_block(l, 4)).transpose() * drpre;

        mat_of(grad_params, p.layer_block(l, 0)).noalias() += dzpre * a.transpose();
        mat_of(grad_params, p.layer_block(l, 1)).noalias() += dzpre * hp.transpose();
        vec_of(grad_params, p.layer_block(l, 2)) += dzpre.rowwise().sum();
        dhp.noalias() += mat_of(params, p.layer_block(l, 1)).transpose() * dzpre;

        da.noalias() = mat_of(params, p.layer_block(l, 0)).transpose() * dzpre;
        da.noalias() += mat_of(params, p.layer_block(l, 3)).transpose() * drpre;
        da.noalias() += mat_of(params, p.layer_block(l, 6)).transpose() * dgpre;

        carry[l] = std::move(dhp);
      } else {
        Mat dpre = dh.array() * (cyc.h[l].array() > 0.0).cast<double>();
        mat_of(grad_params, p.layer_block(l, 0)).noalias() += dpre * a.transpose();
        mat_of(grad_params, p.layer_block(l, 1)).noalias() += dpre * hp.transpose();
        vec_of(grad_params, p.layer_block(l, 2)) += dpre.rowwise().sum();
        carry[l].noalias() = mat_of(params, p.layer_block(l, 1)).transpose() * dpre;
        da.noalias() = mat_of(params, p.layer_block(l, 0)).transpose() * dpre;
      }

      if (l == 0)
        dv_x += da.topRows(n);
      else
        da_above = std::move(da);
    }
  }

  grad_x0 = dv_x.array().colwise() / p.normalization().halfwidth.head(n).array();
}

}  // namespace rmpc
