#include "hint/decision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hint {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

Eigen::MatrixXd reverse_cols(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = x.col(x.cols() - 1 - c);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

PoolResult kmax_pool(const Eigen::MatrixXd& rows, int k) {
  if (k < 1) throw std::invalid_argument("pool size must be >= 1");
  const int n = static_cast<int>(rows.rows());
  const int dims = static_cast<int>(rows.cols());
  PoolResult out;
  out.values = Eigen::MatrixXd::Zero(k, dims);
  out.src = Eigen::MatrixXi::Constant(k, dims, -1);

  std::vector<int> order(n);
  const int take = std::min(k, n);
  for (int c = 0; c < dims; ++c) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](int a, int b) {
                        if (rows(a, c) != rows(b, c)) return rows(a, c) > rows(b, c);
                        return a < b;
                      });
    for (int r = 0; r < take; ++r) {
      out.values(r, c) = rows(order[r], c);
      out.src(r, c) = order[r];
    }
  }
  return out;
}

Eigen::VectorXd flatten_pool(const Eigen::MatrixXd& values) {
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

void pool_backward(const PoolResult& pool, const Eigen::VectorXd& dflat,
                   Eigen::MatrixXd& drows) {
  const int k = static_cast<int>(pool.values.rows());
  const int dims = static_cast<int>(pool.values.cols());
  if (dflat.size() != static_cast<Eigen::Index>(k) * dims)
    throw std::invalid_argument("dflat size mismatch");
  for (int c = 0; c < dims; ++c)
    for (int r = 0; r < k; ++r) {
      int s = pool.src(r, c);
      if (s >= 0) drows(s, c) += dflat(c * k + r);
    }
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmParams LstmParams::zeros(int hidden_dim, int input_dim) {
  LstmParams p;
  auto zm = [&](int r, int c) { return Eigen::MatrixXd::Zero(r, c); };
  auto zv = [&](int n) { return Eigen::VectorXd::Zero(n); };
  p.W_i = zm(hidden_dim, input_dim);
  p.W_f = zm(hidden_dim, input_dim);
  p.W_c = zm(hidden_dim, input_dim);
  p.W_o = zm(hidden_dim, input_dim);
  p.U_i = zm(hidden_dim, hidden_dim);
  p.U_f = zm(hidden_dim, hidden_dim);
  p.U_c = zm(hidden_dim, hidden_dim);
  p.U_o = zm(hidden_dim, hidden_dim);
  p.b_i = zv(hidden_dim);
  p.b_f = zv(hidden_dim);
  p.b_c = zv(hidden_dim);
  p.b_o = zv(hidden_dim);
  return p;
}

Eigen::MatrixXd lstm_forward(const Eigen::MatrixXd& x, const LstmParams& p,
                             LstmCache* cache) {
  if (x.rows() != p.input_dim())
    throw std::invalid_argument("lstm input dim mismatch");
  const int d = p.hidden_dim();
  const int steps = static_cast<int>(x.cols());
  Eigen::MatrixXd i(d, steps), f(d, steps), o(d, steps), g(d, steps);
  Eigen::MatrixXd c(d, steps), tc(d, steps), h(d, steps);

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd xi = p.W_i * x.col(t) + p.U_i * h_prev + p.b_i;
    Eigen::VectorXd xf = p.W_f * x.col(t) + p.U_f * h_prev + p.b_f;
    Eigen::VectorXd xo = p.W_o * x.col(t) + p.U_o * h_prev + p.b_o;
    Eigen::VectorXd xg = p.W_c * x.col(t) + p.U_c * h_prev + p.b_c;
    for (int r = 0; r < d; ++r) {
      i(r, t) = sigmoid(xi(r));
      f(r, t) = sigmoid(xf(r));
      o(r, t) = sigmoid(xo(r));
      g(r, t) = std::tanh(xg(r));
    }
    c.col(t) = f.col(t).cwiseProduct(c_prev) + i.col(t).cwiseProduct(g.col(t));
    tc.col(t) = c.col(t).array().tanh();
    h.col(t) = o.col(t).cwiseProduct(tc.col(t));
    h_prev = h.col(t);
    c_prev = c.col(t);
  }
  if (cache) {
    cache->steps = steps;
    cache->x = x;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = std::move(c);
    cache->tc = std::move(tc);
    cache->h = h;
  }
  return h;
}

void lstm_backward(const LstmParams& p, const LstmCache& cache,
                   const Eigen::MatrixXd& dh_in, LstmParams& grads,
                   Eigen::MatrixXd& dx) {
  const int d = p.hidden_dim();
  const int steps = cache.steps;
  if (dh_in.rows() != d || dh_in.cols() != steps)
    throw std::invalid_argument("dh shape mismatch");

  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(d);
  for (int t = steps - 1; t >= 0; --t) {
    Eigen::VectorXd dh = dh_in.col(t) + dh_next;
    Eigen::VectorXd i = cache.i.col(t), f = cache.f.col(t), o = cache.o.col(t);
    Eigen::VectorXd g = cache.g.col(t), tc = cache.tc.col(t);
    Eigen::VectorXd c_prev =
        t > 0 ? Eigen::VectorXd(cache.c.col(t - 1)) : Eigen::VectorXd::Zero(d);
    Eigen::VectorXd h_prev =
        t > 0 ? Eigen::VectorXd(cache.h.col(t - 1)) : Eigen::VectorXd::Zero(d);

    Eigen::VectorXd do_ = dh.cwiseProduct(tc);
    Eigen::VectorXd dc =
        dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) +
        dc_next;
    Eigen::VectorXd df = dc.cwiseProduct(c_prev);
    Eigen::VectorXd di = dc.cwiseProduct(g);
    Eigen::VectorXd dg = dc.cwiseProduct(i);
    dc_next = dc.cwiseProduct(f);

    Eigen::VectorXd dpi = i.cwiseProduct((1.0 - i.array()).matrix()).cwiseProduct(di);
    Eigen::VectorXd dpf = f.cwiseProduct((1.0 - f.array()).matrix()).cwiseProduct(df);
    Eigen::VectorXd dpo =
        o.cwiseProduct((1.0 - o.array()).matrix()).cwiseProduct(do_);
    Eigen::VectorXd dpg = (1.0 - g.array().square()).matrix().cwiseProduct(dg);

    const Eigen::VectorXd xt = cache.x.col(t);
    grads.W_i += dpi * xt.transpose();
    grads.W_f += dpf * xt.transpose();
    grads.W_o += dpo * xt.transpose();
    grads.W_c += dpg * xt.transpose();
    grads.U_i += dpi * h_prev.transpose();
    grads.U_f += dpf * h_prev.transpose();
    grads.U_o += dpo * h_prev.transpose();
    grads.U_c += dpg * h_prev.transpose();
    grads.b_i += dpi;
    grads.b_f += dpf;
    grads.b_o += dpo;
    grads.b_c += dpg;

    dx.col(t) += p.W_i.transpose() * dpi + p.W_f.transpose() * dpf +
                 p.W_o.transpose() * dpo + p.W_c.transpose() * dpg;
    dh_next = p.U_i.transpose() * dpi + p.U_f.transpose() * dpf +
              p.U_o.transpose() * dpo + p.U_c.transpose() * dpg;
  }
}

// ---------------------------------------------------------------------------
// Decision layer
// ---------------------------------------------------------------------------

int scorer_input_dim(const DecisionConfig& config, int signal_dim, int lstm_dim) {
  switch (config.variant) {
    case Variant::kIndependent:
      return config.k * signal_dim;
    case Variant::kAccumulative:
      return config.k * (config.ad_pool == AdPool::kConcat ? 2 * lstm_dim : lstm_dim);
    case Variant::kHybrid:
      return config.k * lstm_dim;
  }
  return 0;
}

namespace {

double scorer_forward(const ScorerParams& sc, const Eigen::VectorXd& flat,
                      Eigen::VectorXd* hidden_act) {
  if (sc.hidden == 0) {
    if (sc.w.size() != flat.size())
      throw std::invalid_argument("scorer width mismatch");
    return sc.w.dot(flat) + sc.b;
  }
  if (sc.W1.cols() != flat.size())
    throw std::invalid_argument("scorer width mismatch");
  Eigen::VectorXd a = ((sc.W1 * flat + sc.b1).array().tanh()).matrix();
  double score = sc.w2.dot(a) + sc.b2;
  if (hidden_act) *hidden_act = std::move(a);
  return score;
}

Eigen::VectorXd scorer_backward(const ScorerParams& sc, const Eigen::VectorXd& flat,
                                const Eigen::VectorXd& hidden_act, double dscore,
                                ScorerParams& grads) {
  if (sc.hidden == 0) {
    grads.w += dscore * flat;
    grads.b += dscore;
    return dscore * sc.w;
  }
  grads.w2 += dscore * hidden_act;
  grads.b2 += dscore;
  Eigen::VectorXd da = dscore * sc.w2;
  Eigen::VectorXd dpre =
      (1.0 - hidden_act.array().square()).matrix().cwiseProduct(da);
  grads.W1 += dpre * flat.transpose();
  grads.b1 += dpre;
  return sc.W1.transpose() * dpre;
}

}  // namespace

double score_decision(const Eigen::MatrixXd& signals, const DecisionConfig& config,
                      const DecisionParams& params, DecisionCache* cache) {
  const int T = static_cast<int>(signals.cols());
  if (T == 0) throw std::invalid_argument("no passage signals to score");

  DecisionCache local;
  DecisionCache& cc = cache ? *cache : local;

  Eigen::MatrixXd cand_rows;
  switch (config.variant) {
    case Variant::kIndependent: {
      cand_rows = signals.transpose();
      break;
    }
    case Variant::kAccumulative: {
      const int d = params.fwd.hidden_dim();
      Eigen::MatrixXd hf = lstm_forward(signals, params.fwd, &cc.fwd);
      Eigen::MatrixXd hr = lstm_forward(reverse_cols(signals), params.rev, &cc.rev);
      if (config.ad_pool == AdPool::kUnion) {
        cand_rows.resize(2 * T, d);
        for (int t = 0; t < T; ++t) cand_rows.row(t) = hf.col(t).transpose();
        for (int s = 0; s < T; ++s) cand_rows.row(T + s) = hr.col(s).transpose();
      } else {
        cand_rows.resize(T, 2 * d);
        for (int t = 0; t < T; ++t) {
          cand_rows.row(t).head(d) = hf.col(t).transpose();
          cand_rows.row(t).tail(d) = hr.col(T - 1 - t).transpose();
        }
      }
      break;
    }
    case Variant::kHybrid: {
      const int d = params.fwd.hidden_dim();
      cc.v = ((params.hybrid.W_v * signals).colwise() + params.hybrid.b_v)
                 .array()
                 .tanh()
                 .matrix();
      Eigen::MatrixXd hf = lstm_forward(signals, params.fwd, &cc.fwd);
      Eigen::MatrixXd hr = lstm_forward(reverse_cols(signals), params.rev, &cc.rev);
      cand_rows.resize(3 * T, d);
      for (int t = 0; t < T; ++t) cand_rows.row(t) = cc.v.col(t).transpose();
      for (int t = 0; t < T; ++t) cand_rows.row(T + t) = hf.col(t).transpose();
      for (int s = 0; s < T; ++s) cand_rows.row(2 * T + s) = hr.col(s).transpose();
      break;
    }
  }

  cc.pool = kmax_pool(cand_rows, config.k);
  cc.flat = flatten_pool(cc.pool.values);
  cc.cand_rows = std::move(cand_rows);
  return scorer_forward(params.scorer, cc.flat, &cc.hidden_act);
}

void decision_backward(const Eigen::MatrixXd& signals, const DecisionConfig& config,
                       const DecisionParams& params, const DecisionCache& cache,
                       double dscore, DecisionParams& grads,
                       Eigen::MatrixXd& dsignals) {
  const int T = static_cast<int>(signals.cols());
  Eigen::VectorXd dflat =
      scorer_backward(params.scorer, cache.flat, cache.hidden_act, dscore,
                      grads.scorer);
  Eigen::MatrixXd dcand = Eigen::MatrixXd::Zero(cache.cand_rows.rows(),
                                                cache.cand_rows.cols());
  pool_backward(cache.pool, dflat, dcand);

  switch (config.variant) {
    case Variant::kIndependent: {
      dsignals += dcand.transpose();
      return;
    }
    case Variant::kAccumulative: {
      const int d = params.fwd.hidden_dim();
      Eigen::MatrixXd dhf = Eigen::MatrixXd::Zero(d, T);
      Eigen::MatrixXd dhr = Eigen::MatrixXd::Zero(d, T);
      if (config.ad_pool == AdPool::kUnion) {
        for (int t = 0; t < T; ++t) dhf.col(t) = dcand.row(t).transpose();
        for (int s = 0; s < T; ++s) dhr.col(s) = dcand.row(T + s).transpose();
      } else {
        for (int t = 0; t < T; ++t) {
          dhf.col(t) = dcand.row(t).head(d).transpose();
          dhr.col(T - 1 - t) = dcand.row(t).tail(d).transpose();
        }
      }
      lstm_backward(params.fwd, cache.fwd, dhf, grads.fwd, dsignals);
      Eigen::MatrixXd dxrev = Eigen::MatrixXd::Zero(signals.rows(), T);
      lstm_backward(params.rev, cache.rev, dhr, grads.rev, dxrev);
      for (int t = 0; t < T; ++t) dsignals.col(t) += dxrev.col(T - 1 - t);
      return;
    }
    case Variant::kHybrid: {
      const int d = params.fwd.hidden_dim();
      Eigen::MatrixXd dv(d, T), dhf(d, T), dhr(d, T);
      for (int t = 0; t < T; ++t) {
        dv.col(t) = dcand.row(t).transpose();
        dhf.col(t) = dcand.row(T + t).transpose();
        dhr.col(t) = dcand.row(2 * T + t).transpose();
      }
      Eigen::MatrixXd dpre_v =
          (1.0 - cache.v.array().square()).matrix().cwiseProduct(dv);
      grads.hybrid.W_v += dpre_v * signals.transpose();
      grads.hybrid.b_v += dpre_v.rowwise().sum();
      dsignals += params.hybrid.W_v.transpose() * dpre_v;
      lstm_backward(params.fwd, cache.fwd, dhf, grads.fwd, dsignals);
      Eigen::MatrixXd dxrev = Eigen::MatrixXd::Zero(signals.rows(), T);
      lstm_backward(params.rev, cache.rev, dhr, grads.rev, dxrev);
      for (int t = 0; t < T; ++t) dsignals.col(t) += dxrev.col(T - 1 - t);
      return;
    }
  }
}

}  // namespace hint
