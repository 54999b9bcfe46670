#include "hint/sgru.hpp"

#include <cmath>
#include <stdexcept>

namespace hint {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

// Cell input for position (i, j).
inline void fill_input(const MatchTensor& t, const Eigen::MatrixXd& m, bool with_xy,
                       int i, int j, Eigen::VectorXd& s) {
  if (with_xy) {
    s(0) = t.x(i);
    s(1) = t.y(j);
    s(2) = m(i, j);
  } else {
    s(0) = m(i, j);
  }
}

struct CellView {
  int d;
  const Eigen::MatrixXd& h;
  Eigen::VectorXd zero;

  CellView(int d_, const Eigen::MatrixXd& h_) : d(d_), h(h_), zero(Eigen::VectorXd::Zero(d_)) {}

  // Neighbor state with zero vectors outside the grid.
  Eigen::VectorXd at(int i, int j, int cols) const {
    if (i < 0 || j < 0) return zero;
    return h.col(i * cols + j);
  }
};

void check_dims(const MatchTensor& t, bool with_xy, const SpatialGruParams& p) {
  const int want = with_xy ? 3 : 1;
  if (p.input_dim() != want)
    throw std::invalid_argument("cell input dim " + std::to_string(p.input_dim()) +
                                " does not match mode (want " +
                                std::to_string(want) + ")");
  const int d = p.hidden_dim();
  if (p.q_dim() != 3 * d + want)
    throw std::invalid_argument("gate input dim mismatch");
  if (t.real_rows > t.rows() || t.real_cols > t.cols())
    throw std::invalid_argument("real block exceeds tensor");
}

}  // namespace

SpatialGruParams SpatialGruParams::zeros(int hidden_dim, int input_dim) {
  SpatialGruParams p;
  const int q_dim = 3 * hidden_dim + input_dim;
  auto zm = [&](int r, int c) { return Eigen::MatrixXd::Zero(r, c); };
  auto zv = [&](int n) { return Eigen::VectorXd::Zero(n); };
  p.Wr_l = zm(hidden_dim, q_dim);
  p.Wr_t = zm(hidden_dim, q_dim);
  p.Wr_d = zm(hidden_dim, q_dim);
  p.br_l = zv(hidden_dim);
  p.br_t = zv(hidden_dim);
  p.br_d = zv(hidden_dim);
  p.Wz_i = zm(hidden_dim, q_dim);
  p.Wz_l = zm(hidden_dim, q_dim);
  p.Wz_t = zm(hidden_dim, q_dim);
  p.Wz_d = zm(hidden_dim, q_dim);
  p.bz_i = zv(hidden_dim);
  p.bz_l = zv(hidden_dim);
  p.bz_t = zv(hidden_dim);
  p.bz_d = zv(hidden_dim);
  p.W = zm(hidden_dim, input_dim);
  p.U = zm(hidden_dim, 3 * hidden_dim);
  p.b = zv(hidden_dim);
  return p;
}

Eigen::VectorXd sgru_forward(const MatchTensor& t, Channel channel, bool with_xy,
                             const SpatialGruParams& p, ScanOrder order,
                             SgruCache* cache) {
  check_dims(t, with_xy, p);
  const int d = p.hidden_dim();
  const int in_dim = p.input_dim();
  const int rows = t.real_rows, cols = t.real_cols;
  if (rows == 0 || cols == 0) {
    if (cache) *cache = SgruCache{};
    return Eigen::VectorXd::Zero(d);
  }

  const Eigen::MatrixXd& m = t.channel(channel);
  const int n = rows * cols;
  Eigen::MatrixXd h(d, n), rgrid(3 * d, n), zgrid(4 * d, n), cgrid(d, n);
  CellView view(d, h);

  Eigen::VectorXd s(in_dim), q(3 * d + in_dim), gated(3 * d);
  Eigen::VectorXd r_l(d), r_t(d), r_d(d);
  Eigen::VectorXd zp_i(d), zp_l(d), zp_t(d), zp_d(d);

  auto run_cell = [&](int i, int j) {
    const int at = i * cols + j;
    Eigen::VectorXd top = view.at(i - 1, j, cols);
    Eigen::VectorXd left = view.at(i, j - 1, cols);
    Eigen::VectorXd diag = view.at(i - 1, j - 1, cols);
    fill_input(t, m, with_xy, i, j, s);

    q.segment(0, d) = top;
    q.segment(d, d) = left;
    q.segment(2 * d, d) = diag;
    q.segment(3 * d, in_dim) = s;

    r_l = p.Wr_l * q + p.br_l;
    r_t = p.Wr_t * q + p.br_t;
    r_d = p.Wr_d * q + p.br_d;
    for (int c = 0; c < d; ++c) {
      r_l(c) = sigmoid(r_l(c));
      r_t(c) = sigmoid(r_t(c));
      r_d(c) = sigmoid(r_d(c));
    }

    zp_i = p.Wz_i * q + p.bz_i;
    zp_l = p.Wz_l * q + p.bz_l;
    zp_t = p.Wz_t * q + p.bz_t;
    zp_d = p.Wz_d * q + p.bz_d;
    // Per-dimension softmax over the four gates.
    for (int c = 0; c < d; ++c) {
      double mx = std::max(std::max(zp_i(c), zp_l(c)), std::max(zp_t(c), zp_d(c)));
      double ei = std::exp(zp_i(c) - mx), el = std::exp(zp_l(c) - mx);
      double et = std::exp(zp_t(c) - mx), ed = std::exp(zp_d(c) - mx);
      double sum = ei + el + et + ed;
      zgrid(c, at) = ei / sum;
      zgrid(d + c, at) = el / sum;
      zgrid(2 * d + c, at) = et / sum;
      zgrid(3 * d + c, at) = ed / sum;
    }

    gated.segment(0, d) = r_l.cwiseProduct(left);
    gated.segment(d, d) = r_t.cwiseProduct(top);
    gated.segment(2 * d, d) = r_d.cwiseProduct(diag);

    Eigen::VectorXd cand = (p.W * s + p.U * gated + p.b).array().tanh().matrix();

    h.col(at) = zgrid.col(at).segment(d, d).cwiseProduct(left) +
                zgrid.col(at).segment(2 * d, d).cwiseProduct(top) +
                zgrid.col(at).segment(3 * d, d).cwiseProduct(diag) +
                zgrid.col(at).segment(0, d).cwiseProduct(cand);

    rgrid.col(at).segment(0, d) = r_l;
    rgrid.col(at).segment(d, d) = r_t;
    rgrid.col(at).segment(2 * d, d) = r_d;
    cgrid.col(at) = cand;
  };

  if (order == ScanOrder::kRowMajor) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) run_cell(i, j);
  } else {
    for (int dsum = 0; dsum <= rows + cols - 2; ++dsum) {
      int i_lo = std::max(0, dsum - cols + 1);
      int i_hi = std::min(rows - 1, dsum);
      for (int i = i_lo; i <= i_hi; ++i) run_cell(i, dsum - i);
    }
  }

  Eigen::VectorXd signal = h.col(n - 1);
  if (cache) {
    cache->rows = rows;
    cache->cols = cols;
    cache->h = std::move(h);
    cache->r = std::move(rgrid);
    cache->z = std::move(zgrid);
    cache->cand = std::move(cgrid);
  }
  return signal;
}

void sgru_backward(const MatchTensor& t, Channel channel, bool with_xy,
                   const SpatialGruParams& p, const SgruCache& cache,
                   const Eigen::VectorXd& de, SpatialGruParams& grads,
                   Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  check_dims(t, with_xy, p);
  const int rows = cache.rows, cols = cache.cols;
  if (rows == 0 || cols == 0 || de.size() == 0) return;
  const int d = p.hidden_dim();
  const int in_dim = p.input_dim();
  const Eigen::MatrixXd& m = t.channel(channel);
  const int n = rows * cols;

  Eigen::MatrixXd dh_grid = Eigen::MatrixXd::Zero(d, n);
  dh_grid.col(n - 1) = de;

  CellView view(d, cache.h);
  Eigen::VectorXd s(in_dim), q(3 * d + in_dim), gated(3 * d);

  for (int i = rows - 1; i >= 0; --i) {
    for (int j = cols - 1; j >= 0; --j) {
      const int at = i * cols + j;
      Eigen::VectorXd dh = dh_grid.col(at);
      if (dh.isZero(0.0)) continue;

      Eigen::VectorXd top = view.at(i - 1, j, cols);
      Eigen::VectorXd left = view.at(i, j - 1, cols);
      Eigen::VectorXd diag = view.at(i - 1, j - 1, cols);
      fill_input(t, m, with_xy, i, j, s);

      q.segment(0, d) = top;
      q.segment(d, d) = left;
      q.segment(2 * d, d) = diag;
      q.segment(3 * d, in_dim) = s;

      Eigen::VectorXd z_i = cache.z.block(0, at, d, 1);
      Eigen::VectorXd z_l = cache.z.block(d, at, d, 1);
      Eigen::VectorXd z_t = cache.z.block(2 * d, at, d, 1);
      Eigen::VectorXd z_d = cache.z.block(3 * d, at, d, 1);
      Eigen::VectorXd r_l = cache.r.block(0, at, d, 1);
      Eigen::VectorXd r_t = cache.r.block(d, at, d, 1);
      Eigen::VectorXd r_d = cache.r.block(2 * d, at, d, 1);
      Eigen::VectorXd cand = cache.cand.col(at);

      // Mixing step.
      Eigen::VectorXd dz_i = dh.cwiseProduct(cand);
      Eigen::VectorXd dz_l = dh.cwiseProduct(left);
      Eigen::VectorXd dz_t = dh.cwiseProduct(top);
      Eigen::VectorXd dz_d = dh.cwiseProduct(diag);
      Eigen::VectorXd dcand = dh.cwiseProduct(z_i);
      Eigen::VectorXd dleft = dh.cwiseProduct(z_l);
      Eigen::VectorXd dtop = dh.cwiseProduct(z_t);
      Eigen::VectorXd ddiag = dh.cwiseProduct(z_d);

      // Candidate tanh.
      gated.segment(0, d) = r_l.cwiseProduct(left);
      gated.segment(d, d) = r_t.cwiseProduct(top);
      gated.segment(2 * d, d) = r_d.cwiseProduct(diag);
      Eigen::VectorXd da =
          (1.0 - cand.array().square()).matrix().cwiseProduct(dcand);
      grads.W += da * s.transpose();
      grads.U += da * gated.transpose();
      grads.b += da;
      Eigen::VectorXd dgated = p.U.transpose() * da;
      Eigen::VectorXd ds = p.W.transpose() * da;

      // Reset-gated predecessors.
      Eigen::VectorXd g_l = dgated.segment(0, d);
      Eigen::VectorXd g_t = dgated.segment(d, d);
      Eigen::VectorXd g_d = dgated.segment(2 * d, d);
      Eigen::VectorXd dr_l = g_l.cwiseProduct(left);
      Eigen::VectorXd dr_t = g_t.cwiseProduct(top);
      Eigen::VectorXd dr_d = g_d.cwiseProduct(diag);
      dleft += g_l.cwiseProduct(r_l);
      dtop += g_t.cwiseProduct(r_t);
      ddiag += g_d.cwiseProduct(r_d);

      Eigen::VectorXd dq = Eigen::VectorXd::Zero(3 * d + in_dim);

      // Reset sigmoids.
      Eigen::VectorXd dpre;
      dpre = r_l.cwiseProduct((1.0 - r_l.array()).matrix()).cwiseProduct(dr_l);
      grads.Wr_l += dpre * q.transpose();
      grads.br_l += dpre;
      dq += p.Wr_l.transpose() * dpre;
      dpre = r_t.cwiseProduct((1.0 - r_t.array()).matrix()).cwiseProduct(dr_t);
      grads.Wr_t += dpre * q.transpose();
      grads.br_t += dpre;
      dq += p.Wr_t.transpose() * dpre;
      dpre = r_d.cwiseProduct((1.0 - r_d.array()).matrix()).cwiseProduct(dr_d);
      grads.Wr_d += dpre * q.transpose();
      grads.br_d += dpre;
      dq += p.Wr_d.transpose() * dpre;

      // Update-gate softmax: dz'_g = z_g . (dz_g - sum_g' dz_g' z_g').
      Eigen::VectorXd dot = dz_i.cwiseProduct(z_i) + dz_l.cwiseProduct(z_l) +
                            dz_t.cwiseProduct(z_t) + dz_d.cwiseProduct(z_d);
      Eigen::VectorXd dzp;
      dzp = z_i.cwiseProduct(dz_i - dot);
      grads.Wz_i += dzp * q.transpose();
      grads.bz_i += dzp;
      dq += p.Wz_i.transpose() * dzp;
      dzp = z_l.cwiseProduct(dz_l - dot);
      grads.Wz_l += dzp * q.transpose();
      grads.bz_l += dzp;
      dq += p.Wz_l.transpose() * dzp;
      dzp = z_t.cwiseProduct(dz_t - dot);
      grads.Wz_t += dzp * q.transpose();
      grads.bz_t += dzp;
      dq += p.Wz_t.transpose() * dzp;
      dzp = z_d.cwiseProduct(dz_d - dot);
      grads.Wz_d += dzp * q.transpose();
      grads.bz_d += dzp;
      dq += p.Wz_d.transpose() * dzp;

      // Gate-input split mirrors the forward layout [top; left; diag; s].
      dtop += dq.segment(0, d);
      dleft += dq.segment(d, d);
      ddiag += dq.segment(2 * d, d);
      ds += dq.segment(3 * d, in_dim);

      if (j > 0) dh_grid.col(at - 1) += dleft;
      if (i > 0) dh_grid.col(at - cols) += dtop;
      if (i > 0 && j > 0) dh_grid.col(at - cols - 1) += ddiag;

      if (with_xy) {
        dx(i) += ds(0);
        dy(j) += ds(1);
      }
      // The interaction value itself is a function of frozen embeddings
      // only, so ds for it has no consumer.
    }
  }
}

}  // namespace hint
