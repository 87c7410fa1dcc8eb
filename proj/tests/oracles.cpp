#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace oracle {

double gaussian_mmd2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double bandwidth) {
  auto k = [bandwidth](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    double d2 = 0.0;
    for (Eigen::Index t = 0; t < a.size(); ++t) d2 += (a[t] - b[t]) * (a[t] - b[t]);
    return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
  };
  const auto m = x.rows();
  const auto n = y.rows();
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) xx += k(x.row(i), x.row(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) yy += k(y.row(i), y.row(j));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) xy += k(x.row(i), y.row(j));
  return xx / double(m * (m - 1)) + yy / double(n * (n - 1)) - 2.0 * xy / double(m * n);
}

double multi_kernel_mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                        const std::vector<double>& bandwidths) {
  double s = 0.0;
  for (double b : bandwidths) s += gaussian_mmd2(x, y, b);
  return std::max(0.0, s / double(bandwidths.size()));
}

double assignment_w2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  std::vector<int> perm(static_cast<std::size_t>(x.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      c += (x.row(Eigen::Index(i)) - y.row(perm[i])).squaredNorm();
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / double(x.rows()));
}

double ks_statistic(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pts = x;
  pts.insert(pts.end(), y.begin(), y.end());
  double d = 0.0;
  for (double t : pts) {
    const double fx = double(std::count_if(x.begin(), x.end(), [t](double v) { return v <= t; })) / x.size();
    const double fy = double(std::count_if(y.begin(), y.end(), [t](double v) { return v <= t; })) / y.size();
    d = std::max(d, std::abs(fx - fy));
  }
  return d;
}

double permutation_ks_pvalue(const std::vector<double>& x, const std::vector<double>& y,
                             int resamples, std::uint64_t seed) {
  const double observed = ks_statistic(x, y);
  std::vector<double> pool = x;
  pool.insert(pool.end(), y.begin(), y.end());
  std::mt19937_64 gen(seed);
  int hits = 0;
  for (int r = 0; r < resamples; ++r) {
    std::shuffle(pool.begin(), pool.end(), gen);
    const std::vector<double> a(pool.begin(), pool.begin() + long(x.size()));
    const std::vector<double> b(pool.begin() + long(x.size()), pool.end());
    // Tolerance absorbs the rounding of i/n - j/m.
    if (ks_statistic(a, b) >= observed - 1e-12) ++hits;
  }
  return double(hits) / resamples;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

std::vector<double> plain_ce_descent(clreg::ToyEncoder enc, const std::vector<CePhase>& phases,
                                     double eta) {
  const std::size_t depth = enc.layers.size();
  std::vector<double> losses;
  for (const CePhase& phase : phases) {
    const auto n = phase.inputs.rows();
    for (int step = 0; step < phase.steps; ++step) {
      std::vector<Eigen::MatrixXd> gw(depth);
      std::vector<Eigen::VectorXd> gb(depth);
      for (std::size_t l = 0; l < depth; ++l) {
        gw[l] = Eigen::MatrixXd::Zero(enc.layers[l].weight.rows(), enc.layers[l].weight.cols());
        gb[l] = Eigen::VectorXd::Zero(enc.layers[l].bias.size());
      }
      Eigen::MatrixXd ghw = Eigen::MatrixXd::Zero(enc.head.weight.rows(), enc.head.weight.cols());
      Eigen::VectorXd ghb = Eigen::VectorXd::Zero(enc.head.bias.size());
      double loss = 0.0;

      for (Eigen::Index s = 0; s < n; ++s) {
        std::vector<Eigen::VectorXd> acts{phase.inputs.row(s).transpose()};
        for (std::size_t l = 0; l < depth; ++l) {
          const auto& L = enc.layers[l];
          Eigen::VectorXd h(L.weight.rows());
          for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
            double a = L.bias[r];
            for (Eigen::Index c = 0; c < L.weight.cols(); ++c) a += L.weight(r, c) * acts.back()[c];
            h[r] = std::tanh(a);
          }
          acts.push_back(h);
        }
        const Eigen::VectorXd& top = acts.back();
        Eigen::VectorXd z(enc.head.weight.rows());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
          double a = enc.head.bias[r];
          for (Eigen::Index c = 0; c < top.size(); ++c) a += enc.head.weight(r, c) * top[c];
          z[r] = a;
        }
        double zmax = z[0];
        for (Eigen::Index r = 1; r < z.size(); ++r) zmax = std::max(zmax, z[r]);
        double denom = 0.0;
        for (Eigen::Index r = 0; r < z.size(); ++r) denom += std::exp(z[r] - zmax);
        const int y = phase.labels[std::size_t(s)];
        loss += std::log(denom) + zmax - z[y];

        Eigen::VectorXd dz(z.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
          dz[r] = (std::exp(z[r] - zmax) / denom - (r == y ? 1.0 : 0.0)) / double(n);
        }
        Eigen::VectorXd dh = Eigen::VectorXd::Zero(top.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
          ghb[r] += dz[r];
          for (Eigen::Index c = 0; c < top.size(); ++c) {
            ghw(r, c) += dz[r] * top[c];
            dh[c] += dz[r] * enc.head.weight(r, c);
          }
        }
        for (std::size_t l = depth; l-- > 0;) {
          const Eigen::VectorXd& h = acts[l + 1];
          const Eigen::VectorXd& below = acts[l];
          Eigen::VectorXd da(h.size());
          for (Eigen::Index r = 0; r < h.size(); ++r) da[r] = dh[r] * (1.0 - h[r] * h[r]);
          Eigen::VectorXd next = Eigen::VectorXd::Zero(below.size());
          for (Eigen::Index r = 0; r < h.size(); ++r) {
            gb[l][r] += da[r];
            for (Eigen::Index c = 0; c < below.size(); ++c) {
              gw[l](r, c) += da[r] * below[c];
              next[c] += da[r] * enc.layers[l].weight(r, c);
            }
          }
          dh = next;
        }
      }
      losses.push_back(loss / double(n));
      for (std::size_t l = 0; l < depth; ++l) {
        enc.layers[l].weight -= eta * gw[l];
        enc.layers[l].bias -= eta * gb[l];
      }
      enc.head.weight -= eta * ghw;
      enc.head.bias -= eta * ghb;
    }
  }
  return losses;
}

}  // namespace oracle
