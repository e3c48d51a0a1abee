#include "pulsestab/pulse.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pulsestab {

namespace {

using Triplet = Eigen::Triplet<double>;
using SparseMat = Eigen::SparseMatrix<double>;

// First-order form of the standing-wave equation linearized at the rest
// state, in (w, w') coordinates: [[0, Id], [-D^{-1} Q B(inf), 0]].
Mat rest_state_matrix(const SkewGradientModel& model) {
  const int n = model.n;
  Mat c = Mat::Zero(2 * n, 2 * n);
  c.topRightCorner(n, n) = Mat::Identity(n, n);
  c.bottomLeftCorner(n, n) =
      -(model.d_diag.cwiseInverse().asDiagonal() * (model.Q() * model.b_inf));
  return c;
}

struct RestSplit {
  Mat unstable;   // 2n x n basis, eigenvalues with Re > 0
  Mat stable;     // 2n x n basis, eigenvalues with Re < 0
  double gap = 0; // min |Re mu|
};

// Realified eigenspace bases of the rest-state matrix.
RestSplit rest_state_split(const SkewGradientModel& model) {
  const Mat c = rest_state_matrix(model);
  Eigen::EigenSolver<Mat> es(c);
  if (es.info() != Eigen::Success) throw Error("rest-state eigensolve failed");

  const int m = static_cast<int>(c.rows());
  RestSplit split;
  split.gap = std::numeric_limits<double>::infinity();
  std::vector<Vec> plus, minus;
  std::vector<int> seen_conjugate(m, 0);
  for (int k = 0; k < m; ++k) {
    const std::complex<double> mu = es.eigenvalues()(k);
    if (std::abs(mu.real()) < 1e-10) {
      throw Error("rest state is not hyperbolic: eigenvalue near the imaginary axis");
    }
    split.gap = std::min(split.gap, std::abs(mu.real()));
    if (seen_conjugate[static_cast<size_t>(k)]) continue;
    auto& bucket = mu.real() > 0 ? plus : minus;
    if (std::abs(mu.imag()) < 1e-12) {
      bucket.push_back(es.eigenvectors().col(k).real());
    } else {
      // mark the conjugate partner to avoid double-counting
      for (int j = k + 1; j < m; ++j) {
        if (std::abs(es.eigenvalues()(j).real() - mu.real()) < 1e-9 &&
            std::abs(es.eigenvalues()(j).imag() + mu.imag()) < 1e-9 &&
            !seen_conjugate[static_cast<size_t>(j)]) {
          seen_conjugate[static_cast<size_t>(j)] = 1;
          break;
        }
      }
      bucket.push_back(es.eigenvectors().col(k).real());
      bucket.push_back(es.eigenvectors().col(k).imag());
    }
  }
  auto pack = [m](const std::vector<Vec>& cols) {
    Mat out(m, static_cast<int>(cols.size()));
    for (int j = 0; j < out.cols(); ++j) out.col(j) = cols[static_cast<size_t>(j)];
    Eigen::HouseholderQR<Mat> qr(out);
    Mat q = qr.householderQ() * Mat::Identity(m, static_cast<int>(cols.size()));
    return q;
  };
  split.unstable = pack(plus);
  split.stable = pack(minus);
  if (split.unstable.cols() != m / 2 || split.stable.cols() != m / 2) {
    throw Error("rest-state splitting is not balanced");
  }
  return split;
}

// Orthonormal basis of the orthogonal complement of span(basis).
Mat orthogonal_complement(const Mat& basis) {
  Eigen::JacobiSVD<Mat> svd(basis, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(basis.rows() - basis.cols());
}

Vec scalar_sech2(const Vec& grid) {
  Vec u(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double s = 1.0 / std::cosh(grid(i) / 2.0);
    u(i) = 1.5 * s * s;
  }
  return u;
}

// Slave inhibitor solve v'' - gamma v - v^3 + u = 0 with clamped ends;
// the operator -d^2 + gamma + 3 v^2 is positive definite, so a damped
// Newton from v = 0 converges.
Vec solve_inhibitor(const Vec& u, double gamma, double h) {
  const int m = static_cast<int>(u.size());
  Vec v = Vec::Zero(m);
  auto residual = [&](const Vec& vv) {
    Vec r(m);
    for (int i = 0; i < m; ++i) {
      const double lap = (i == 0 || i == m - 1)
                             ? 0.0
                             : (vv(i - 1) - 2.0 * vv(i) + vv(i + 1)) / (h * h);
      r(i) = (i == 0 || i == m - 1) ? vv(i)
                                    : lap - gamma * vv(i) - std::pow(vv(i), 3) + u(i);
    }
    return r;
  };
  for (int iter = 0; iter < 60; ++iter) {
    Vec r = residual(v);
    if (r.cwiseAbs().maxCoeff() < 1e-12) break;
    // tridiagonal Jacobian solve (Thomas algorithm)
    Vec a(m), b(m), c(m);
    for (int i = 0; i < m; ++i) {
      if (i == 0 || i == m - 1) {
        b(i) = 1.0;
        a(i) = c(i) = 0.0;
      } else {
        b(i) = -2.0 / (h * h) - gamma - 3.0 * v(i) * v(i);
        a(i) = c(i) = 1.0 / (h * h);
      }
    }
    Vec d = -r;
    for (int i = 1; i < m; ++i) {
      const double w = a(i) / b(i - 1);
      b(i) -= w * c(i - 1);
      d(i) -= w * d(i - 1);
    }
    Vec dv(m);
    dv(m - 1) = d(m - 1) / b(m - 1);
    for (int i = m - 2; i >= 0; --i) dv(i) = (d(i) - c(i) * dv(i + 1)) / b(i);
    double step = 1.0;
    const double r0 = r.cwiseAbs().maxCoeff();
    for (int back = 0; back < 8; ++back) {
      Vec trial = v + step * dv;
      if (residual(trial).cwiseAbs().maxCoeff() < r0 || back == 7) {
        v = trial;
        break;
      }
      step *= 0.5;
    }
  }
  return v;
}

/// Candidate built-in seeds, best guess first.  The scalar model has its
/// closed form; FitzHugh-Nagumo gets sech^2 activator humps at a few
/// turning amplitudes (the inhibitor response ranges from pointwise
/// slaving at wide pulses to a weak nonlocal average at narrow ones, so
/// the right amplitude is regime dependent) with the inhibitor slaved by
/// an inner solve.
std::vector<PulseProfile> built_in_seeds(const SkewGradientModel& model,
                                         const Vec& grid) {
  const int m = static_cast<int>(grid.size());
  std::vector<PulseProfile> seeds;

  if (model.n == 1) {
    PulseProfile seed;
    seed.grid = grid;
    seed.w = Mat::Zero(m, 1);
    seed.w_prime = Mat::Zero(m, 1);
    seed.w.col(0) = scalar_sech2(grid);
    for (int i = 0; i < m; ++i) {
      const double s = 1.0 / std::cosh(grid(i) / 2.0);
      seed.w_prime(i, 0) = -1.5 * s * s * std::tanh(grid(i) / 2.0);
    }
    seeds.push_back(std::move(seed));
    return seeds;
  }

  if (model.fhn.has_value()) {
    const auto& p = *model.fhn;
    // F(u) = -u^4/4 + (1+b)u^3/3 - b u^2/2; drag = inhibitor contribution
    auto first_root_above = [&](double drag) {
      auto value = [&](double u) {
        return -0.25 * std::pow(u, 4) + (1.0 + p.beta) / 3.0 * std::pow(u, 3) -
               0.5 * p.beta * u * u - 0.5 * drag * u * u;
      };
      double lo = 0.0, hi = 0.0;
      for (double u = 0.02; u <= 1.6; u += 0.02) {
        if (value(u) > 0.0) {
          lo = u - 0.02;
          hi = u;
          break;
        }
      }
      if (hi == 0.0) return 0.0;
      for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (value(mid) > 0.0 ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    };

    const double h = grid(1) - grid(0);
    auto push_seed = [&](const Vec& u) {
      PulseProfile seed;
      seed.grid = grid;
      seed.w = Mat::Zero(m, 2);
      seed.w_prime = Mat::Zero(m, 2);
      seed.w.col(0) = u;
      seed.w.col(1) = solve_inhibitor(u, p.gamma, h);
      for (int i = 1; i + 1 < m; ++i) {
        seed.w_prime.row(i) = (seed.w.row(i + 1) - seed.w.row(i - 1)) / (2.0 * h);
      }
      seeds.push_back(std::move(seed));
    };

    // Two-front plateau ("mesa") candidate for small activator diffusion:
    // plateau at the upper cubic branch, half-length from the balance
    // v(0) = v_maxwell with the inhibitor response of a plateau source.
    {
      auto f = [&](double u) { return u * (1.0 - u) * (u - p.beta); };
      auto area = [&](double v) {
        // integral of (f - v) between the outer roots of f(u) = v
        double r1 = p.beta * v > 0 ? 0.0 : 0.0, r3 = 1.0;
        // outer roots by bisection on f(u) - v
        auto root = [&](double lo, double hi) {
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            ((f(mid) - v > 0.0) == (f(lo) - v > 0.0) ? lo : hi) = mid;
          }
          return 0.5 * (lo + hi);
        };
        r1 = root(-0.5, (p.beta + 1.0) / 3.0);
        r3 = root((p.beta + 1.0) / 3.0 + 1e-6, 2.0);
        const int quad = 200;
        double acc = 0.0;
        for (int q = 0; q < quad; ++q) {
          const double u = r1 + (r3 - r1) * (q + 0.5) / quad;
          acc += (f(u) - v) * (r3 - r1) / quad;
        }
        return std::tuple<double, double, double>(acc, r1, r3);
      };
      double v_lo = 0.0, v_hi = f((p.beta + 1.0) / 3.0 + 0.2);
      if (std::get<0>(area(v_lo)) > 0.0) {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (v_lo + v_hi);
          (std::get<0>(area(mid)) > 0.0 ? v_lo : v_hi) = mid;
        }
        const double v_star = 0.5 * (v_lo + v_hi);
        auto [acc, r1, r3] = area(v_star);
        (void)acc;
        // front balance: v(front) = v*, plateau response of height r3
        const double ratio = 2.0 * p.gamma * v_star / r3;
        if (ratio > 0.0 && ratio < 0.999) {
          const double half_len = -std::log(1.0 - ratio) / (2.0 * std::sqrt(p.gamma));
          const double front = (r3 - r1) / (2.0 * std::sqrt(2.0 * p.d));
          if (half_len > 0.5 / front) {
            Vec u(m);
            for (int i = 0; i < m; ++i) {
              u(i) = 0.5 * r3 * (std::tanh(front * (grid(i) + half_len)) -
                                 std::tanh(front * (grid(i) - half_len)));
            }
            push_seed(u);
          }
        }
      }
    }

    // sech^2 hump candidates (wide-pulse slaved and narrow-pulse regimes)
    std::vector<double> amplitudes;
    const double slaved = first_root_above(1.0 / p.gamma);
    if (slaved > 0.0) amplitudes.push_back(slaved);
    const double decoupled = first_root_above(0.0);
    if (decoupled > 0.0) {
      amplitudes.push_back(decoupled);
      amplitudes.push_back(std::min(1.5 * decoupled, 1.2));
    }
    const double kappa = 0.5 * std::sqrt((p.beta + 1.0 / p.gamma) / p.d);
    for (double u_peak : amplitudes) {
      Vec u(m);
      for (int i = 0; i < m; ++i) {
        const double s = 1.0 / std::cosh(kappa * grid(i));
        u(i) = u_peak * s * s;
      }
      push_seed(u);
    }

    if (seeds.empty()) {
      throw Error("no built-in seed for these parameters; supply an initial guess");
    }
    return seeds;
  }

  throw Error("no built-in seed for this model; supply an initial guess");
}

PulseProfile resample(const PulseProfile& src, const Vec& grid) {
  PulseProfile out;
  out.grid = grid;
  const int m = static_cast<int>(grid.size());
  const int n = src.n();
  out.w = Mat::Zero(m, n);
  out.w_prime = Mat::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    out.w.row(i) = src.value_at(grid(i)).transpose();
    out.w_prime.row(i) = src.deriv_at(grid(i)).transpose();
  }
  out.residual_norm = src.residual_norm;
  out.decay_rate = src.decay_rate;
  return out;
}

} // namespace

void PulseProfile::validate() const {
  const int m = num_nodes();
  if (m < 3) throw Error("profile grid needs at least 3 nodes");
  for (int i = 1; i < m; ++i) {
    if (!(grid(i) > grid(i - 1))) throw Error("profile grid must be strictly increasing");
  }
  if (w.rows() != m || w_prime.rows() != m || w.cols() != w_prime.cols() || w.cols() < 1) {
    throw Error("profile arrays disagree with the grid");
  }
  if (!w.allFinite() || !w_prime.allFinite()) throw Error("profile contains non-finite values");
  if ((w.colwise().maxCoeff() - w.colwise().minCoeff()).maxCoeff() <= 0.0) {
    throw Error("profile is constant");
  }
}

namespace {
int locate_interval(const Vec& grid, double x) {
  const int m = static_cast<int>(grid.size());
  if (x <= grid(0)) return 0;
  if (x >= grid(m - 1)) return m - 2;
  int lo = 0, hi = m - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (grid(mid) <= x ? lo : hi) = mid;
  }
  return lo;
}
} // namespace

Vec PulseProfile::value_at(double x) const {
  const int m = num_nodes();
  if (x <= grid(0)) return w.row(0).transpose();
  if (x >= grid(m - 1)) return w.row(m - 1).transpose();
  const int i = locate_interval(grid, x);
  const double h = grid(i + 1) - grid(i);
  const double t = (x - grid(i)) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * w.row(i).transpose() + h10 * h * w_prime.row(i).transpose() +
         h01 * w.row(i + 1).transpose() + h11 * h * w_prime.row(i + 1).transpose();
}

Vec PulseProfile::deriv_at(double x) const {
  const int m = num_nodes();
  if (x <= grid(0)) return w_prime.row(0).transpose();
  if (x >= grid(m - 1)) return w_prime.row(m - 1).transpose();
  const int i = locate_interval(grid, x);
  const double h = grid(i + 1) - grid(i);
  const double t = (x - grid(i)) / h;
  const double d00 = 6 * t * (t - 1) / h;
  const double d10 = (1 - t) * (1 - 3 * t);
  const double d01 = -6 * t * (t - 1) / h;
  const double d11 = t * (3 * t - 2);
  return d00 * w.row(i).transpose() + d10 * w_prime.row(i).transpose() +
         d01 * w.row(i + 1).transpose() + d11 * w_prime.row(i + 1).transpose();
}

namespace {

/// Bordered Newton solve from one concrete guess on the prepared grid.
PulseProfile solve_from_guess(const SkewGradientModel& model,
                              const PulseSolveOptions& opts, const RestSplit& split,
                              const Vec& grid, const PulseProfile& guess) {
  const int n = model.n;
  const int num_nodes = static_cast<int>(grid.size());
  const double h = grid(1) - grid(0);
  const double decay = split.gap;

  if (guess.w.cwiseAbs().maxCoeff() < 10.0 * opts.tail_tol) {
    throw Error("trivial solution: initial guess is the rest state");
  }

  // translation direction of the guess; border column and phase row
  Mat t_dir = Mat::Zero(num_nodes, n);
  for (int i = 1; i + 1 < num_nodes; ++i) {
    t_dir.row(i) = (guess.w.row(i + 1) - guess.w.row(i - 1)) / (2.0 * h);
  }
  const double t_norm = t_dir.norm();
  if (t_norm < 1e-12) throw Error("trivial solution: initial guess has no shape");

  // boundary rows: no incoming component at -X, none outgoing at +X
  const Mat bc_left = orthogonal_complement(split.unstable).transpose();  // n x 2n
  const Mat bc_right = orthogonal_complement(split.stable).transpose();   // n x 2n

  const int unknowns = num_nodes * n + 1; // + border multiplier
  Vec u_vec(unknowns);
  for (int i = 0; i < num_nodes; ++i) {
    u_vec.segment(i * n, n) = guess.w.row(i).transpose();
  }
  u_vec(unknowns - 1) = 0.0;

  const Vec d_diag = model.d_diag;
  const Mat q = model.Q();

  auto node = [&](const Vec& vec, int i) { return vec.segment(i * n, n); };

  auto assemble_residual = [&](const Vec& vec) {
    Vec r = Vec::Zero(unknowns);
    const double a = vec(unknowns - 1);
    // left boundary: first-order state (w, w') with one-sided derivative
    Vec state(2 * n);
    state.head(n) = node(vec, 0);
    state.tail(n) =
        (-3.0 * node(vec, 0) + 4.0 * node(vec, 1) - node(vec, 2)) / (2.0 * h);
    r.segment(0, n) = bc_left * state;
    for (int i = 1; i + 1 < num_nodes; ++i) {
      const Vec wi = node(vec, i);
      const Vec lap = (node(vec, i - 1) - 2.0 * wi + node(vec, i + 1)) / (h * h);
      r.segment(i * n, n) = d_diag.asDiagonal() * lap + q * model.grad_v(wi) +
                            a * t_dir.row(i).transpose();
    }
    state.head(n) = node(vec, num_nodes - 1);
    state.tail(n) = (3.0 * node(vec, num_nodes - 1) - 4.0 * node(vec, num_nodes - 2) +
                     node(vec, num_nodes - 3)) /
                    (2.0 * h);
    r.segment((num_nodes - 1) * n, n) = bc_right * state;
    // phase condition against the guess
    double phase = 0.0;
    for (int i = 0; i < num_nodes; ++i) {
      phase += h * t_dir.row(i).dot(node(vec, i).transpose() - guess.w.row(i));
    }
    r(unknowns - 1) = phase;
    return r;
  };

  auto assemble_jacobian = [&](const Vec& vec) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(num_nodes) * n * (3 * n + 2));
    auto add_block = [&](int row0, int col0, const Mat& block) {
      for (int r = 0; r < block.rows(); ++r) {
        for (int c = 0; c < block.cols(); ++c) {
          if (block(r, c) != 0.0) trip.emplace_back(row0 + r, col0 + c, block(r, c));
        }
      }
    };
    // left BC rows
    add_block(0, 0, bc_left.leftCols(n) - (3.0 / (2.0 * h)) * bc_left.rightCols(n));
    add_block(0, n, (4.0 / (2.0 * h)) * bc_left.rightCols(n));
    add_block(0, 2 * n, (-1.0 / (2.0 * h)) * bc_left.rightCols(n));
    // interior rows
    const Mat side = (1.0 / (h * h)) * Mat(d_diag.asDiagonal());
    for (int i = 1; i + 1 < num_nodes; ++i) {
      const Vec wi = node(vec, i);
      add_block(i * n, (i - 1) * n, side);
      add_block(i * n, (i + 1) * n, side);
      Mat center = -2.0 * side + q * model.hess_v(wi);
      add_block(i * n, i * n, center);
      for (int r = 0; r < n; ++r) {
        if (t_dir(i, r) != 0.0) {
          trip.emplace_back(i * n + r, unknowns - 1, t_dir(i, r));
        }
      }
    }
    // right BC rows
    const int last = num_nodes - 1;
    add_block(last * n, last * n,
              bc_right.leftCols(n) + (3.0 / (2.0 * h)) * bc_right.rightCols(n));
    add_block(last * n, (last - 1) * n, (-4.0 / (2.0 * h)) * bc_right.rightCols(n));
    add_block(last * n, (last - 2) * n, (1.0 / (2.0 * h)) * bc_right.rightCols(n));
    // phase row
    for (int i = 0; i < num_nodes; ++i) {
      for (int r = 0; r < n; ++r) {
        if (t_dir(i, r) != 0.0) {
          trip.emplace_back(unknowns - 1, i * n + r, h * t_dir(i, r));
        }
      }
    }
    SparseMat jac(unknowns, unknowns);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
  };

  Eigen::SparseLU<SparseMat> lu;
  double prev_res = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  bool converged = false;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Vec r = assemble_residual(u_vec);
    const double res = r.cwiseAbs().maxCoeff();
    if (res <= opts.tol) {
      converged = true;
      break;
    }
    if (res > 0.9 * prev_res) {
      if (++stagnant >= 5) {
        throw Error("Newton stagnation (last residual = " + std::to_string(res) + ")");
      }
    } else {
      stagnant = 0;
    }
    prev_res = res;

    SparseMat jac = assemble_jacobian(u_vec);
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw Error("pulse Jacobian factorization failed");
    const Vec delta = lu.solve(-r);
    double step = 1.0;
    for (int back = 0; back < 8; ++back) {
      const Vec trial = u_vec + step * delta;
      if (assemble_residual(trial).cwiseAbs().maxCoeff() < res || back == 7) {
        u_vec = trial;
        break;
      }
      step *= 0.5;
    }
  }
  if (!converged) {
    const double res = assemble_residual(u_vec).cwiseAbs().maxCoeff();
    if (res > opts.tol) {
      throw Error("Newton stagnation (last residual = " + std::to_string(res) + ")");
    }
  }

  PulseProfile out;
  out.grid = grid;
  out.w = Mat(num_nodes, n);
  for (int i = 0; i < num_nodes; ++i) out.w.row(i) = node(u_vec, i).transpose();

  if (out.w.cwiseAbs().maxCoeff() < 10.0 * opts.tail_tol) {
    throw Error("trivial solution: Newton converged to the rest state");
  }

  // fourth-order derivatives in the interior, second-order one-sided ends
  out.w_prime = Mat::Zero(num_nodes, n);
  for (int i = 0; i < num_nodes; ++i) {
    if (i >= 2 && i + 2 < num_nodes) {
      out.w_prime.row(i) = (out.w.row(i - 2) - 8.0 * out.w.row(i - 1) +
                            8.0 * out.w.row(i + 1) - out.w.row(i + 2)) /
                           (12.0 * h);
    } else if (i == 0) {
      out.w_prime.row(i) =
          (-3.0 * out.w.row(0) + 4.0 * out.w.row(1) - out.w.row(2)) / (2.0 * h);
    } else if (i == num_nodes - 1) {
      out.w_prime.row(i) = (3.0 * out.w.row(i) - 4.0 * out.w.row(i - 1) +
                            out.w.row(i - 2)) /
                           (2.0 * h);
    } else {
      out.w_prime.row(i) = (out.w.row(i + 1) - out.w.row(i - 1)) / (2.0 * h);
    }
  }

  const double tail = std::max(
      {out.w.row(0).cwiseAbs().maxCoeff(), out.w.row(num_nodes - 1).cwiseAbs().maxCoeff(),
       out.w_prime.row(0).cwiseAbs().maxCoeff(),
       out.w_prime.row(num_nodes - 1).cwiseAbs().maxCoeff()});
  if (tail > opts.tail_tol) {
    throw Error("half_width too small: tails at " + std::to_string(tail));
  }

  // plain collocation residual, border removed
  double res = 0.0;
  for (int i = 1; i + 1 < num_nodes; ++i) {
    const Vec wi = out.w.row(i).transpose();
    const Vec lap =
        (out.w.row(i - 1) - 2.0 * out.w.row(i) + out.w.row(i + 1)).transpose() / (h * h);
    res = std::max(res, (d_diag.asDiagonal() * lap + q * model.grad_v(wi))
                            .cwiseAbs()
                            .maxCoeff());
  }
  out.residual_norm = res;
  out.decay_rate = decay;
  out.validate();
  return out;
}

} // namespace

PulseProfile solve_pulse(const SkewGradientModel& model,
                         const PulseSolveOptions& opts,
                         const PulseProfile* initial_guess) {
  model.validate();
  if (opts.tol <= 0.0) throw Error("parameter 'tol' must be positive");
  if (opts.num_intervals < 8) throw Error("parameter 'num_intervals' too small");

  const RestSplit split = rest_state_split(model);
  const double half_width =
      opts.half_width > 0.0 ? opts.half_width : 15.0 / split.gap;
  const int num_nodes = opts.num_intervals + 1;
  const double h = 2.0 * half_width / opts.num_intervals;
  Vec grid(num_nodes);
  for (int i = 0; i < num_nodes; ++i) grid(i) = -half_width + i * h;

  if (initial_guess) {
    initial_guess->validate();
    if (initial_guess->n() != model.n) throw Error("initial guess dimension mismatch");
    return solve_from_guess(model, opts, split, grid, resample(*initial_guess, grid));
  }

  const std::vector<PulseProfile> seeds = built_in_seeds(model, grid);
  std::string last_error;
  for (const auto& seed : seeds) {
    try {
      return solve_from_guess(model, opts, split, grid, seed);
    } catch (const Error& err) {
      last_error = err.what();
    }
  }
  throw Error(last_error);
}

double profile_quadrature(const PulseProfile& profile, const Vec& weight_diag,
                          const Vec& q_diag, bool* coarse_warning) {
  profile.validate();
  if (weight_diag.size() != profile.n() || q_diag.size() != profile.n()) {
    throw Error("quadrature weight size mismatch");
  }
  const int m = profile.num_nodes();
  Vec f(m);
  for (int i = 0; i < m; ++i) {
    double v = 0.0;
    for (int k = 0; k < profile.n(); ++k) {
      v += q_diag(k) * weight_diag(k) * profile.w_prime(i, k) * profile.w_prime(i, k);
    }
    f(i) = v;
  }
  double trapezoid = 0.0;
  for (int i = 0; i + 1 < m; ++i) {
    trapezoid += 0.5 * (profile.grid(i + 1) - profile.grid(i)) * (f(i) + f(i + 1));
  }
  // composite Simpson as the agreement check (even interval count only)
  double simpson = trapezoid;
  if ((m - 1) % 2 == 0) {
    simpson = 0.0;
    for (int i = 0; i + 2 < m; i += 2) {
      simpson += (profile.grid(i + 2) - profile.grid(i)) / 6.0 *
                 (f(i) + 4.0 * f(i + 1) + f(i + 2));
    }
  }
  if (coarse_warning) {
    const double scale = std::max({std::abs(trapezoid), std::abs(simpson), 1e-14});
    *coarse_warning = std::abs(trapezoid - simpson) > 0.01 * scale;
  }
  return trapezoid;
}

double tau0(const PulseProfile& profile) {
  profile.validate();
  if (profile.n() != 2) throw Error("tau0 requires a two-component profile");
  const Vec ones = Vec::Ones(2);
  Vec pick_u = (Vec(2) << 1.0, 0.0).finished();
  Vec pick_v = (Vec(2) << 0.0, 1.0).finished();
  const double num = profile_quadrature(profile, pick_u, ones);
  const double den = profile_quadrature(profile, pick_v, ones);
  if (den < 1e-14) throw Error("flat inhibitor: integral |v'|^2 vanishes");
  return num / den;
}

void save_profile(const PulseProfile& profile, const std::string& path) {
  profile.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const int n = profile.n();
  out << "x";
  for (int k = 1; k <= n; ++k) out << ",w" << k;
  for (int k = 1; k <= n; ++k) out << ",dw" << k;
  out << "\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < profile.num_nodes(); ++i) {
    emit(profile.grid(i));
    for (int k = 0; k < n; ++k) {
      out << ",";
      emit(profile.w(i, k));
    }
    for (int k = 0; k < n; ++k) {
      out << ",";
      emit(profile.w_prime(i, k));
    }
    out << "\n";
  }
  std::ofstream side(path + ".json");
  side << "{\n  \"decay_rate\": " << profile.decay_rate
       << ",\n  \"half_width\": " << profile.half_width()
       << ",\n  \"n\": " << n << ",\n  \"nodes\": " << profile.num_nodes()
       << ",\n  \"residual_norm\": " << profile.residual_norm << "\n}\n";
}

PulseProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ":1: empty profile file");

  int n = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(header, field, ',')) fields.push_back(field);
    if (fields.empty() || fields[0] != "x" || fields.size() % 2 == 0) {
      throw Error(path + ":1: header must be x,w1..wn,dw1..dwn");
    }
    n = static_cast<int>((fields.size() - 1) / 2);
    for (int k = 0; k < n; ++k) {
      if (fields[static_cast<size_t>(1 + k)] != "w" + std::to_string(k + 1) ||
          fields[static_cast<size_t>(1 + n + k)] != "dw" + std::to_string(k + 1)) {
        throw Error(path + ":1: header must be x,w1..wn,dw1..dwn");
      }
    }
  }

  std::vector<double> xs;
  std::vector<Vec> ws, dws;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(row, field, ',')) {
      try {
        size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (static_cast<int>(values.size()) != 1 + 2 * n) {
      throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(1 + 2 * n) + " columns, got " +
                  std::to_string(values.size()));
    }
    xs.push_back(values[0]);
    Vec w(n), dw(n);
    for (int k = 0; k < n; ++k) {
      w(k) = values[static_cast<size_t>(1 + k)];
      dw(k) = values[static_cast<size_t>(1 + n + k)];
    }
    ws.push_back(w);
    dws.push_back(dw);
  }
  const int m = static_cast<int>(xs.size());
  if (m < 3) throw Error(path + ": too few rows");
  PulseProfile profile;
  profile.grid = Vec(m);
  profile.w = Mat(m, n);
  profile.w_prime = Mat(m, n);
  for (int i = 0; i < m; ++i) {
    profile.grid(i) = xs[static_cast<size_t>(i)];
    if (i > 0 && !(profile.grid(i) > profile.grid(i - 1))) {
      throw Error(path + ":" + std::to_string(i + 2) + ": grid not strictly increasing");
    }
    profile.w.row(i) = ws[static_cast<size_t>(i)].transpose();
    profile.w_prime.row(i) = dws[static_cast<size_t>(i)].transpose();
  }

  std::ifstream side(path + ".json");
  if (side) {
    std::string text((std::istreambuf_iterator<char>(side)),
                     std::istreambuf_iterator<char>());
    auto grab = [&](const char* key) -> double {
      const auto pos = text.find(key);
      if (pos == std::string::npos) return 0.0;
      const auto colon = text.find(':', pos);
      return std::stod(text.substr(colon + 1));
    };
    profile.residual_norm = grab("residual_norm");
    profile.decay_rate = grab("decay_rate");
  }
  profile.validate();
  return profile;
}

} // namespace pulsestab
