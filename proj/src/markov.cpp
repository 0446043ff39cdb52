#include "stabsim/markov.hpp"

#include <cmath>
#include <cstdlib>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace stabsim {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr int kMaxChainSize = 512;

// Pascal triangle in long double; relative error stays near machine
// epsilon, which keeps row sums of the assembled chains inside 1e-12
// even for a few hundred states.
std::vector<std::vector<long double>> binomials(int n) {
  std::vector<std::vector<long double>> c(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    c[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i) + 1, 1.0L);
    for (int k = 1; k < i; ++k)
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k) - 1] +
          c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k)];
  }
  return c;
}

void validate(const AbsorbingChain& chain) {
  const int n = chain.size();
  if (n < 2) throw std::invalid_argument("chain needs at least two states");
  if (static_cast<int>(chain.labels.size()) != n)
    throw std::invalid_argument("chain labels do not match state count");
  if (chain.absorbing < 0 || chain.absorbing >= n)
    throw std::invalid_argument("absorbing index out of range");
  for (int i = 0; i < n; ++i) {
    const auto& row = chain.p[static_cast<std::size_t>(i)];
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("chain matrix is not square");
    double sum = 0.0, comp = 0.0;
    for (double x : row) {
      if (x < 0.0 || !std::isfinite(x))
        throw std::invalid_argument("negative or non-finite transition probability in row " +
                                    chain.labels[static_cast<std::size_t>(i)]);
      const double y = x - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      std::ostringstream msg;
      msg << "row " << chain.labels[static_cast<std::size_t>(i)] << " sums to " << sum;
      throw std::invalid_argument(msg.str());
    }
  }
  const auto& arow = chain.p[static_cast<std::size_t>(chain.absorbing)];
  for (int j = 0; j < n; ++j) {
    const double want = (j == chain.absorbing) ? 1.0 : 0.0;
    if (arow[static_cast<std::size_t>(j)] != want)
      throw std::invalid_argument("absorbing row is not a unit vector");
  }
}

void check_reachability(const AbsorbingChain& chain) {
  const int n = chain.size();
  std::vector<char> reaches(static_cast<std::size_t>(n), 0);
  reaches[static_cast<std::size_t>(chain.absorbing)] = 1;
  std::deque<int> queue{chain.absorbing};
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    for (int i = 0; i < n; ++i) {
      if (!reaches[static_cast<std::size_t>(i)] &&
          chain.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0) {
        reaches[static_cast<std::size_t>(i)] = 1;
        queue.push_back(i);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!reaches[static_cast<std::size_t>(i)])
      throw std::runtime_error("absorbing state unreachable from state " +
                               chain.labels[static_cast<std::size_t>(i)]);
  }
}

enum class Shape { upper, lower, dense };

// Solve (I - Q) x = b for the transient submatrix Q.  `trans` maps
// transient positions to chain states.
std::vector<double> solve_transient(const AbsorbingChain& chain,
                                    const std::vector<int>& trans, Shape shape,
                                    const std::vector<double>& b) {
  const int m = static_cast<int>(trans.size());
  auto q = [&](int i, int j) {
    return chain.p[static_cast<std::size_t>(trans[static_cast<std::size_t>(i)])]
                  [static_cast<std::size_t>(trans[static_cast<std::size_t>(j)])];
  };
  std::vector<double> x(static_cast<std::size_t>(m), 0.0);

  if (shape == Shape::upper) {
    for (int i = m - 1; i >= 0; --i) {
      double s = b[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < m; ++j) s += q(i, j) * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = s / (1.0 - q(i, i));
    }
    return x;
  }
  if (shape == Shape::lower) {
    for (int i = 0; i < m; ++i) {
      double s = b[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j) s += q(i, j) * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = s / (1.0 - q(i, i));
    }
    return x;
  }

  // Dense path: Gaussian elimination with partial pivoting on (I - Q).
  std::vector<std::vector<double>> a(static_cast<std::size_t>(m));
  std::vector<double> rhs = b;
  for (int i = 0; i < m; ++i) {
    a[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (i == j ? 1.0 : 0.0) - q(i, j);
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
          std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
        pivot = r;
    if (std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]) < 1e-300)
      throw std::runtime_error("singular system: (I - Q) has no unique solution");
    std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
    std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
    for (int r = col + 1; r < m; ++r) {
      const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                       a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
      if (f == 0.0) continue;
      for (int j = col; j < m; ++j)
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] -=
            f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
      rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
    }
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = rhs[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j)
      s -= a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  return x;
}

}  // namespace

ChainSolution solve_absorbing(const AbsorbingChain& chain) {
  validate(chain);
  check_reachability(chain);

  const int n = chain.size();
  std::vector<int> trans;
  trans.reserve(static_cast<std::size_t>(n) - 1);
  for (int i = 0; i < n; ++i)
    if (i != chain.absorbing) trans.push_back(i);
  const int m = static_cast<int>(trans.size());

  bool upper = true, lower = true;
  for (int i = 0; i < m && (upper || lower); ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = chain.p[static_cast<std::size_t>(trans[static_cast<std::size_t>(i)])]
                               [static_cast<std::size_t>(trans[static_cast<std::size_t>(j)])];
      if (v != 0.0) {
        if (j < i) upper = false;
        if (j > i) lower = false;
      }
    }
  }
  const Shape shape = upper ? Shape::upper : (lower ? Shape::lower : Shape::dense);

  const std::vector<double> ones(static_cast<std::size_t>(m), 1.0);
  const std::vector<double> e = solve_transient(chain, trans, shape, ones);
  // t = N*e gives the running sums needed for the second moment:
  // Var = 2t - e - e^2 elementwise.
  const std::vector<double> t = solve_transient(chain, trans, shape, e);

  ChainSolution sol;
  sol.expected.assign(static_cast<std::size_t>(n), 0.0);
  sol.variance.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i) {
    const auto s = static_cast<std::size_t>(trans[static_cast<std::size_t>(i)]);
    const double ei = e[static_cast<std::size_t>(i)];
    sol.expected[s] = ei;
    sol.variance[s] = 2.0 * t[static_cast<std::size_t>(i)] - ei - ei * ei;
  }
  return sol;
}

AbsorbingChain message_chain(int d) {
  if (d < 1) throw std::invalid_argument("message_chain requires d >= 1");
  if (d + 1 > kMaxChainSize) throw std::length_error("message_chain dimension too large");
  const auto c = binomials(d);
  AbsorbingChain chain;
  chain.absorbing = 0;
  chain.labels.resize(static_cast<std::size_t>(d) + 1);
  chain.p.assign(static_cast<std::size_t>(d) + 1,
                 std::vector<double>(static_cast<std::size_t>(d) + 1, 0.0));
  for (int k = 0; k <= d; ++k)
    chain.labels[static_cast<std::size_t>(k)] = std::to_string(k);
  chain.p[0][0] = 1.0;
  for (int k = 1; k <= d; ++k) {
    const long double scale = std::exp2(static_cast<long double>(-k));
    for (int j = 0; j <= k; ++j)
      chain.p[static_cast<std::size_t>(k)][static_cast<std::size_t>(k - j)] =
          static_cast<double>(c[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] * scale);
  }
  return chain;
}

AbsorbingChain memory_chain(int d) {
  if (d < 1) throw std::invalid_argument("memory_chain requires d >= 1");
  const int n = d + 4;
  if (n > kMaxChainSize) throw std::length_error("memory_chain dimension too large");
  const auto c = binomials(d);
  const int I = 0, P = d + 2, F = d + 3;
  auto C = [](int j) { return j + 1; };  // C^j state index

  AbsorbingChain chain;
  chain.absorbing = F;
  chain.labels.resize(static_cast<std::size_t>(n));
  chain.labels[static_cast<std::size_t>(I)] = "I";
  for (int j = 0; j <= d; ++j)
    chain.labels[static_cast<std::size_t>(C(j))] = "C" + std::to_string(j);
  chain.labels[static_cast<std::size_t>(P)] = "P";
  chain.labels[static_cast<std::size_t>(F)] = "F";
  chain.p.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  auto& p = chain.p;

  const long double dl = d;
  const long double half_d1 = std::exp2(-static_cast<long double>(d) - 1.0L);
  p[I][static_cast<std::size_t>(P)] =
      static_cast<double>((dl - 1.0L) / (2.0L * dl) + half_d1 / dl);
  p[I][static_cast<std::size_t>(C(0))] =
      static_cast<double>((dl - 1.0L) / dl * half_d1 + 1.0L / (2.0L * dl));
  for (int j = 1; j <= d; ++j)
    p[I][static_cast<std::size_t>(C(j))] = static_cast<double>(
        c[static_cast<std::size_t>(d)][static_cast<std::size_t>(d - j)] * half_d1);

  for (int i = 0; i <= d; ++i) {
    const int ni = d - i;
    for (int j = i; j <= d; ++j) {
      const long double t1 =
          c[static_cast<std::size_t>(ni)][static_cast<std::size_t>(d - j)] *
          std::exp2(-static_cast<long double>(ni) - 1.0L);
      // (1/4)^(d-i) * (3^(d-j) - 2^(d-j)) rewritten with bounded factors.
      const long double t2 =
          c[static_cast<std::size_t>(ni)][static_cast<std::size_t>(j - i)] *
          (std::pow(0.75L, d - j) - std::exp2(-static_cast<long double>(d - j))) *
          std::pow(0.25L, j - i) / (ni + 1.0L);
      p[static_cast<std::size_t>(C(i))][static_cast<std::size_t>(C(j))] =
          static_cast<double>(t1 + t2);
    }
    if (i < d)
      p[static_cast<std::size_t>(C(i))][static_cast<std::size_t>(P)] = static_cast<double>(
          std::pow(0.75L, ni) / (ni + 1.0L) + (ni - 1.0L) / (2.0L * (ni + 1.0L)));
  }
  p[static_cast<std::size_t>(C(d))][static_cast<std::size_t>(P)] = 0.5;
  p[static_cast<std::size_t>(P)][static_cast<std::size_t>(F)] = 1.0;
  p[static_cast<std::size_t>(F)][static_cast<std::size_t>(F)] = 1.0;

  validate(chain);
  return chain;
}

AbsorbingChain dominating_chain(int d, const std::vector<std::vector<double>>& lower_bounds) {
  if (d < 1) throw std::invalid_argument("dominating_chain requires d >= 1");
  const int n = d + 1;
  if (n > kMaxChainSize) throw std::length_error("dominating_chain dimension too large");
  if (static_cast<int>(lower_bounds.size()) != n)
    throw std::invalid_argument("lower_bounds must have d+1 rows");

  AbsorbingChain chain;
  chain.absorbing = d;
  chain.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) chain.labels[static_cast<std::size_t>(i)] = "S" + std::to_string(i);
  chain.p.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));

  for (int i = 0; i < d; ++i) {
    const auto& row = lower_bounds[static_cast<std::size_t>(i)];
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("lower_bounds must have d+1 columns");
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = row[static_cast<std::size_t>(j)];
      if (j <= i) {
        if (v != 0.0)
          throw std::invalid_argument("lower_bounds must vanish at and below the diagonal");
        continue;
      }
      if (v < 0.0 || v > 1.0)
        throw std::invalid_argument("lower_bounds entries must lie in [0,1]");
      chain.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      mass += v;
    }
    if (mass > 1.0 + kRowSumTol) {
      std::ostringstream msg;
      msg << "row S" << i << " mass " << mass << " exceeds 1";
      throw std::invalid_argument(msg.str());
    }
    chain.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - mass);
  }
  chain.p[static_cast<std::size_t>(d)][static_cast<std::size_t>(d)] = 1.0;
  return chain;
}

double harmonic(int d) {
  if (d < 0) throw std::invalid_argument("harmonic requires d >= 0");
  long double h = 0.0L;
  for (int i = d; i >= 1; --i) h += 1.0L / i;
  return static_cast<double>(h);
}

namespace {

void check_series_args(int d, double q, double tol) {
  if (d < 1) throw std::invalid_argument("series requires d >= 1");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("series requires 0 < q < 1");
  if (!(tol > 0.0)) throw std::invalid_argument("series requires tol > 0");
}

// 1 - (1-x)^d without cancellation for small x.
double rise_term(int d, double x) {
  if (x >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(d) * std::log1p(-x));
}

}  // namespace

double expected_series(int d, double q, double tol) {
  check_series_args(d, q, tol);
  double sum = 0.0, comp = 0.0;
  double ql = 1.0;
  for (long l = 0;; ++l, ql *= q) {
    const double tail = d * ql / (1.0 - q);
    const double term = (tail < tol) ? tail : rise_term(d, ql);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (tail < tol) break;
  }
  return sum;
}

double variance_series(int d, double q, double tol) {
  check_series_args(d, q, tol);
  const double e = expected_series(d, q, tol);
  double s1 = 0.0, comp = 0.0;
  double ql = q;
  for (long l = 1;; ++l, ql *= q) {
    // Remaining weighted mass is at most d * sum_{k>=l} k q^k.
    const double tail = d * ql * (l - (l - 1) * q) / ((1.0 - q) * (1.0 - q));
    const double term = (tail < tol) ? tail : l * rise_term(d, ql);
    const double y = term - comp;
    const double t = s1 + y;
    comp = (t - s1) - y;
    s1 = t;
    if (tail < tol) break;
  }
  return 2.0 * s1 + e - e * e;
}

double harmonic_bound(int d, double q) {
  if (d < 1) throw std::invalid_argument("harmonic_bound requires d >= 1");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("harmonic_bound requires 0 < q < 1");
  return -harmonic(d) / std::log(q) + 0.5;
}

double variance_partial_bound(int d) {
  if (d < 1) throw std::invalid_argument("variance_partial_bound requires d >= 1");
  long double s = 0.0L;
  for (int i = d; i >= 1; --i) s += 1.0L / (static_cast<long double>(i) * i);
  const double ln2 = std::log(2.0);
  return static_cast<double>(s) / (ln2 * ln2) + 0.25;
}

double variance_bound() {
  const double pi = 3.14159265358979323846;
  const double ln2 = std::log(2.0);
  return pi * pi / (6.0 * ln2 * ln2) + 0.25;
}

double containment_bound_message(int d) {
  if (d < 1) throw std::invalid_argument("containment_bound_message requires d >= 1");
  return harmonic(d) / std::log(2.0) + 0.5;
}

double containment_bound_memory(int delta_i) {
  if (delta_i < 1) throw std::invalid_argument("containment_bound_memory requires delta_i >= 1");
  return harmonic(delta_i) / std::log(2.0) + 5.5;
}

}  // namespace stabsim
