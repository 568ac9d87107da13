#include "disclab/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "disclab/errors.hpp"

namespace disclab {

double TrajectoryMatrix::dt() const {
  if (times.size() < 2) throw GridMismatch("need at least two samples for dt");
  return times[1] - times[0];
}

Eigen::Index TrajectoryMatrix::index_of(double t) const {
  const double h = dt();
  const double k = (t - times[0]) / h;
  const auto idx = static_cast<Eigen::Index>(std::llround(k));
  if (idx < 0 || idx >= samples() || std::abs(k - double(idx)) > 0.25) {
    throw GridMismatch("time " + std::to_string(t) + " is not on the grid");
  }
  return idx;
}

TrajectoryMatrix TrajectoryMatrix::slice(Eigen::Index first, Eigen::Index last) const {
  if (first < 0 || last >= samples() || last < first) {
    throw GridMismatch("slice out of range");
  }
  TrajectoryMatrix out;
  out.times = times.segment(first, last - first + 1);
  out.values = values.middleRows(first, last - first + 1);
  out.labels = labels;
  return out;
}

TrajectoryMatrix TrajectoryMatrix::restrict_to(double t_lo, double t_hi) const {
  const double h = dt();
  Eigen::Index first = 0;
  while (first < samples() && times[first] < t_lo - 0.25 * h) ++first;
  Eigen::Index last = samples() - 1;
  while (last >= 0 && times[last] > t_hi + 0.25 * h) --last;
  if (first > last) throw EmptyRegion("no samples in requested interval");
  return slice(first, last);
}

bool TrajectoryMatrix::same_grid(const TrajectoryMatrix& other, double rel_tol) const {
  if (samples() != other.samples()) return false;
  if (samples() == 0) return true;
  const double scale = std::max(1.0, times.cwiseAbs().maxCoeff());
  return (times - other.times).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void TrajectoryMatrix::validate() const {
  const Eigen::Index m = samples();
  if (m != times.size()) throw GridMismatch("times/values row count mismatch");
  if (m >= 2) {
    const double h = times[1] - times[0];
    if (!(h > 0)) throw GridMismatch("times must be strictly increasing");
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
      const double step = times[k + 1] - times[k];
      if (std::abs(step - h) > 1e-12 * std::max(1.0, std::abs(h))) {
        throw GridMismatch("non-uniform grid at index " + std::to_string(k));
      }
    }
  }
  if (!values.allFinite()) throw GridMismatch("trajectory contains NaN/Inf");
}

TrajectoryMatrix TrajectoryMatrix::concat(const TrajectoryMatrix& head,
                                          const TrajectoryMatrix& tail) {
  if (head.dim() != tail.dim()) throw DimensionMismatch("concat column mismatch");
  const double h = head.dt();
  if (std::abs((tail.times[0] - head.times[head.samples() - 1]) - h) > 1e-9 * std::max(1.0, h)) {
    throw GridMismatch("tail does not continue head's grid");
  }
  TrajectoryMatrix out;
  out.times.resize(head.samples() + tail.samples());
  out.times << head.times, tail.times;
  out.values.resize(head.samples() + tail.samples(), head.dim());
  out.values << head.values, tail.values;
  out.labels = head.labels;
  return out;
}

}  // namespace disclab

namespace disclab::dynsys {
namespace {

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the Shampine dense-output interpolant.
// ---------------------------------------------------------------------------

constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};

constexpr double kA2[1] = {1.0 / 5};
constexpr double kA3[2] = {3.0 / 40, 9.0 / 40};
constexpr double kA4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double kA5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                           -212.0 / 729};
constexpr double kA6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247,
                           49.0 / 176, -5103.0 / 18656};
constexpr double kB[6] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                          -2187.0 / 6784, 11.0 / 84};
// b - bhat, including the FSAL stage.
constexpr double kE[7] = {71.0 / 57600,    0.0,         -71.0 / 16695,
                          71.0 / 1920,     -17253.0 / 339200,
                          22.0 / 525,      -1.0 / 40};
// Dense-output polynomial: y(t0 + theta h) = y0 + h sum_s k_s P_s(theta),
// P_s(theta) = sum_j kP[s][j] theta^(j+1). Fourth-order accurate.
constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0}};

constexpr double kAbsTol = 1e-9;
constexpr double kRelTol = 1e-9;
constexpr double kMaxState = 1e8;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale =
        kAbsTol + kRelTol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / scale;
    acc += q * q;
  }
  return std::sqrt(acc / double(err.size()));
}

void check_state(const Eigen::VectorXd& y, double t) {
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > kMaxState) {
    throw IntegrationDiverged("state magnitude exceeded 1e8 or became non-finite", t);
  }
}

// Hairer's starting-step heuristic, scaled down for the first error test.
double initial_step(const SystemSpec& sys, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, double h_max) {
  Eigen::VectorXd scale =
      (kAbsTol + kRelTol * y0.cwiseAbs().array()).matrix();
  const double d0 = std::sqrt((y0.array() / scale.array()).square().mean());
  const double d1 = std::sqrt((f0.array() / scale.array()).square().mean());
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, h_max);
  const Eigen::VectorXd y1 = y0 + h0 * f0;
  const Eigen::VectorXd f1 = sys.rhs(t0 + h0, y1);
  const double d2 =
      std::sqrt(((f1 - f0).array() / scale.array()).square().mean()) / h0;
  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, h_max});
}

}  // namespace

TrajectoryMatrix simulate(const SystemSpec& system, const Eigen::VectorXd& x0,
                          std::pair<double, double> t_span, double dt) {
  const auto [t0, tf] = t_span;
  if (!(dt > 0)) throw std::invalid_argument("simulate: dt must be positive");
  if (!(tf > t0)) throw std::invalid_argument("simulate: tf must exceed t0");
  if (x0.size() != system.dimension) {
    throw DimensionMismatch("simulate: x0 length != system dimension");
  }

  const auto m = static_cast<Eigen::Index>(std::llround((tf - t0) / dt)) + 1;
  const Eigen::Index n = system.dimension;

  TrajectoryMatrix out;
  out.times.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) out.times[k] = t0 + double(k) * dt;
  out.values.resize(m, n);
  out.labels = system.state_labels;

  const double t_end = out.times[m - 1];
  Eigen::VectorXd y = x0;
  check_state(y, t0);
  out.values.row(0) = y.transpose();
  Eigen::Index next = 1;

  Eigen::MatrixXd K(n, 7);
  K.col(0) = system.rhs(t0, y);

  double t = t0;
  double h = initial_step(system, t0, y, K.col(0), t_end - t0);
  const double h_min_floor = 16.0 * std::numeric_limits<double>::epsilon();

  Eigen::VectorXd y_stage(n), y_new(n), err(n);

  while (next < m) {
    bool clamped = false;
    if (t + h >= t_end) {
      h = t_end - t;
      clamped = true;
    }
    if (h < h_min_floor * std::max(1.0, std::abs(t))) {
      throw IntegrationDiverged("step size underflow", t);
    }

    y_stage = y + h * kA2[0] * K.col(0);
    K.col(1) = system.rhs(t + kC[1] * h, y_stage);
    y_stage = y + h * (kA3[0] * K.col(0) + kA3[1] * K.col(1));
    K.col(2) = system.rhs(t + kC[2] * h, y_stage);
    y_stage = y + h * (kA4[0] * K.col(0) + kA4[1] * K.col(1) + kA4[2] * K.col(2));
    K.col(3) = system.rhs(t + kC[3] * h, y_stage);
    y_stage = y + h * (kA5[0] * K.col(0) + kA5[1] * K.col(1) + kA5[2] * K.col(2) +
                       kA5[3] * K.col(3));
    K.col(4) = system.rhs(t + kC[4] * h, y_stage);
    y_stage = y + h * (kA6[0] * K.col(0) + kA6[1] * K.col(1) + kA6[2] * K.col(2) +
                       kA6[3] * K.col(3) + kA6[4] * K.col(4));
    K.col(5) = system.rhs(t + h, y_stage);

    y_new = y + h * (kB[0] * K.col(0) + kB[2] * K.col(2) + kB[3] * K.col(3) +
                     kB[4] * K.col(4) + kB[5] * K.col(5));
    const double t_new = clamped ? t_end : t + h;
    K.col(6) = system.rhs(t_new, y_new);  // FSAL

    err = h * (kE[0] * K.col(0) + kE[2] * K.col(2) + kE[3] * K.col(3) +
               kE[4] * K.col(4) + kE[5] * K.col(5) + kE[6] * K.col(6));
    const double en = y_new.allFinite() ? error_norm(err, y, y_new)
                                        : std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      check_state(y_new, t_new);
      // Emit grid points covered by this step via the dense interpolant;
      // points that coincide with the step end get the stage value exactly.
      while (next < m && out.times[next] <= t_new + 1e-12 * std::max(1.0, std::abs(t_new))) {
        const double tq = out.times[next];
        if (std::abs(tq - t_new) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                        std::max(1.0, std::abs(t_new))) {
          out.values.row(next) = y_new.transpose();
        } else {
          const double theta = (tq - t) / h;
          double p1 = theta, p2 = theta * p1, p3 = theta * p2, p4 = theta * p3;
          Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
          for (int s = 0; s < 7; ++s) {
            const double w =
                kP[s][0] * p1 + kP[s][1] * p2 + kP[s][2] * p3 + kP[s][3] * p4;
            if (w != 0.0) acc += w * K.col(s);
          }
          out.values.row(next) = (y + h * acc).transpose();
        }
        ++next;
      }
      t = t_new;
      y.swap(y_new);
      K.col(0) = K.col(6);
      const double factor =
          (en == 0.0) ? 10.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 10.0);
      h = std::min(h * factor, t_end - t0);
    } else {
      const double factor = std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
      h *= factor;
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// Benchmark systems
// ---------------------------------------------------------------------------

namespace {

double param(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw UnknownSystem("missing parameter " + key);
  return it->second;
}

double merged(const ParamMap& overrides, const std::string& key, double fallback) {
  auto it = overrides.find(key);
  return it == overrides.end() ? fallback : it->second;
}

}  // namespace

BenchmarkSetup make_benchmark(const std::string& name, Variant variant,
                              double epsilon, const ParamMap& overrides) {
  if (epsilon < 0) throw std::invalid_argument("make_benchmark: epsilon must be >= 0");
  const double eps = (variant == Variant::truth) ? epsilon : 0.0;

  BenchmarkSetup setup;
  setup.t0 = 0.0;
  setup.tf = 50.0;
  setup.dt = 0.01;

  if (name == "vanderpol") {
    SystemSpec sys;
    sys.name = "vanderpol";
    sys.dimension = 2;
    sys.params = {{"mu", merged(overrides, "mu", 2.0)}, {"epsilon", eps}};
    sys.state_labels = {"x", "v"};
    // x'' - mu (1 - x^2) x' + x (+ eps x^3) = 0, written first order.
    sys.rhs_fn = [](double, const Eigen::VectorXd& s, const ParamMap& p) {
      const double mu = param(p, "mu");
      const double eps = param(p, "epsilon");
      const double x = s[0], v = s[1];
      Eigen::VectorXd d(2);
      d[0] = v;
      d[1] = mu * (1.0 - x * x) * v - x - eps * x * x * x;
      return d;
    };
    setup.system = std::move(sys);
    setup.x0 = Eigen::Vector2d(0.1, 5.0);
    return setup;
  }

  if (name == "lorenz") {
    SystemSpec sys;
    sys.name = "lorenz";
    sys.dimension = 3;
    sys.params = {{"sigma", merged(overrides, "sigma", 10.0)},
                  {"rho", merged(overrides, "rho", 28.0)},
                  {"beta", merged(overrides, "beta", 8.0 / 3.0)},
                  {"epsilon", eps}};
    sys.state_labels = {"x", "y", "z"};
    sys.rhs_fn = [](double, const Eigen::VectorXd& s, const ParamMap& p) {
      const double sigma = param(p, "sigma");
      const double rho = param(p, "rho");
      const double beta = param(p, "beta");
      const double eps = param(p, "epsilon");
      const double x = s[0], y = s[1], z = s[2];
      Eigen::VectorXd d(3);
      d[0] = sigma * (y - x) + eps * x * x * x;
      d[1] = x * (rho - z) - y;
      d[2] = x * y - beta * z;
      return d;
    };
    setup.system = std::move(sys);
    setup.x0 = Eigen::Vector3d(-8.0, 8.0, 27.0);
    return setup;
  }

  if (name == "burgers") {
    const auto n = static_cast<Eigen::Index>(merged(overrides, "grid_points", 256.0));
    const double x_lo = -8.0, x_hi = 8.0;  // periodic box
    const double dx = (x_hi - x_lo) / double(n);
    SystemSpec sys;
    sys.name = "burgers";
    sys.dimension = n;
    sys.params = {{"nu", merged(overrides, "nu", 0.1)},
                  {"epsilon", eps},
                  {"dx", dx}};
    sys.state_labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      sys.state_labels[i] = "u" + std::to_string(i);
    }
    // u_t = -u u_x + nu u_xx (- eps u^3), 2nd-order central differences.
    sys.rhs_fn = [n](double, const Eigen::VectorXd& u, const ParamMap& p) {
      const double nu = param(p, "nu");
      const double eps = param(p, "epsilon");
      const double dx = param(p, "dx");
      Eigen::VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index im = (i == 0) ? n - 1 : i - 1;
        const Eigen::Index ip = (i == n - 1) ? 0 : i + 1;
        const double ux = (u[ip] - u[im]) / (2.0 * dx);
        const double uxx = (u[ip] - 2.0 * u[i] + u[im]) / (dx * dx);
        d[i] = -u[i] * ux + nu * uxx - eps * u[i] * u[i] * u[i];
      }
      return d;
    };
    setup.system = std::move(sys);
    setup.x0.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = x_lo + double(i) * dx;
      setup.x0[i] = std::exp(-(x + 2.0) * (x + 2.0));
    }
    return setup;
  }

  throw UnknownSystem(name);
}

// ---------------------------------------------------------------------------
// Measurement noise
// ---------------------------------------------------------------------------

namespace {

// Box-Muller on top of mt19937_64 so that a seed maps to the same byte
// stream on every platform.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform01() { return double(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

TrajectoryMatrix add_noise(const TrajectoryMatrix& clean, const NoiseSpec& spec) {
  if (spec.level_percent < 0) {
    throw std::invalid_argument("add_noise: level_percent must be >= 0");
  }
  if (spec.level_percent == 0.0) return clean;

  TrajectoryMatrix noisy = clean;
  const Eigen::Index m = clean.samples();
  GaussianStream gauss(spec.seed);
  for (Eigen::Index j = 0; j < clean.dim(); ++j) {
    const double mean = clean.values.col(j).mean();
    const double var =
        (clean.values.col(j).array() - mean).square().sum() / double(m - 1);
    const double sigma = spec.level_percent / 100.0 * std::sqrt(var);
    for (Eigen::Index i = 0; i < m; ++i) {
      noisy.values(i, j) += sigma * gauss.next();
    }
  }
  return noisy;
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

// Moving local least-squares polynomial smoother (Savitzky-Golay). Edge
// samples are taken from the polynomial fitted to the first/last window.
Eigen::MatrixXd local_poly_smooth(const Eigen::MatrixXd& values, int window,
                                  int degree) {
  const Eigen::Index m = values.rows();
  if (window >= m) throw WindowTooLarge("smoothing window >= sample count");
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("local_poly window must be odd and >= 3");
  }
  if (degree < 0 || degree >= window) {
    throw std::invalid_argument("local_poly degree must be in [0, window)");
  }

  const int half = window / 2;
  // Centered design: pinv.row(0) gives the smoothing weights for the window
  // center; the edge design (offsets 0..window-1) evaluates the window-wide
  // fit at every in-window offset, used verbatim for both edges.
  Eigen::MatrixXd design(window, degree + 1);
  Eigen::MatrixXd edge_design(window, degree + 1);
  for (int i = 0; i < window; ++i) {
    double pc = 1.0, pe = 1.0;
    for (int j = 0; j <= degree; ++j) {
      design(i, j) = pc;
      edge_design(i, j) = pe;
      pc *= double(i - half);
      pe *= double(i);
    }
  }
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(window, window);
  const Eigen::VectorXd center_w =
      design.colPivHouseholderQr().solve(identity).row(0);
  const Eigen::MatrixXd edge_fit =
      edge_design * edge_design.colPivHouseholderQr().solve(identity);

  Eigen::MatrixXd out(m, values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    for (Eigen::Index i = half; i < m - half; ++i) {
      out(i, c) = center_w.dot(values.col(c).segment(i - half, window));
    }
    out.col(c).head(half) =
        (edge_fit * values.col(c).head(window)).head(half);
    out.col(c).tail(half) =
        (edge_fit * values.col(c).tail(window)).tail(half);
  }
  return out;
}

}  // namespace

TrajectoryMatrix differentiate(const TrajectoryMatrix& traj,
                               const Smoothing& smoothing) {
  const Eigen::Index m = traj.samples();
  if (m < 5) throw std::invalid_argument("differentiate: need at least 5 samples");
  const double h = traj.dt();

  Eigen::MatrixXd v = traj.values;
  if (smoothing.kind == Smoothing::Kind::local_poly) {
    v = local_poly_smooth(v, smoothing.window, smoothing.degree);
  }

  TrajectoryMatrix out;
  out.times = traj.times;
  out.labels = traj.labels;
  out.values.resize(m, traj.dim());
  for (Eigen::Index c = 0; c < traj.dim(); ++c) {
    out.values(0, c) = (-3.0 * v(0, c) + 4.0 * v(1, c) - v(2, c)) / (2.0 * h);
    out.values(1, c) = (v(2, c) - v(0, c)) / (2.0 * h);
    for (Eigen::Index i = 2; i < m - 2; ++i) {
      out.values(i, c) = (-v(i + 2, c) + 8.0 * v(i + 1, c) - 8.0 * v(i - 1, c) +
                          v(i - 2, c)) /
                         (12.0 * h);
    }
    out.values(m - 2, c) = (v(m - 1, c) - v(m - 3, c)) / (2.0 * h);
    out.values(m - 1, c) =
        (3.0 * v(m - 1, c) - 4.0 * v(m - 2, c) + v(m - 3, c)) / (2.0 * h);
  }
  return out;
}

}  // namespace disclab::dynsys
