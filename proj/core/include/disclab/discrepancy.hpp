#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "disclab/dmd.hpp"
#include "disclab/dynsys.hpp"
#include "disclab/gpr.hpp"
#include "disclab/nn.hpp"
#include "disclab/sindy.hpp"
#include "disclab/trajectory.hpp"

namespace disclab::discrepancy {

/// The two ways of building a discrepancy model: learn the missing physics
/// from the dynamical error and append it to the dynamics, or model the
/// systematic state-space residual and correct the solution pointwise.
enum class Approach { missing_physics, residual };

/// Discovery engines (plus two oracle stand-ins used for closure checks:
/// a closed-form state function and a trajectory lookup table).
enum class Method { sindy, dmd, gpr, nn, analytic, lookup };

std::string to_string(Approach a);
std::string to_string(Method m);
Approach approach_from_string(const std::string& s);
Method method_from_string(const std::string& s);

enum class SignalKind { dynamical_error, state_residual };

/// A discrepancy signal together with what a regressor should map from.
/// dynamical_error: signal = dy/dt of the measurements minus the approximate
/// dynamics evaluated on the measurements, inputs = the measurements.
/// state_residual: signal = measurements minus the approximate trajectory,
/// inputs = the approximate trajectory.
struct DiscrepancySignal {
  SignalKind kind = SignalKind::dynamical_error;
  TrajectoryMatrix signal;
  TrajectoryMatrix regressor_inputs;

  Approach approach() const {
    return kind == SignalKind::dynamical_error ? Approach::missing_physics
                                               : Approach::residual;
  }
};

struct SindyOptions {
  sindy::LibrarySpec library;
  double lambda = 0.0;  // <= 0: data-scaled default threshold
  int max_iter = 10;
};

struct GprOptions {
  int stride = 5;  // training subsample stride (cubic fit cost)
  double init_noise_variance = 1e-4;
  gpr::FitOptions fit;
};

struct NnOptions {
  std::vector<int> hidden = {64, 64};
  int epochs = 15000;
  int batch = 128;
  double lr = 1e-3;
  double l2 = 1e-6;
  std::uint64_t seed = 1;
};

struct EngineOptions {
  SindyOptions sindy;
  dmd::TrajectoryFitOptions dmd;
  GprOptions gpr;
  NnOptions nn;
};

struct FitMetadata {
  double training_rmse = 0.0;
  double fit_seconds = 0.0;
  bool rank_deficient = false;  // SINDy restricted regression was collinear
  bool descended = true;        // DMD optimization improved on exact DMD
};

/// A fitted discrepancy model G with a uniform predict interface. SINDy, GPR
/// and NN map state -> discrepancy; DMD (and lookup tables) are explicit
/// functions of time.
class DiscrepancyModel {
 public:
  struct SindyPayload {
    sindy::SparseCoefficients coeffs;
    sindy::LibrarySpec library;
  };
  struct DmdPayload {
    dmd::DmdModel model;
  };
  struct GprPayload {
    std::vector<gpr::GprModel> models;  // one independent GP per output
  };
  struct NnPayload {
    nn::MlpModel model;
  };
  struct AnalyticPayload {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn;
  };
  struct LookupPayload {
    TrajectoryMatrix table;
  };

  Method method = Method::sindy;
  Approach approach = Approach::missing_physics;
  FitMetadata metadata;
  std::variant<SindyPayload, DmdPayload, GprPayload, NnPayload, AnalyticPayload,
               LookupPayload>
      payload;

  bool time_based() const {
    return method == Method::dmd || method == Method::lookup;
  }

  Eigen::VectorXd predict_state(const Eigen::VectorXd& state) const;
  Eigen::VectorXd predict_time(double t) const;
  Eigen::VectorXd predict(double t, const Eigen::VectorXd& state) const {
    return time_based() ? predict_time(t) : predict_state(state);
  }
  /// Vectorized prediction along a trajectory (rows of `states` at `times`).
  Eigen::MatrixXd predict_batch(const Eigen::VectorXd& times,
                                const Eigen::MatrixXd& states) const;

  /// Closed-form oracle G (state -> correction), for closure checks.
  static DiscrepancyModel analytic(
      Approach approach, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn);
  /// Grid-lookup oracle G (time -> correction), for closure checks.
  static DiscrepancyModel lookup(Approach approach, TrajectoryMatrix table);
};

/// The augmented solution x~ over the experiment grid; the reconstruction
/// region is [t0, t_split], the forecast region (t_split, tf].
struct AugmentedSolution {
  TrajectoryMatrix x_tilde;
  Approach approach = Approach::missing_physics;
  double t0 = 0.0;
  double t_split = 0.0;
  double tf = 0.0;
};

/// Differentiates the measurements (smoothing as given), evaluates the
/// approximate dynamics along them and subtracts. The regressor inputs are
/// the measurements themselves.
DiscrepancySignal compute_dynamical_error(const TrajectoryMatrix& measurements,
                                          const dynsys::SystemSpec& approx,
                                          const dynsys::Smoothing& smoothing);

/// measurements - approx_traj on a shared grid; regressor inputs are the
/// approximate states. Throws GridMismatch for differing grids.
DiscrepancySignal compute_state_residual(const TrajectoryMatrix& measurements,
                                         const TrajectoryMatrix& approx_traj);

/// Dispatches to the chosen engine. SINDy/GPR/NN regress inputs -> signal;
/// DMD fits the signal's time evolution directly (delay-embedded).
DiscrepancyModel fit_discrepancy(const DiscrepancySignal& signal, Method method,
                                 const EngineOptions& options = {});

/// Integrates dx~/dt = f(x~, t) + G over t_span (G(x~) for state-based
/// models, G(t) for time-based ones). Throws ApproachMismatch unless G was
/// fitted for missing physics; IntegrationDiverged carries the blow-up time
/// when a learned G destabilizes the augmented system.
AugmentedSolution augment_missing_physics(const dynsys::SystemSpec& approx,
                                          const DiscrepancyModel& g,
                                          const Eigen::VectorXd& x0,
                                          std::pair<double, double> t_span,
                                          double dt,
                                          std::optional<double> t_split = {});

/// Pointwise correction x~(t) = x(t) + G(x(t)) (G(t) for time-based models);
/// no re-integration. Throws ApproachMismatch unless G targets the residual.
AugmentedSolution correct_state_space(const TrajectoryMatrix& approx_traj,
                                      const DiscrepancyModel& g,
                                      std::optional<double> t_split = {});

}  // namespace disclab::discrepancy
