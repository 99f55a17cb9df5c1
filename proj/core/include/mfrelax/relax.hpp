// Implicit-midpoint time stepping of the magneto-frictional system for four
// spatial discretizations:
//
//   sp        structure-preserving: B in H_0(div); E, j, H in H_0(curl)
//   hdiv_noH  as sp with the auxiliary H replaced by B itself
//   hcurl     B in H(curl) (no essential BC), u in H_0(div)
//   h1        B and u in (H1)^3 with zero normal component on the boundary
//
// Each step solves the monolithic stage system by Newton's method with an
// exact analytic Jacobian. Nonlinear forms use a 3x3x3 Gauss rule per cell.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mfrelax/derham.hpp"
#include "mfrelax/fields.hpp"
#include "mfrelax/linsolve.hpp"

namespace mfrelax {

enum class SchemeKind { sp, hdiv_noH, hcurl, h1 };

std::string to_string(SchemeKind kind);
SchemeKind scheme_from_string(const std::string& name);
/// Space carrying B for a scheme.
SpaceKind state_space(SchemeKind kind);

/// How the Newton correction of the sp and hdiv_noH stage systems is solved.
/// block_elimination eliminates the E, j, H rows exactly through the edge mass
/// matrix and factors a dense system in B only; automatic picks it up to 3000
/// face DOFs and the monolithic sparse LU above.
enum class LinearSolve { automatic, monolithic, block_elimination };

struct StepperConfig {
  double dt = 0.0;
  double tau = 0.0;
  double newton_abs_tol = 1e-10;
  int newton_max_iter = 20;
  int quadrature_points = 3;
  /// ||B0||_M of the run; the Newton tolerance is newton_abs_tol * max(1, this).
  double reference_norm = 1.0;
  /// Retry a failed step once as two half steps.
  bool halve_on_failure = false;
  LinearSolve linear_solve = LinearSolve::automatic;
};

struct SchemeState {
  double t = 0.0;
  FieldVec B;
  SchemeKind scheme = SchemeKind::sp;
};

/// Stage unknowns of sp (all four) and hdiv_noH (H left empty).
struct MidpointStage {
  FieldVec B_mid;  // face
  FieldVec E;      // edge
  FieldVec j;      // edge
  FieldVec H;      // edge
};

/// Stage unknowns of hcurl and h1.
struct InductionStage {
  FieldVec B_mid;
  FieldVec u;
};

struct StepReport {
  int newton_iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;
  MidpointStage stage;
  InductionStage induction;
  /// Energy decrease predicted by the stage values: E^n - E^{n+1}.
  double dissipation = 0.0;
  double wall_seconds = 0.0;
  double dt = 0.0;
  bool halved = false;
  bool converged = false;
};

class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, StepReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const StepReport& report() const { return report_; }

 private:
  StepReport report_;
};

class Stepper {
 public:
  Stepper(const DeRhamComplex& complex, const StepperConfig& config);

  const StepperConfig& config() const { return config_; }
  const DeRhamComplex& complex() const { return *complex_; }

  std::pair<SchemeState, StepReport> step(const SchemeState& state) const;

  Eigen::VectorXd residual_sp(const FieldVec& Bn, const MidpointStage& stage) const;
  SparseOperator jacobian_sp(const FieldVec& Bn, const MidpointStage& stage) const;
  Eigen::VectorXd residual_hdiv_noH(const FieldVec& Bn, const MidpointStage& stage) const;
  SparseOperator jacobian_hdiv_noH(const FieldVec& Bn, const MidpointStage& stage) const;
  Eigen::VectorXd residual_hcurl(const FieldVec& Bn, const InductionStage& stage) const;
  SparseOperator jacobian_hcurl(const FieldVec& Bn, const InductionStage& stage) const;
  Eigen::VectorXd residual_h1(const FieldVec& Bn, const InductionStage& stage) const;
  SparseOperator jacobian_h1(const FieldVec& Bn, const InductionStage& stage) const;

  /// Newton starting point: B_mid = B^n, auxiliaries from linear solves at B^n.
  MidpointStage initial_midpoint_stage(const FieldVec& Bn, bool with_H) const;
  InductionStage initial_induction_stage(const FieldVec& Bn, SchemeKind kind) const;

  /// J^-1 r for the sp (with_H) or hdiv_noH stage Jacobian, using the
  /// configured linear solve.
  Eigen::VectorXd midpoint_correction(const FieldVec& Bn, const MidpointStage& stage, bool with_H,
                                      const Eigen::VectorXd& r) const;
  bool uses_block_elimination() const;

  /// Quadrature value of ||j x H||^2 (H may be a face field for hdiv_noH).
  double lorentz_norm_sq(const FieldVec& j, const FieldVec& H) const;

  struct Tables;

 private:
  std::pair<SchemeState, StepReport> step_once(const SchemeState& state, double dt) const;

  const DeRhamComplex* complex_;
  StepperConfig config_;
  std::shared_ptr<const Tables> tables_;
};

Eigen::VectorXd residual_sp(const DeRhamComplex& complex, const FieldVec& Bn,
                            const MidpointStage& stage, const StepperConfig& config);
SparseOperator jacobian_sp(const DeRhamComplex& complex, const FieldVec& Bn,
                           const MidpointStage& stage, const StepperConfig& config);
std::pair<SchemeState, StepReport> step(const DeRhamComplex& complex, const SchemeState& state,
                                        const StepperConfig& config);

/// Initial state for a scheme: interpolation, followed by the divergence-free
/// projection for the face-space schemes.
SchemeState make_initial_state(const DeRhamComplex& complex, SchemeKind scheme,
                               const ICKind& ic);

/// B^T M B in the scheme's space.
double energy(const DeRhamComplex& complex, const FieldVec& B);

}  // namespace mfrelax
