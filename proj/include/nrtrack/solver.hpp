#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCholesky>

#include "nrtrack/energy.hpp"

namespace nrtrack {

struct SolverConfig {
  EnergyParams params;
  int maxIterations = 100;
  double convergenceTol = 0.01;   // max per-iteration vertex displacement
  int refreshDataTermsEvery = 1;  // iterations between depth / boundary target refreshes

  void validate() const;
};

/// Cholesky factor of K + alpha I, computed once and reused for every solve.
class FactoredSystem {
 public:
  FactoredSystem(const SparseMatrix& K, double alpha);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  const SparseMatrix& matrix() const { return matrix_; }
  double alpha() const { return alpha_; }
  Eigen::Index size() const { return matrix_.rows(); }

 private:
  SparseMatrix matrix_;
  double alpha_;
  std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

FactoredSystem prefactor(const SparseMatrix& K, double alpha);

/// Weighted data-term gradient lambda_C dC + lambda_D dD + lambda_B dB at the
/// previous iterate. Depth only ever contributes to z.
struct DataForces {
  Gradient weighted;
  EnergyBreakdown energy;  // breakdown at the state the forces were taken from
};

/// Frozen data targets. Depth samples and boundary points are re-read from
/// the frame on refresh; correspondences stay fixed for the whole frame.
struct DataTargets {
  DepthTargets depth;
  BoundaryTargets boundary;
};

DataTargets evaluate_targets(const MeshState& state, const EnergyInputs& inputs, const EnergyParams& params);

DataForces assemble_data_forces(const MeshState& state, const EnergyInputs& inputs, const DataTargets& targets,
                                const EnergyParams& params);

/// One semi-implicit step: (K + alpha I) X_t = alpha X_{t-1} - forces.x, same for Y and Z.
MeshState iterate(const MeshState& previous, const FactoredSystem& system, const DataForces& forces);

struct FrameSolution {
  MeshState state;
  std::vector<EnergyBreakdown> trace;  // trace[0] at the initial state, trace[k] after iteration k
  int iterations = 0;
  bool converged = false;
};

/// Minimise the full energy for one frame starting from `init`. Throws Diverged.
FrameSolution solve_frame(const MeshState& init, const EnergyInputs& inputs, const FactoredSystem& system,
                          const SolverConfig& config);

/// Largest per-vertex Euclidean displacement between two states.
double max_displacement(const MeshState& a, const MeshState& b);

}  // namespace nrtrack
