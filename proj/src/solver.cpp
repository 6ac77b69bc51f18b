#include "nrtrack/solver.hpp"

#include <cmath>

#include "nrtrack/error.hpp"

namespace nrtrack {

void SolverConfig::validate() const {
  params.validate();
  if (maxIterations < 1) throw Error(ErrorCode::InvalidArgument, "maxIterations must be >= 1");
  if (!(convergenceTol > 0)) throw Error(ErrorCode::InvalidArgument, "convergenceTol must be > 0");
  if (refreshDataTermsEvery < 1) throw Error(ErrorCode::InvalidArgument, "refreshDataTermsEvery must be >= 1");
}

FactoredSystem::FactoredSystem(const SparseMatrix& K, double alpha) : alpha_(alpha) {
  if (!(alpha > 0)) throw Error(ErrorCode::NotPositiveDefinite, "alpha must be > 0");
  if (K.rows() != K.cols()) throw Error(ErrorCode::InvalidArgument, "K must be square");
  SparseMatrix identity(K.rows(), K.cols());
  identity.setIdentity();
  matrix_ = K + alpha * identity;
  matrix_.makeCompressed();
  auto llt = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
  llt->compute(matrix_);
  if (llt->info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorisation of K + alpha I failed");
  llt_ = std::move(llt);
}

Eigen::VectorXd FactoredSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) throw Error(ErrorCode::InvalidArgument, "right-hand side has the wrong size");
  Eigen::VectorXd x = llt_->solve(rhs);
  if (llt_->info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "triangular solve failed");
  return x;
}

FactoredSystem prefactor(const SparseMatrix& K, double alpha) { return FactoredSystem(K, alpha); }

DataTargets evaluate_targets(const MeshState& state, const EnergyInputs& inputs, const EnergyParams& params) {
  DataTargets t;
  if (params.lambdaD > 0 && inputs.frame) t.depth = sample_depth_targets(state, *inputs.frame);
  if (params.lambdaB > 0 && inputs.frame && inputs.segmentation)
    t.boundary = boundary_targets(state, inputs.mesh, *inputs.segmentation, *inputs.frame);
  return t;
}

DataForces assemble_data_forces(const MeshState& state, const EnergyInputs& inputs, const DataTargets& targets,
                                const EnergyParams& params) {
  DataForces f;
  f.weighted = Gradient(state.size());
  const double smooth = psi_smoothness(state, inputs.mesh).value;
  double corr = 0.0, depth = 0.0, bound = 0.0;

  if (!inputs.correspondences.empty()) {
    const TermResult c = psi_correspondence(state, inputs.correspondences);
    corr = c.value;
    if (params.lambdaC > 0) {
      f.weighted.x += params.lambdaC * c.gradient.x;
      f.weighted.y += params.lambdaC * c.gradient.y;
      f.weighted.z += params.lambdaC * c.gradient.z;
    }
  }
  if (!targets.depth.empty()) {
    const TermResult d = psi_depth(state, targets.depth, params.occlusionThreshold);
    depth = d.value;
    f.weighted.z += params.lambdaD * d.gradient.z;
  }
  if (!targets.boundary.empty()) {
    const TermResult b = psi_boundary(state, inputs.mesh, targets.boundary);
    bound = b.value;
    f.weighted.x += params.lambdaB * b.gradient.x;
    f.weighted.y += params.lambdaB * b.gradient.y;
    f.weighted.z += params.lambdaB * b.gradient.z;
  }
  f.energy = combine(smooth, corr, depth, bound, params);
  return f;
}

MeshState iterate(const MeshState& previous, const FactoredSystem& system, const DataForces& forces) {
  const double a = system.alpha();
  MeshState next;
  next.x = system.solve(a * previous.x - forces.weighted.x);
  next.y = system.solve(a * previous.y - forces.weighted.y);
  next.z = system.solve(a * previous.z - forces.weighted.z);
  return next;
}

double max_displacement(const MeshState& a, const MeshState& b) {
  const Eigen::ArrayXd d2 = (a.x - b.x).array().square() + (a.y - b.y).array().square() + (a.z - b.z).array().square();
  return d2.size() ? std::sqrt(d2.maxCoeff()) : 0.0;
}

FrameSolution solve_frame(const MeshState& init, const EnergyInputs& inputs, const FactoredSystem& system,
                          const SolverConfig& config) {
  config.validate();
  if (init.size() != system.size()) throw Error(ErrorCode::InvalidArgument, "state does not match the factored system");

  FrameSolution out;
  out.state = init;
  DataTargets targets = evaluate_targets(out.state, inputs, config.params);
  DataForces forces = assemble_data_forces(out.state, inputs, targets, config.params);
  out.trace.push_back(forces.energy);

  for (int it = 1; it <= config.maxIterations; ++it) {
    MeshState next = iterate(out.state, system, forces);
    if (!next.all_finite()) throw Error(ErrorCode::Diverged, "non-finite vertex after iteration " + std::to_string(it));
    const double moved = max_displacement(next, out.state);
    out.state = std::move(next);
    out.iterations = it;
    if (it % config.refreshDataTermsEvery == 0) targets = evaluate_targets(out.state, inputs, config.params);
    forces = assemble_data_forces(out.state, inputs, targets, config.params);
    out.trace.push_back(forces.energy);
    if (moved < config.convergenceTol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace nrtrack
