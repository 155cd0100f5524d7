#include "nbvcalib/infogain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

double unit_entropy() {
  return 0.5 * kParamDim * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

double entropy_from_information(const Matrix12& information, double covariance_scale) {
  if (!(covariance_scale > 0.0) || !information.allFinite()) {
    throw CalibrationError(ErrorCode::kSingularInformation, "non-finite information or bad scale");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix12> es(information, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(kParamDim - 1);
  if (!(lo > 0.0) || hi >= kMaxInformationCondition * lo) {
    std::ostringstream msg;
    msg << "information matrix is singular (eigenvalues in [" << lo << ", " << hi << "])";
    throw CalibrationError(ErrorCode::kSingularInformation, msg.str());
  }
  const Eigen::LLT<Matrix12> llt(information);
  if (llt.info() != Eigen::Success) {
    throw CalibrationError(ErrorCode::kSingularInformation, "Cholesky factorization failed");
  }
  // ln det(Sigma) = 12 ln(scale) - ln det(information)
  const double logdet_info = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return unit_entropy() + 0.5 * (kParamDim * std::log(covariance_scale) - logdet_info);
}

CovarianceEstimate fim_covariance_from_information(const Matrix12& information,
                                                   double covariance_scale) {
  CovarianceEstimate out;
  out.entropy = entropy_from_information(information, covariance_scale);
  out.covariance = covariance_scale * information.llt().solve(Matrix12::Identity());
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

CovarianceEstimate fim_covariance(const Eigen::MatrixXd& jacobian, double covariance_scale) {
  if (jacobian.cols() != kParamDim) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "Jacobian must have 12 columns");
  }
  const Matrix12 information = jacobian.transpose() * jacobian;
  return fim_covariance_from_information(information, covariance_scale);
}

InfoState make_info_state(const Matrix12& information, std::size_t set_count,
                          double covariance_scale) {
  const CovarianceEstimate c = fim_covariance_from_information(information, covariance_scale);
  return {information, c.covariance, c.entropy, set_count, covariance_scale};
}

InfoState information_state(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                            const TargetBoard& board, const CameraIntrinsics& K,
                            double covariance_scale) {
  return make_info_state(accumulate_information(theta, sets, board, K), sets.size(),
                         covariance_scale);
}

CandidateScore predict_information_gain(const InfoState& current, const CalibrationParams& theta,
                                        const Pose& candidate, const TargetBoard& board,
                                        const CameraIntrinsics& K, std::size_t index) {
  const std::vector<PixelObservation> predicted = predict_observations(theta, candidate, board, K);
  if (predicted.size() < kMinVisibleMarkers) {
    throw CalibrationError(ErrorCode::kCandidateInvisible,
                           "candidate " + std::to_string(index) + " sees " +
                               std::to_string(predicted.size()) + " markers");
  }
  std::vector<int> ids;
  ids.reserve(predicted.size());
  for (const auto& o : predicted) ids.push_back(o.marker_id);
  const JacobianBlock block = jacobian_block(theta, candidate, ids, board, K);

  CandidateScore score;
  score.index = index;
  score.visible_markers = ids.size();
  score.predicted_entropy =
      entropy_from_information(current.information + block.information(), current.covariance_scale);
  score.information_gain = current.entropy - score.predicted_entropy;
  return score;
}

CandidateScore predict_information_gain(const CalibrationParams& theta,
                                        std::span<const MeasurementSet> collected,
                                        const Pose& candidate, const TargetBoard& board,
                                        const CameraIntrinsics& K) {
  const InfoState current = information_state(theta, collected, board, K);
  return predict_information_gain(current, theta, candidate, board, K);
}

std::vector<CandidateScore> score_candidates(const InfoState& current,
                                             const CalibrationParams& theta,
                                             const CandidateSet& candidates,
                                             const TargetBoard& board, const CameraIntrinsics& K,
                                             std::span<const std::size_t> excluded) {
  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
    try {
      scores.push_back(predict_information_gain(current, theta, candidates.poses[i], board, K, i));
    } catch (const CalibrationError& e) {
      if (e.code() != ErrorCode::kCandidateInvisible && e.code() != ErrorCode::kBehindCamera) throw;
    }
  }
  return scores;
}

std::size_t argmax_gain(std::span<const CandidateScore> scores) {
  if (scores.empty()) {
    throw CalibrationError(ErrorCode::kNoEvaluableCandidates, "no candidate could be scored");
  }
  const CandidateScore* best = &scores.front();
  for (const auto& s : scores) {
    if (s.information_gain > best->information_gain ||
        (s.information_gain == best->information_gain && s.index < best->index)) {
      best = &s;
    }
  }
  return best->index;
}

NbvSelection select_nbv(const CalibrationParams& theta, const InfoState& current,
                        const CandidateSet& candidates, const TargetBoard& board,
                        const CameraIntrinsics& K, std::span<const std::size_t> excluded) {
  NbvSelection sel;
  sel.scores = score_candidates(current, theta, candidates, board, K, excluded);
  sel.best = argmax_gain(sel.scores);
  return sel;
}

NbvSelection select_nbv(const CalibrationParams& theta, std::span<const MeasurementSet> collected,
                        const CandidateSet& candidates, const TargetBoard& board,
                        const CameraIntrinsics& K) {
  return select_nbv(theta, information_state(theta, collected, board, K), candidates, board, K);
}

}  // namespace nbvcalib
