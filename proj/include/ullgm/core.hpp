#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ullgm {

/// Every stochastic routine takes one of these by reference.
using Rng = std::mt19937_64;

/// Independent stream for (seed, stream) pairs; used for per-chain and
/// per-observation substreams.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

enum class Family { PLN, BiL, NBL };

/// Outcome family. NBL carries its fixed number of successes r.
struct FamilyTag {
  Family kind = Family::PLN;
  int r = 0;

  static FamilyTag pln() { return {Family::PLN, 0}; }
  static FamilyTag bil() { return {Family::BiL, 0}; }
  static FamilyTag nbl(int r);

  std::string name() const;
  bool operator==(const FamilyTag&) const = default;
};

FamilyTag parse_family(const std::string& name, int r = 0);

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PosteriorImproprietyRisk : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateZ : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the chain when any part of the state becomes non-finite.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counts y, optional trials (BiL), raw covariates X (n x p).
struct Dataset {
  std::vector<int> y;
  std::optional<std::vector<int>> trials;
  Eigen::MatrixXd X;
  FamilyTag family;
  std::vector<std::string> names;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
  int trials_at(int i) const { return trials ? (*trials)[i] : 0; }
  std::string covariate_name(int j) const;
};

struct ValidationReport {
  enum class Status { Ok, StructuralError, PosteriorImproprietyRisk };
  Status status = Status::Ok;
  std::string message;

  bool ok() const { return status == Status::Ok; }
};

/// Structural checks plus the count conditions required for a proper
/// posterior: PLN/NBL need two nonzero counts, BiL two counts strictly
/// between 0 and N_i.
ValidationReport validate_dataset(const Dataset& d);

/// Throws StructuralError or PosteriorImproprietyRisk on a failed report.
void require_valid(const Dataset& d);

enum class Standardization { Center, ZScore };

std::string to_string(Standardization s);

/// Centered (optionally unit-variance) design. The Gram matrix of the
/// transformed columns is cached because every model evaluation needs a
/// principal submatrix of it.
struct CenteredDesign {
  Eigen::MatrixXd Xc;
  Eigen::VectorXd col_means;
  Eigen::VectorXd col_scales;
  Eigen::MatrixXd gram;
  Standardization mode = Standardization::Center;

  int n() const { return static_cast<int>(Xc.rows()); }
  int p() const { return static_cast<int>(Xc.cols()); }

  /// Applies the training-time centering and scaling to new rows.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X_new) const;
};

CenteredDesign center_design(const Eigen::MatrixXd& X);
CenteredDesign standardize_design(const Eigen::MatrixXd& X, Standardization mode);

/// Inclusion pattern over p candidate covariates. Keeps index lists of the
/// included and excluded positions so a uniformly chosen member of either
/// set costs O(1).
class ModelIndicator {
 public:
  ModelIndicator() = default;
  explicit ModelIndicator(int p);

  static ModelIndicator from_indices(int p, const std::vector<int>& included);
  static ModelIndicator from_bit_string(const std::string& bits);

  int p() const { return static_cast<int>(bits_.size()); }
  int size() const { return static_cast<int>(included_.size()); }
  bool includes(int j) const { return bits_[j] != 0; }

  void add(int j);
  void remove(int j);

  /// Included positions in insertion order (not sorted).
  const std::vector<int>& included() const { return included_; }
  const std::vector<int>& excluded() const { return excluded_; }
  std::vector<int> sorted_included() const;

  /// '1'/'0' per covariate, covariate 1 first.
  std::string bit_string() const;

  bool operator==(const ModelIndicator& other) const { return bits_ == other.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
  std::vector<int> included_;
  std::vector<int> excluded_;
  std::vector<int> slot_;  // position of j inside included_ or excluded_
};

/// Lower Cholesky factor of X_k'X_k for the included columns, or nullopt
/// when (iota : X_k) is not of full column rank. Pivots must exceed
/// 1e-10 times the average diagonal of X_k'X_k; near-singular Gram
/// matrices are refactored through a Householder QR of X_k.
std::optional<Eigen::MatrixXd> factorize_model(const CenteredDesign& design,
                                               const ModelIndicator& model);

bool rank_ok(const ModelIndicator& model, const CenteredDesign& design, int n);

/// Full chain state of the Gaussian layer.
struct GaussianLayerState {
  Eigen::VectorXd z;
  double alpha = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  double g = 1.0;
};

struct GPrior {
  enum class Kind { UnitInformation, Fixed, HyperGOverN };
  Kind kind = Kind::UnitInformation;
  double value = 0.0;  // g0 for Fixed, a for HyperGOverN

  static GPrior unit_information() { return {Kind::UnitInformation, 0.0}; }
  static GPrior fixed(double g0);
  static GPrior hyper_g_over_n(double a = 3.0);

  bool random() const { return kind == Kind::HyperGOverN; }
  std::string describe() const;
};

/// Parses "uip", "fixed:<g>" or "hyper-gn:<a>".
GPrior parse_gprior(const std::string& spec);

struct PriorConfig {
  GPrior gprior;
  /// Prior expected model size m; non-positive means p/2.
  double expected_model_size = 0.0;

  double resolved_model_size(int p) const;
};

void validate_prior(const PriorConfig& prior, int p);

}  // namespace ullgm
