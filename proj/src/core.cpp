#include "ullgm/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ullgm {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

FamilyTag FamilyTag::nbl(int r) {
  if (r < 1) throw std::invalid_argument("NBL requires a fixed r >= 1");
  return {Family::NBL, r};
}

std::string FamilyTag::name() const {
  switch (kind) {
    case Family::PLN: return "pln";
    case Family::BiL: return "bil";
    case Family::NBL: return "nbl";
  }
  return "unknown";
}

FamilyTag parse_family(const std::string& name, int r) {
  if (name == "pln") return FamilyTag::pln();
  if (name == "bil") return FamilyTag::bil();
  if (name == "nbl") return FamilyTag::nbl(r);
  throw std::invalid_argument("unknown family '" + name + "' (expected pln, bil or nbl)");
}

std::string Dataset::covariate_name(int j) const {
  if (j < static_cast<int>(names.size())) return names[j];
  return "x" + std::to_string(j + 1);
}

ValidationReport validate_dataset(const Dataset& d) {
  using Status = ValidationReport::Status;
  const auto fail = [](Status s, std::string msg) { return ValidationReport{s, std::move(msg)}; };

  const int n = d.n();
  if (n < 2) return fail(Status::StructuralError, "need at least two observations");
  if (d.p() < 1) return fail(Status::StructuralError, "need at least one candidate covariate");
  if (d.X.rows() != n) {
    return fail(Status::StructuralError, "covariate matrix has " + std::to_string(d.X.rows()) +
                                             " rows but there are " + std::to_string(n) +
                                             " outcomes");
  }
  for (int j = 0; j < d.p(); ++j) {
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(d.X(i, j))) {
        return fail(Status::StructuralError, "non-finite covariate value at row " +
                                                 std::to_string(i + 1) + ", column " +
                                                 d.covariate_name(j));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (d.y[i] < 0) {
      return fail(Status::StructuralError, "negative count at row " + std::to_string(i + 1));
    }
  }
  if (d.family.kind == Family::NBL && d.family.r < 1) {
    return fail(Status::StructuralError, "NBL requires r >= 1");
  }

  int informative = 0;
  if (d.family.kind == Family::BiL) {
    if (!d.trials || static_cast<int>(d.trials->size()) != n) {
      return fail(Status::StructuralError, "BiL requires one trial count per observation");
    }
    for (int i = 0; i < n; ++i) {
      const int N = (*d.trials)[i];
      if (N < 1) {
        return fail(Status::StructuralError, "trial count must be positive at row " +
                                                 std::to_string(i + 1));
      }
      if (d.y[i] > N) {
        return fail(Status::StructuralError,
                    "count exceeds trials at row " + std::to_string(i + 1));
      }
      if (d.y[i] > 0 && d.y[i] < N) ++informative;
    }
    if (informative < 2) {
      return fail(Status::PosteriorImproprietyRisk,
                  "BiL needs at least two observations with 0 < y_i < N_i (found " +
                      std::to_string(informative) + ")");
    }
  } else {
    informative = static_cast<int>(std::count_if(d.y.begin(), d.y.end(), [](int v) { return v > 0; }));
    if (informative < 2) {
      return fail(Status::PosteriorImproprietyRisk,
                  d.family.name() + " needs at least two nonzero observations (found " +
                      std::to_string(informative) + ")");
    }
  }
  return {};
}

void require_valid(const Dataset& d) {
  const auto report = validate_dataset(d);
  switch (report.status) {
    case ValidationReport::Status::Ok: return;
    case ValidationReport::Status::StructuralError: throw StructuralError(report.message);
    case ValidationReport::Status::PosteriorImproprietyRisk:
      throw PosteriorImproprietyRisk(report.message);
  }
}

std::string to_string(Standardization s) {
  return s == Standardization::Center ? "center" : "zscore";
}

Eigen::MatrixXd CenteredDesign::transform(const Eigen::MatrixXd& X_new) const {
  if (X_new.cols() != col_means.size()) {
    throw std::invalid_argument("new covariates have " + std::to_string(X_new.cols()) +
                                " columns, training design has " +
                                std::to_string(col_means.size()));
  }
  Eigen::MatrixXd out = X_new.rowwise() - col_means.transpose();
  return out.array().rowwise() / col_scales.transpose().array();
}

CenteredDesign center_design(const Eigen::MatrixXd& X) {
  return standardize_design(X, Standardization::Center);
}

CenteredDesign standardize_design(const Eigen::MatrixXd& X, Standardization mode) {
  CenteredDesign d;
  d.mode = mode;
  d.col_means = X.colwise().mean().transpose();
  d.Xc = X.rowwise() - d.col_means.transpose();
  d.col_scales = Eigen::VectorXd::Ones(X.cols());
  if (mode == Standardization::ZScore && X.rows() > 1) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double sd = std::sqrt(d.Xc.col(j).squaredNorm() / static_cast<double>(X.rows() - 1));
      // constant columns stay at zero and are excluded by the rank check
      if (sd > 0.0) {
        d.col_scales(j) = sd;
        d.Xc.col(j) /= sd;
      }
    }
  }
  d.gram = d.Xc.transpose() * d.Xc;
  return d;
}

ModelIndicator::ModelIndicator(int p) : bits_(p, 0), slot_(p) {
  excluded_.reserve(p);
  included_.reserve(p);
  for (int j = 0; j < p; ++j) {
    slot_[j] = j;
    excluded_.push_back(j);
  }
}

ModelIndicator ModelIndicator::from_indices(int p, const std::vector<int>& included) {
  ModelIndicator m(p);
  for (int j : included) {
    if (j < 0 || j >= p) throw std::out_of_range("covariate index out of range");
    if (!m.includes(j)) m.add(j);
  }
  return m;
}

ModelIndicator ModelIndicator::from_bit_string(const std::string& bits) {
  ModelIndicator m(static_cast<int>(bits.size()));
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] == '1') {
      m.add(static_cast<int>(j));
    } else if (bits[j] != '0') {
      throw std::invalid_argument("model bit string may only contain 0 and 1");
    }
  }
  return m;
}

void ModelIndicator::add(int j) {
  if (bits_[j]) return;
  const int s = slot_[j];
  const int last = excluded_.back();
  excluded_[s] = last;
  slot_[last] = s;
  excluded_.pop_back();
  slot_[j] = static_cast<int>(included_.size());
  included_.push_back(j);
  bits_[j] = 1;
}

void ModelIndicator::remove(int j) {
  if (!bits_[j]) return;
  const int s = slot_[j];
  const int last = included_.back();
  included_[s] = last;
  slot_[last] = s;
  included_.pop_back();
  slot_[j] = static_cast<int>(excluded_.size());
  excluded_.push_back(j);
  bits_[j] = 0;
}

std::vector<int> ModelIndicator::sorted_included() const {
  std::vector<int> out = included_;
  std::sort(out.begin(), out.end());
  return out;
}

std::string ModelIndicator::bit_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) s[j] = '1';
  }
  return s;
}

namespace {

bool pivots_ok(const Eigen::VectorXd& pivots, double tol) {
  return (pivots.array() > tol).all();
}

}  // namespace

std::optional<Eigen::MatrixXd> factorize_model(const CenteredDesign& design,
                                               const ModelIndicator& model) {
  const int pk = model.size();
  if (pk == 0) return design.n() >= 2 ? std::optional<Eigen::MatrixXd>(Eigen::MatrixXd(0, 0))
                                      : std::nullopt;
  // the intercept takes one degree of freedom
  if (pk >= design.n()) return std::nullopt;

  const auto& idx = model.included();
  Eigen::MatrixXd xtx(pk, pk);
  for (int a = 0; a < pk; ++a) {
    for (int b = 0; b < pk; ++b) xtx(a, b) = design.gram(idx[a], idx[b]);
  }
  const double tol = 1e-10 * xtx.trace() / pk;
  if (!(tol > 0.0)) return std::nullopt;

  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd L = llt.matrixL();
    if (pivots_ok(L.diagonal().array().square().matrix(), tol)) return L;
  }

  // Near-singular Gram matrix: R from a QR of X_k satisfies R'R = X_k'X_k
  // without squaring the condition number.
  Eigen::MatrixXd Xk(design.n(), pk);
  for (int a = 0; a < pk; ++a) Xk.col(a) = design.Xc.col(idx[a]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xk);
  Eigen::MatrixXd R = qr.matrixQR().topRows(pk).triangularView<Eigen::Upper>();
  if (!pivots_ok(R.diagonal().array().square().matrix(), tol)) return std::nullopt;
  for (int a = 0; a < pk; ++a) {
    if (R(a, a) < 0.0) R.row(a) *= -1.0;
  }
  return Eigen::MatrixXd(R.transpose());
}

bool rank_ok(const ModelIndicator& model, const CenteredDesign& design, int n) {
  if (model.size() >= n) return false;
  return factorize_model(design, model).has_value();
}

GPrior GPrior::fixed(double g0) {
  if (!(g0 > 0.0)) throw std::invalid_argument("fixed g must be positive");
  return {Kind::Fixed, g0};
}

GPrior GPrior::hyper_g_over_n(double a) {
  if (!(a > 2.0)) throw std::invalid_argument("hyper-g/n requires a > 2");
  return {Kind::HyperGOverN, a};
}

std::string GPrior::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::UnitInformation: os << "uip"; break;
    case Kind::Fixed: os << "fixed:" << value; break;
    case Kind::HyperGOverN: os << "hyper-gn:" << value; break;
  }
  return os.str();
}

GPrior parse_gprior(const std::string& spec) {
  if (spec == "uip") return GPrior::unit_information();
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  if (colon == std::string::npos) {
    if (head == "hyper-gn") return GPrior::hyper_g_over_n(3.0);
    throw std::invalid_argument("bad g-prior '" + spec + "'");
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad numeric value in g-prior '" + spec + "'");
  }
  if (head == "fixed") return GPrior::fixed(v);
  if (head == "hyper-gn") return GPrior::hyper_g_over_n(v);
  throw std::invalid_argument("bad g-prior '" + spec + "'");
}

double PriorConfig::resolved_model_size(int p) const {
  return expected_model_size > 0.0 ? expected_model_size : 0.5 * p;
}

void validate_prior(const PriorConfig& prior, int p) {
  const double m = prior.resolved_model_size(p);
  if (!(m > 0.0 && m < p)) {
    throw std::invalid_argument("expected model size must lie in (0, p)");
  }
  if (prior.gprior.kind == GPrior::Kind::Fixed && !(prior.gprior.value > 0.0)) {
    throw std::invalid_argument("fixed g must be positive");
  }
  if (prior.gprior.kind == GPrior::Kind::HyperGOverN && !(prior.gprior.value > 2.0)) {
    throw std::invalid_argument("hyper-g/n requires a > 2");
  }
}

}  // namespace ullgm
