#include "missoc/lp_simplex.hpp"

#include <cmath>
#include <limits>

#include "missoc/errors.hpp"

namespace missoc::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Where { Basic, AtLower, AtUpper, Free };

class Tableau {
 public:
  Tableau(const Problem& p, const Options& o) : prob_(p), opt_(o) {}

  Result run() {
    Result res;
    setup();
    if (artificials_ > 0) {
      Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
      cost.tail(artificials_).setOnes();
      const Status s1 = iterate(cost, res);
      if (s1 == Status::IterationLimit) {
        res.status = s1;
        return res;
      }
      double infeas = 0.0;
      for (int k = 0; k < artificials_; ++k) infeas += value_of(n_ + m_ + k);
      if (infeas > 1e-7 * (1.0 + prob_.b.lpNorm<Eigen::Infinity>())) {
        res.status = Status::Infeasible;
        return res;
      }
      for (int k = 0; k < artificials_; ++k) upper_[n_ + m_ + k] = 0.0;
    }
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
    cost.head(n_) = prob_.c;
    res.status = iterate(cost, res);
    res.x.resize(n_);
    for (int j = 0; j < n_; ++j) res.x[j] = std::clamp(value_of(j), lower_[j], upper_[j]);
    res.objective = prob_.c.dot(res.x);
    return res;
  }

 private:
  double value_of(int j) const {
    switch (where_[j]) {
      case Where::Basic: return beta_[row_of_[j]];
      case Where::AtLower: return lower_[j];
      case Where::AtUpper: return upper_[j];
      case Where::Free: return 0.0;
    }
    return 0.0;
  }

  void setup() {
    n_ = prob_.variables();
    m_ = prob_.rows();
    lower_.resize(n_ + m_);
    upper_.resize(n_ + m_);
    lower_.head(n_) = prob_.lower;
    upper_.head(n_) = prob_.upper;
    for (int i = 0; i < m_; ++i) {
      switch (prob_.sense[i]) {
        case RowSense::LessEqual: lower_[n_ + i] = 0.0; upper_[n_ + i] = kInf; break;
        case RowSense::GreaterEqual: lower_[n_ + i] = -kInf; upper_[n_ + i] = 0.0; break;
        case RowSense::Equal: lower_[n_ + i] = 0.0; upper_[n_ + i] = 0.0; break;
      }
    }
    where_.assign(static_cast<std::size_t>(n_ + m_), Where::AtLower);
    Eigen::VectorXd xn = Eigen::VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lower_[j])) {
        where_[j] = Where::AtLower;
        xn[j] = lower_[j];
      } else if (std::isfinite(upper_[j])) {
        where_[j] = Where::AtUpper;
        xn[j] = upper_[j];
      } else {
        where_[j] = Where::Free;
      }
    }
    const Eigen::VectorXd r = prob_.b - prob_.A * xn;
    // Rows whose slack cannot absorb the residual get an artificial column.
    std::vector<int> art_rows;
    std::vector<double> art_sign;
    std::vector<double> slack_value(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const double lo = lower_[n_ + i], hi = upper_[n_ + i];
      if (r[i] >= lo - opt_.feasibility_tol && r[i] <= hi + opt_.feasibility_tol) {
        slack_value[i] = r[i];
      } else {
        const double s = std::isfinite(lo) && r[i] < lo ? lo : hi;
        slack_value[i] = s;
        art_rows.push_back(i);
        art_sign.push_back(r[i] - s >= 0 ? 1.0 : -1.0);
      }
    }
    artificials_ = static_cast<int>(art_rows.size());
    cols_ = n_ + m_ + artificials_;
    lower_.conservativeResize(cols_);
    upper_.conservativeResize(cols_);
    where_.resize(static_cast<std::size_t>(cols_), Where::AtLower);
    for (int k = 0; k < artificials_; ++k) {
      lower_[n_ + m_ + k] = 0.0;
      upper_[n_ + m_ + k] = kInf;
    }
    // Row i of [A I Art] x = b; the basis starts as slacks or artificials.
    T_.setZero(m_, cols_);
    T_.leftCols(n_) = prob_.A;
    for (int i = 0; i < m_; ++i) T_(i, n_ + i) = 1.0;
    for (int k = 0; k < artificials_; ++k) T_(art_rows[k], n_ + m_ + k) = art_sign[k];
    basis_.assign(static_cast<std::size_t>(m_), -1);
    row_of_.assign(static_cast<std::size_t>(cols_), -1);
    beta_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      where_[n_ + i] = Where::Basic;
      basis_[i] = n_ + i;
      beta_[i] = slack_value[i];
    }
    for (int k = 0; k < artificials_; ++k) {
      const int i = art_rows[k];
      const int slack = n_ + i;
      const double s = slack_value[i];
      where_[slack] = s == lower_[slack] ? Where::AtLower : Where::AtUpper;
      const int art = n_ + m_ + k;
      // Make the artificial basic in row i: divide the row by its sign.
      T_.row(i) *= art_sign[k];
      where_[art] = Where::Basic;
      basis_[i] = art;
      beta_[i] = std::abs(r[i] - s);
    }
    for (int i = 0; i < m_; ++i) row_of_[basis_[i]] = i;
  }

  Status iterate(const Eigen::VectorXd& cost, Result& res) {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
    Eigen::VectorXd d = cost - T_.transpose() * cb;
    int degenerate = 0;
    bool bland = false;
    while (true) {
      if (res.iterations >= opt_.max_iterations) return Status::IterationLimit;
      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        const Where w = where_[j];
        if (w == Where::Basic) continue;
        if (lower_[j] == upper_[j]) continue;
        double score = 0.0;
        if ((w == Where::AtLower || w == Where::Free) && d[j] < -opt_.optimality_tol) score = -d[j];
        if ((w == Where::AtUpper || w == Where::Free) && d[j] > opt_.optimality_tol) score = d[j];
        if (score <= 0.0) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
        }
      }
      if (enter < 0) return Status::Optimal;
      const double dir = d[enter] < 0 ? 1.0 : -1.0;
      // Basic i moves by -dir * T(i, enter) per unit step.
      double theta = upper_[enter] - lower_[enter];
      int leave = -1;
      bool leave_to_upper = false;
      double pivot_mag = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const double delta = -dir * a;
        const int bv = basis_[i];
        double t = kInf;
        bool to_upper = false;
        if (delta < 0 && std::isfinite(lower_[bv])) {
          t = std::max(0.0, beta_[i] - lower_[bv]) / -delta;
        } else if (delta > 0 && std::isfinite(upper_[bv])) {
          t = std::max(0.0, upper_[bv] - beta_[i]) / delta;
          to_upper = true;
        }
        if (!std::isfinite(t)) continue;
        const bool better = t < theta - 1e-12 ||
                            (t <= theta + 1e-12 && leave >= 0 &&
                             (bland ? bv < basis_[leave] : std::abs(a) > pivot_mag));
        if (better || (leave < 0 && t <= theta)) {
          theta = t;
          leave = i;
          leave_to_upper = to_upper;
          pivot_mag = std::abs(a);
        }
      }
      if (!std::isfinite(theta)) return Status::Unbounded;
      ++res.iterations;
      if (theta <= 1e-12) {
        if (++degenerate >= opt_.degenerate_switch) {
          bland = true;
          res.used_bland = true;
        }
      } else {
        degenerate = 0;
        bland = false;
      }
      const double start = value_of(enter);
      beta_ -= dir * theta * T_.col(enter);
      if (leave < 0) {
        where_[enter] = dir > 0 ? Where::AtUpper : Where::AtLower;
        continue;
      }
      const int out = basis_[leave];
      where_[out] = leave_to_upper ? Where::AtUpper : Where::AtLower;
      row_of_[out] = -1;
      const double piv = T_(leave, enter);
      T_.row(leave) /= piv;
      const Eigen::VectorXd col = T_.col(enter);
      const Eigen::RowVectorXd prow = T_.row(leave);
      for (int i = 0; i < m_; ++i) {
        if (i != leave && col[i] != 0.0) T_.row(i).noalias() -= col[i] * prow;
      }
      d -= d[enter] * prow.transpose();
      basis_[leave] = enter;
      row_of_[enter] = leave;
      where_[enter] = Where::Basic;
      beta_[leave] = start + dir * theta;
    }
  }

  const Problem& prob_;
  const Options& opt_;
  int n_ = 0, m_ = 0, cols_ = 0, artificials_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> T_;
  Eigen::VectorXd beta_, lower_, upper_;
  std::vector<Where> where_;
  std::vector<int> basis_, row_of_;
};

}  // namespace

int Problem::add_row(const Eigen::Ref<const Eigen::VectorXd>& a, RowSense s, double rhs) {
  const int i = rows();
  A.conservativeResize(i + 1, c.size());
  A.row(i) = a.transpose();
  b.conservativeResize(i + 1);
  b[i] = rhs;
  sense.push_back(s);
  return i;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

Result solve(const Problem& problem, const Options& options) {
  const int n = problem.variables();
  if (problem.A.cols() != n && problem.rows() > 0) throw SizeMismatchError("LP matrix column count");
  if (problem.A.rows() != problem.rows() || static_cast<int>(problem.sense.size()) != problem.rows() ||
      problem.lower.size() != n || problem.upper.size() != n) {
    throw SizeMismatchError("LP dimensions are inconsistent");
  }
  for (int j = 0; j < n; ++j) {
    if (problem.lower[j] > problem.upper[j]) {
      Result r;
      r.status = Status::Infeasible;
      return r;
    }
  }
  return Tableau(problem, options).run();
}

}  // namespace missoc::lp
