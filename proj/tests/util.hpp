// Shared helpers for the test suite: reference constants computed with an
// independent high-precision tool, small custom targets and transforms with
// closed-form behavior, finite-difference and quadrature utilities, and a
// subprocess runner for CLI tests.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixflow/errors.hpp"
#include "mixflow/flow.hpp"
#include "mixflow/math.hpp"
#include "mixflow/state.hpp"
#include "mixflow/target.hpp"

namespace testutil {

// Reference values computed with 40-digit arithmetic (mpmath), rounded to
// nearest double. Each is the closed-form log-density / quantile named by
// the constant, independent of the library code under test.
namespace ref {
// log densities at fixed points
inline constexpr double kBananaAtOrigin = -54.14046215940339;
inline constexpr double kFunnel2AtOrigin = -3.6296365356374003;
inline constexpr double kGauss1dAt2 = -1.612085713764618;
inline constexpr double kCauchy1dAt0 = -1.1447298858494002;
inline constexpr double kGmm1dAt0 = -1.785647229627937;
inline constexpr double kCrossAt02 = -1.326716036270459;
inline constexpr double kWarpAtOrigin = 0.28238646979074555;
inline constexpr double kLinRegExample = -2.756815599614018;
inline constexpr double kLogRegExample = -6.227255899752709;
inline constexpr double kSparsePriorAt0 = 0.7004497100825957;
inline constexpr double kPoissonExample = -1.9785986343462825;
inline constexpr double kStudentTExample = -2.1133494749041244;
inline constexpr double kAugGauss1dLaplace = -2.8052328943245635;
// distribution functions
inline constexpr double kLaplaceCdfAt1 = 0.8160602794142788;
inline constexpr double kLaplaceQuantile09 = 1.6094379124341003;  // ln 5
inline constexpr double kNormQuantile0975 = 1.9599639845400543;
inline constexpr double kNormQuantile09 = 1.2815515655446004;
inline constexpr double kNormQuantile099 = 2.326347874040841;
inline constexpr double kLaplaceLogPdf2m3 = -6.386294361119891;
// momentum refresh with rho' = 0, z = 0.3: Laplace quantile of 0.8
inline constexpr double kRefreshZeroZ03 = 0.9162907318741551;
// pseudotime shift: (0.95 + pi/16) mod 1
inline constexpr double kShift095 = 0.14634954084936208;
// standardized first entry of the column (1, 2, 3)
inline constexpr double kStd123First = -1.224744871391589;
// KL(N(0,1) || N(2, 4))
inline constexpr double kKlGauss = 0.8181471805599453;
// chi-square inverse cdf at 0.99, df = 7 and df = 4
inline constexpr double kChi2Crit99Df7 = 18.475306906582365;
inline constexpr double kChi2Crit99Df4 = 13.276704135987625;
}  // namespace ref

// Standard normal in d dimensions. The synthetic catalog's 1-D Gaussian is
// N(2, 4), so tests that need a literal N(0, I) use this.
class StdNormalTarget : public mixflow::TargetModel {
 public:
  explicit StdNormalTarget(Eigen::Index dim) : dim_(dim) {}
  Eigen::Index dim() const override { return dim_; }
  double log_density(const Eigen::VectorXd& x) const override {
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += mixflow::normal_log_pdf(x[i]);
    return acc;
  }
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    return -x;
  }
  bool normalization_known() const override { return true; }
  std::string name() const override { return "stdnormal"; }

 private:
  Eigen::Index dim_;
};

// log p = sum x_i^4: gradients grow cubically, so a gradient step on the
// mean-field objective blows up. Used to exercise optimizer failure paths.
class QuarticExplosionTarget : public mixflow::TargetModel {
 public:
  explicit QuarticExplosionTarget(Eigen::Index dim) : dim_(dim) {}
  Eigen::Index dim() const override { return dim_; }
  double log_density(const Eigen::VectorXd& x) const override {
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += x[i] * x[i] * x[i] * x[i];
    return acc;
  }
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    return 4.0 * x.array().cube().matrix();
  }
  bool normalization_known() const override { return false; }
  std::string name() const override { return "quartic"; }

 private:
  Eigen::Index dim_;
};

// Deterministic map x -> x + delta on the position block; momentum and
// pseudotime pass through. Volume preserving, so both log-Jacobians are 0.
class TranslationTransform : public mixflow::FlowTransform {
 public:
  explicit TranslationTransform(Eigen::VectorXd delta)
      : delta_(std::move(delta)) {}
  Eigen::Index dim() const override { return delta_.size(); }
  std::pair<mixflow::AugmentedState, double> forward(
      const mixflow::AugmentedState& s) const override {
    mixflow::AugmentedState out = s;
    out.x += delta_;
    return {out, 0.0};
  }
  std::pair<mixflow::AugmentedState, double> inverse(
      const mixflow::AugmentedState& s) const override {
    mixflow::AugmentedState out = s;
    out.x -= delta_;
    return {out, 0.0};
  }

 private:
  Eigen::VectorXd delta_;
};

// Coordinatewise scaling x -> a .* x with constant log-Jacobian
// sum_i log a_i. The n-fold composition has the closed form a^n .* x, so
// mixture densities through this map have an analytic expression.
class ScalingTransform : public mixflow::FlowTransform {
 public:
  explicit ScalingTransform(Eigen::VectorXd a) : a_(std::move(a)) {
    log_jac_ = a_.array().abs().log().sum();
  }
  Eigen::Index dim() const override { return a_.size(); }
  std::pair<mixflow::AugmentedState, double> forward(
      const mixflow::AugmentedState& s) const override {
    mixflow::AugmentedState out = s;
    out.x = a_.cwiseProduct(out.x);
    return {out, log_jac_};
  }
  std::pair<mixflow::AugmentedState, double> inverse(
      const mixflow::AugmentedState& s) const override {
    mixflow::AugmentedState out = s;
    out.x = out.x.cwiseQuotient(a_);
    return {out, log_jac_};
  }
  double log_jacobian() const { return log_jac_; }

 private:
  Eigen::VectorXd a_;
  double log_jac_;
};

// A transform that diverges (throws) once |x_0| exceeds a threshold;
// otherwise translates by 1. For exercising divergence reporting.
class ThresholdDivergeTransform : public mixflow::FlowTransform {
 public:
  explicit ThresholdDivergeTransform(double limit) : limit_(limit) {}
  Eigen::Index dim() const override { return 1; }
  std::pair<mixflow::AugmentedState, double> forward(
      const mixflow::AugmentedState& s) const override {
    if (std::abs(s.x[0]) > limit_)
      throw mixflow::NumericalDivergence("threshold exceeded", 0);
    mixflow::AugmentedState out = s;
    out.x[0] += 1.0;
    return {out, 0.0};
  }
  std::pair<mixflow::AugmentedState, double> inverse(
      const mixflow::AugmentedState& s) const override {
    if (std::abs(s.x[0]) > limit_)
      throw mixflow::NumericalDivergence("threshold exceeded", 0);
    mixflow::AugmentedState out = s;
    out.x[0] -= 1.0;
    return {out, 0.0};
  }

 private:
  double limit_;
};

// Central finite-difference gradient of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Central finite-difference Jacobian determinant of a vector map R^k -> R^k.
inline double fd_jacobian_det(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& v, double h) {
  const int k = static_cast<int>(v.size());
  Eigen::MatrixXd jac(k, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    jac.col(j) = (f(vp) - f(vm)) / (2.0 * h);
  }
  return jac.determinant();
}

// Midpoint-rule integral of f over [lo, hi] with n cells.
inline double integrate_1d(const std::function<double(double)>& f, double lo,
                           double hi, int n) {
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(lo + (i + 0.5) * h);
  return acc * h;
}

// Midpoint-rule integral of f over an axis-aligned box.
inline double integrate_2d(const std::function<double(double, double)>& f,
                           double lo1, double hi1, int n1, double lo2,
                           double hi2, int n2) {
  const double h1 = (hi1 - lo1) / n1;
  const double h2 = (hi2 - lo2) / n2;
  double acc = 0.0;
  for (int i = 0; i < n1; ++i) {
    const double a = lo1 + (i + 0.5) * h1;
    double row = 0.0;
    for (int j = 0; j < n2; ++j) row += f(a, lo2 + (j + 0.5) * h2);
    acc += row;
  }
  return acc * h1 * h2;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// --- subprocess / filesystem helpers for CLI tests -----------------------

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Path to the command-line binary, exported by the test harness environment.
inline std::string cli_path() {
  const char* p = std::getenv("MIXFLOW_CLI");
  return p ? std::string(p) : std::string();
}

inline CliResult run_cli(const std::string& args) {
  CliResult r;
  std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) {
    r.output.append(buf, n);
    if (n < sizeof buf) break;
  }
  int status = ::pclose(pipe);
  if (status >= 0 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

// Fresh scratch directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("mixflow_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::string str() const { return dir_.string(); }
  std::string file(const std::string& name) const {
    return (dir_ / name).string();
  }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace testutil
