#include <cmath>
#include <random>

#include "doctest.h"
#include "mixflow/dataset.hpp"
#include "mixflow/regression.hpp"
#include "util.hpp"

using namespace mixflow;
namespace ref = testutil::ref;

namespace {
// single observation x = [1], response y
Dataset one_point(double y) {
  Dataset d;
  d.features = Eigen::MatrixXd::Ones(1, 1);
  d.responses = Eigen::VectorXd::Constant(1, y);
  d.feature_names = {"x1"};
  d.response_name = "y";
  return d;
}

Dataset small_batch(int rows, int cols, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset d;
  d.features = Eigen::MatrixXd::NullaryExpr(rows, cols, [&]() { return z(g); });
  d.responses = Eigen::VectorXd::NullaryExpr(rows, [&]() { return z(g); });
  d.feature_names.resize(static_cast<std::size_t>(cols), "f");
  d.response_name = "y";
  return d;
}
}  // namespace

TEST_CASE("linear regression log posterior at the origin") {
  // y = 0 with x = [1] at (beta, s) = 0: three standard-normal log pdfs
  auto t = make_linear_regression(one_point(0.0));
  CHECK(t->dim() == 2);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  CHECK(std::abs(t->log_density(theta) - ref::kLinRegExample) < 1e-12);
  CHECK_FALSE(t->normalization_known());

  // likelihood scale responds to s: moving s changes the density through
  // both the normalizer and the squared term
  theta << 0.5, 0.3;
  double sigma = std::exp(0.15);
  double want = normal_log_pdf(0.0, 0.5, sigma) + normal_log_pdf(0.5) +
                normal_log_pdf(0.3);
  CHECK(t->log_density(theta) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("cauchy regression log posterior matches closed form") {
  auto t = make_cauchy_regression(one_point(0.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  double want = 2.0 * (-std::log(M_PI)) + normal_log_pdf(0.0);
  CHECK(t->log_density(theta) == doctest::Approx(want).epsilon(1e-12));

  theta << 1.0, 0.0;
  // residual 1 at unit scale; Cauchy prior at beta = 1 halves the density
  double lik = -std::log(M_PI) - std::log1p(1.0);
  double prior = -std::log(M_PI) - std::log1p(1.0);
  want = lik + prior + normal_log_pdf(0.0);
  CHECK(t->log_density(theta) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("logistic regression log posterior at the origin") {
  auto t = make_logistic_regression(one_point(1.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  CHECK(std::abs(t->log_density(theta) - ref::kLogRegExample) < 1e-12);
}

TEST_CASE("poisson regression log posterior at the origin") {
  auto t = make_poisson_regression(one_point(1.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  CHECK(std::abs(t->log_density(theta) - ref::kPoissonExample) < 1e-12);
}

TEST_CASE("student-t regression log posterior at the origin") {
  auto t = make_student_t_regression(one_point(0.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  CHECK(std::abs(t->log_density(theta) - ref::kStudentTExample) < 1e-12);
}

TEST_CASE("sparse regression prior term at the origin") {
  // at (beta, s) = 0 the posterior splits into likelihood, mixture prior
  // and scale prior; the mixture prior contributes its frozen value
  auto t = make_sparse_regression(one_point(0.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  double want = normal_log_pdf(0.0) + ref::kSparsePriorAt0 + normal_log_pdf(0.0);
  CHECK(std::abs(t->log_density(theta) - want) < 1e-12);
}

TEST_CASE("regression gradients match finite differences") {
  Dataset data = small_batch(6, 2, 99);
  // responses valid for every likelihood family
  data.responses << 0, 1, 1, 0, 1, 0;

  std::mt19937_64 g(1234);
  std::normal_distribution<double> z(0.0, 0.8);
  const double h = 1e-5;
  for (const char* model : {"linear_normal", "linear_cauchy", "logistic",
                            "poisson", "student_t", "sparse"}) {
    auto t = regression_target(model, data);
    for (int k = 0; k < 40; ++k) {
      Eigen::VectorXd theta(t->dim());
      for (int i = 0; i < t->dim(); ++i) theta[i] = z(g);
      Eigen::VectorXd grad = t->grad_log_density(theta);
      Eigen::VectorXd fd = testutil::fd_gradient(
          [&](const Eigen::VectorXd& p) { return t->log_density(p); }, theta, h);
      for (int i = 0; i < t->dim(); ++i) {
        INFO(model, " coordinate ", i);
        CHECK(std::abs(grad[i] - fd[i]) <= 1e-5 * std::max(1.0, std::abs(fd[i])));
      }
    }
  }
}

TEST_CASE("regression parameter dimensions") {
  Dataset data = small_batch(4, 3, 5);
  data.responses << 0, 1, 0, 1;
  CHECK(regression_target("linear_normal", data)->dim() == 4);
  CHECK(regression_target("linear_cauchy", data)->dim() == 4);
  CHECK(regression_target("logistic", data)->dim() == 4);
  CHECK(regression_target("poisson", data)->dim() == 3);
  CHECK(regression_target("student_t", data)->dim() == 3);
  CHECK(regression_target("sparse", data)->dim() == 4);
}

TEST_CASE("regression input validation") {
  CHECK_THROWS_AS((void)make_logistic_regression(one_point(2.0)), InvalidArgument);
  CHECK_THROWS_AS((void)make_poisson_regression(one_point(-1.0)), InvalidArgument);
  CHECK_THROWS_AS((void)make_poisson_regression(one_point(2.5)), InvalidArgument);
  CHECK_THROWS_AS((void)regression_target("ridge", one_point(0.0)), InvalidArgument);

  Dataset empty;
  empty.features = Eigen::MatrixXd(0, 0);
  empty.responses = Eigen::VectorXd(0);
  CHECK_THROWS_AS((void)make_linear_regression(empty), InvalidArgument);

  auto t = make_linear_regression(one_point(0.0));
  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS((void)t->log_density(wrong), InvalidArgument);
}
