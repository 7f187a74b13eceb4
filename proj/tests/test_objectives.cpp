#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gzsl/error.hpp"
#include "gzsl/objectives.hpp"
#include "gzsl/prototypes.hpp"
#include "gzsl/rng.hpp"

using namespace gzsl;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// Columns 0..ns-1 seen, the rest unseen.
PrototypeSet random_prototypes(std::size_t dim, std::size_t ns, std::size_t nu, Rng& rng) {
  std::vector<std::int64_t> ids(ns + nu);
  std::iota(ids.begin(), ids.end(), 100);
  std::vector<bool> seen(ns + nu, false);
  for (std::size_t c = 0; c < ns; ++c) seen[c] = true;
  return PrototypeSet(random_matrix(dim, ns + nu, rng), ids, seen);
}

// Reference softmax in long double, straight from the definition.
std::vector<long double> ref_probs(std::span<const double> e, const Matrix& protos,
                                   const std::vector<std::size_t>& cols, double t) {
  std::vector<long double> z;
  long double en = 0;
  for (double v : e) en += static_cast<long double>(v) * v;
  en = std::sqrt(en);
  for (std::size_t c : cols) {
    long double d = 0, pn = 0;
    for (std::size_t a = 0; a < e.size(); ++a) {
      d += static_cast<long double>(e[a]) * protos(a, c);
      pn += static_cast<long double>(protos(a, c)) * protos(a, c);
    }
    z.push_back(d / (en * std::sqrt(pn)) / t);
  }
  long double mx = *std::max_element(z.begin(), z.end()), sum = 0;
  for (auto& v : z) sum += (v = std::exp(v - mx));
  for (auto& v : z) v /= sum;
  return z;
}

long double ref_entropy(const std::vector<long double>& p, std::size_t from, std::size_t to) {
  long double h = 0;
  for (std::size_t c = from; c < to; ++c)
    if (p[c] > 0) h -= p[c] * std::log(p[c]);
  return h / static_cast<long double>(to - from);
}

// Reference regularized joint loss with the seen columns first.
double ref_loss_final(const Matrix& real, const std::vector<std::size_t>& real_labels,
                      const Matrix& gen, const std::vector<std::size_t>& gen_labels,
                      const PrototypeSet& ps, double t, double m, double lam) {
  const std::size_t ns = ps.seen_columns().size(), nc = ps.num_classes();
  std::vector<std::size_t> all(nc);
  std::iota(all.begin(), all.end(), 0);
  long double ce_r = 0, ce_g = 0, hsr = 0, hur = 0, hsg = 0, hug = 0;
  for (std::size_t i = 0; i < real.rows(); ++i) {
    const auto p = ref_probs(real.row(i), ps.matrix(), all, t);
    ce_r -= std::log(p[real_labels[i]]);
    hsr += ref_entropy(p, 0, ns);
    hur += ref_entropy(p, ns, nc);
  }
  for (std::size_t i = 0; i < gen.rows(); ++i) {
    const auto p = ref_probs(gen.row(i), ps.matrix(), all, t);
    ce_g -= std::log(p[gen_labels[i]]);
    hsg += ref_entropy(p, 0, ns);
    hug += ref_entropy(p, ns, nc);
  }
  const long double nr = real.rows(), ng = gen.rows();
  const long double rs = std::max<long double>(0, m + hsr / nr - hsg / ng);
  const long double ru = std::max<long double>(0, m + hug / ng - hur / nr);
  return static_cast<double>(ce_r / nr + ce_g / ng + lam * (rs + ru));
}

}  // namespace

TEST_CASE("two-class probability at the saturated logit") {
  const PrototypeSet ps(Matrix::from_rows({{1, 0}, {0, 1}}), {0, 1}, {true, true});
  const Matrix e = Matrix::from_rows({{3.0, 0.0}});
  const Matrix p = class_probabilities(e, ps, {0.05, Universe::Joint});
  const double expected = std::exp(20.0) / (std::exp(20.0) + 1.0);
  CHECK(std::abs(p(0, 0) - expected) < 1e-12);
  CHECK(std::abs(p(0, 1) - (1.0 - expected)) < 1e-12);
}

TEST_CASE("loss of an equidistant embedding is log of the universe size") {
  // Embedding orthogonal to all prototypes: every logit is zero.
  Matrix m(3, 4);
  m(0, 0) = 1;
  m(0, 1) = 1;
  m(1, 2) = 1;
  m(1, 3) = 1;
  const PrototypeSet ps(m, {0, 1, 2, 3}, {true, true, false, false});
  const Matrix e = Matrix::from_rows({{0, 0, 2.5}});
  const std::vector<std::size_t> label = {1};
  const auto seen_only = loss_seen(e, label, ps, {0.05, Universe::SeenOnly});
  CHECK(std::abs(seen_only.loss - std::log(2.0)) < 1e-12);
  const auto joint = loss_seen(e, label, ps, {0.05, Universe::Joint});
  CHECK(std::abs(joint.loss - std::log(4.0)) < 1e-12);
}

TEST_CASE("seen-only universe excludes unseen prototypes") {
  Rng rng(1);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  CHECK(universe_columns(ps, Universe::SeenOnly) == std::vector<std::size_t>{0, 1, 2});
  CHECK(universe_columns(ps, Universe::Joint).size() == 5);
  const Matrix p = class_probabilities(random_matrix(4, 5, rng), ps, {0.05, Universe::SeenOnly});
  CHECK(p.cols() == 3);
}

TEST_CASE("probabilities match a long-double reference and sum to one") {
  Rng rng(2);
  const PrototypeSet ps = random_prototypes(6, 4, 3, rng);
  const Matrix e = random_matrix(200, 6, rng);
  std::vector<std::size_t> all(7);
  std::iota(all.begin(), all.end(), 0);
  for (double t : {0.05, 0.1, 1.0}) {
    const Matrix p = class_probabilities(e, ps, {t, Universe::Joint});
    for (std::size_t i = 0; i < e.rows(); ++i) {
      const auto ref = ref_probs(e.row(i), ps.matrix(), all, t);
      double sum = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        sum += p(i, c);
        CHECK(std::abs(p(i, c) - static_cast<double>(ref[c])) < 1e-12);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("scaling an embedding does not change its probabilities") {
  Rng rng(3);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  Matrix e = random_matrix(3, 5, rng);
  const Matrix p = class_probabilities(e, ps, {});
  e *= 1e4;
  CHECK(max_abs_diff(class_probabilities(e, ps, {}), p) < 1e-12);
}

TEST_CASE("degenerate inputs") {
  Rng rng(4);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  CHECK_THROWS_AS(class_probabilities(Matrix(1, 5), ps, {}), DegenerateVectorError);
  CHECK_THROWS_AS(class_probabilities(Matrix(1, 4, 1.0), ps, {}), ShapeError);
  CHECK_THROWS_AS(class_probabilities(Matrix(1, 5, 1.0), ps, {0.0, Universe::Joint}),
                  ArgumentError);
  const std::vector<std::size_t> unseen_label = {3};
  CHECK_THROWS_AS(loss_seen(Matrix(1, 5, 1.0), unseen_label, ps, {}), ValidationError);
}

TEST_CASE("directional entropy closed forms") {
  const std::vector<double> delta = {0, 1, 0, 0, 0};
  const std::vector<std::size_t> first4 = {0, 1, 2, 3};
  CHECK(directional_entropy(delta, first4) == 0.0);
  const std::vector<double> uniform = {0.25, 0.25, 0.25, 0.25};
  CHECK(std::abs(directional_entropy(uniform, first4) - std::log(4.0) / 4.0) < 1e-12);
  for (std::size_t n : {2u, 3u, 7u, 50u}) {
    std::vector<double> u(n, 1.0 / static_cast<double>(n));
    std::vector<std::size_t> sub(n);
    std::iota(sub.begin(), sub.end(), 0);
    CHECK(std::abs(directional_entropy(u, sub) - std::log(double(n)) / double(n)) < 1e-12);
  }
  // Subset restricted sums over a larger distribution are not renormalized.
  const std::vector<double> mixed = {0.5, 0.5, 0.0};
  const std::vector<std::size_t> tail = {1, 2};
  CHECK(std::abs(directional_entropy(mixed, tail) - 0.5 * std::log(2.0) / 2.0) < 1e-15);
  CHECK_THROWS_AS(directional_entropy(mixed, std::vector<std::size_t>{}), ArgumentError);
  CHECK_THROWS_AS(directional_entropy(mixed, std::vector<std::size_t>{3}), ArgumentError);
}

TEST_CASE("hinge arithmetic") {
  auto t = margin_regularizers(0.1, 0.5, 0.3, 0.4, 0.2);
  CHECK(t.r_s == 0.0);
  CHECK(t.r_u == 0.2 + 0.4 - 0.3);
  t = margin_regularizers(0.3, 0.1, 0.9, 0.0, 0.2);
  CHECK(t.r_s == 0.2 + 0.3 - 0.1);
  CHECK(t.r_u == 0.0);
}

TEST_CASE("joint loss matches the reference and finite differences") {
  Rng rng(5);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  const Matrix real = random_matrix(6, 5, rng);
  const Matrix gen = random_matrix(4, 5, rng);
  const std::vector<std::size_t> rl = {0, 1, 2, 0, 1, 2};
  const std::vector<std::size_t> gl = {3, 4, 3, 4};
  for (double t : {0.05, 0.5}) {
    for (double m : {0.2, 5.0, 0.0}) {
      const ProbModelConfig pc{t, Universe::Joint};
      const RegConfig rc{m, 0.1, true, true};
      const auto r = loss_final(real, rl, gen, gl, ps, pc, rc);
      CHECK(std::abs(r.loss - ref_loss_final(real, rl, gen, gl, ps, t, m, 0.1)) < 1e-9);
      // Entries near zero carry roundoff of order eps * loss / h, hence the 1e-3 floor.
      const double h = 1e-6;
      double worst = 0;
      for (int which = 0; which < 2; ++which) {
        const Matrix& base = which == 0 ? real : gen;
        const Matrix& g = which == 0 ? r.grad_real : r.grad_gen;
        for (std::size_t i = 0; i < base.size(); ++i) {
          Matrix plus = base, minus = base;
          plus.values()[i] += h;
          minus.values()[i] -= h;
          const double lp = which == 0 ? loss_final(plus, rl, gen, gl, ps, pc, rc).loss
                                       : loss_final(real, rl, plus, gl, ps, pc, rc).loss;
          const double lm = which == 0 ? loss_final(minus, rl, gen, gl, ps, pc, rc).loss
                                       : loss_final(real, rl, minus, gl, ps, pc, rc).loss;
          const double num = (lp - lm) / (2 * h);
          worst = std::max(worst, std::abs(num - g.values()[i]) /
                                      std::max({std::abs(num), std::abs(g.values()[i]), 1e-3}));
        }
      }
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("direction flags select which margins enter the loss") {
  Rng rng(7);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  const Matrix real = random_matrix(3, 5, rng);
  const Matrix gen = random_matrix(2, 5, rng);
  const std::vector<std::size_t> rl = {0, 1, 2}, gl = {3, 4};
  const ProbModelConfig pc{};
  const auto both = loss_final(real, rl, gen, gl, ps, pc, {5.0, 0.1, true, true});
  const auto s_only = loss_final(real, rl, gen, gl, ps, pc, {5.0, 0.1, true, false});
  const auto u_only = loss_final(real, rl, gen, gl, ps, pc, {5.0, 0.1, false, true});
  const double base = both.ce_real + both.ce_gen;
  CHECK(std::abs(s_only.loss - (base + 0.1 * both.r_s)) < 1e-12);
  CHECK(std::abs(u_only.loss - (base + 0.1 * both.r_u)) < 1e-12);
  CHECK(std::abs(both.loss - (base + 0.1 * (both.r_s + both.r_u))) < 1e-12);
}

TEST_CASE("empty batches leave the margins at zero") {
  Rng rng(8);
  const PrototypeSet ps = random_prototypes(5, 3, 2, rng);
  const Matrix real = random_matrix(3, 5, rng);
  const std::vector<std::size_t> rl = {0, 1, 2};
  const auto r = loss_final(real, rl, Matrix(0, 5), {}, ps, {}, {});
  CHECK(r.r_s == 0.0);
  CHECK(r.r_u == 0.0);
  CHECK(r.grad_gen.rows() == 0);
  CHECK(std::abs(r.loss - r.ce_real) < 1e-15);
  CHECK_THROWS_AS(loss_final(real, rl, Matrix(0, 5), {}, ps, {0.05, Universe::SeenOnly}, {}),
                  ArgumentError);
}
