#include "doctest.h"
#include "sslgraph/autodiff.hpp"
#include "sslgraph/linalg.hpp"
#include "sslgraph/matrix.hpp"
#include "sslgraph/rng.hpp"
#include "sslgraph/sparse.hpp"
#include "support.hpp"

using namespace sslgraph;
using namespace sslgraph::testing;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Scalarizes y as Σ y² + 0.3·Σ y so every output entry influences the loss.
Var scalarize(Var y) { return ad::add(ad::sum(ad::square(y)), ad::scale(ad::sum(y), 0.3)); }

GradCheck check_op(std::vector<DenseMatrix> params, const Builder& build, std::uint64_t seed = 3) {
  auto run = [&](std::vector<DenseMatrix>* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    Var loss = build(tape, vars);
    if (grads != nullptr) {
      tape.backward(loss);
      grads->clear();
      for (Var v : vars) grads->push_back(tape.grad(v));
    }
    return loss.value()(0, 0);
  };
  std::vector<DenseMatrix> grads;
  run(&grads);
  Rng rng(seed);
  return check_gradients(params, grads, [&] { return run(nullptr); }, rng);
}

SparseAdjacency random_graph(std::size_t n, std::size_t edges, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t k = 0; k < edges; ++k) e.emplace_back(rng.uniform_index(n), rng.uniform_index(n));
  return SparseAdjacency::from_edges(n, e);
}

}  // namespace

TEST_CASE("matmul variants agree with the triple-loop oracle") {
  Rng rng(1);
  const DenseMatrix a = random_matrix(7, 5, rng), b = random_matrix(5, 9, rng);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-12);
  CHECK(max_abs_diff(matmul_tn(transpose(a), b), naive_matmul(a, b)) <= 1e-12);
  CHECK(max_abs_diff(matmul_nt(a, transpose(b)), naive_matmul(a, b)) <= 1e-12);

  DenseMatrix sparse_a = a;
  for (std::size_t i = 0; i < sparse_a.size(); i += 2) sparse_a.data()[i] = 0.0;
  CHECK(max_abs_diff(matmul(sparse_a, b), naive_matmul(sparse_a, b)) <= 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes and names them") {
  DenseMatrix a(2, 3), b(4, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
}

TEST_CASE("elementwise helpers") {
  const DenseMatrix a{{1, 2}, {3, 4}}, b{{0.5, -1}, {2, 0}};
  CHECK(add(a, b) == DenseMatrix{{1.5, 1}, {5, 4}});
  CHECK(subtract(a, b) == DenseMatrix{{0.5, 3}, {1, 4}});
  CHECK(scale(a, 2.0) == DenseMatrix{{2, 4}, {6, 8}});
  DenseMatrix c = a;
  axpy(c, -1.0, a);
  CHECK(frobenius_norm(c) == 0.0);
  const std::vector<std::size_t> rows{1, 1, 0};
  CHECK(gather_rows(a, rows) == DenseMatrix{{3, 4}, {3, 4}, {1, 2}});
}

TEST_CASE("from_edges symmetrizes, deduplicates and drops self-loops") {
  const std::vector<std::pair<std::size_t, std::size_t>> e{{0, 1}, {1, 0}, {2, 2}, {1, 2}, {0, 1}};
  const auto adj = SparseAdjacency::from_edges(3, e);
  CHECK(adj.undirected_edge_count() == 2);
  CHECK(adj.nnz() == 4);
  CHECK(adj.is_symmetric_pattern());
  CHECK_FALSE(adj.contains(2, 2));
  CHECK(adj.at(1, 0) == 1.0);
}

TEST_CASE("CSR constructor validates column order") {
  CHECK_THROWS_AS(SparseAdjacency(2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("spmm matches the densified product") {
  Rng rng(2);
  for (std::size_t n : {1u, 5u, 40u}) {
    const auto adj = random_graph(n, 3 * n, rng).with_self_loops(0.5);
    std::vector<double> vals(adj.nnz());
    for (double& v : vals) v = rng.uniform(-2.0, 2.0);
    const auto weighted = adj.with_values(vals);
    const DenseMatrix h = random_matrix(n, 6, rng);
    CHECK(max_abs_diff(spmm(weighted, h), naive_matmul(weighted.to_dense(), h)) <= 1e-12);
    CHECK(max_abs_diff(spmm_transposed(weighted, h),
                       naive_matmul(transpose(weighted.to_dense()), h)) <= 1e-12);
  }
}

TEST_CASE("rng is deterministic and streams are independent") {
  Rng a(42), b(42), c(43);
  std::vector<std::uint64_t> va, vb, vc;
  for (int i = 0; i < 16; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(Rng(42).split(0).next_u64() != Rng(42).split(1).next_u64());
  CHECK(Rng(42).split(5).next_u64() == Rng(42).split(5).next_u64());

  Rng r(7);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
  }
  CHECK(mean / 20000 == doctest::Approx(0.5).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) CHECK(r.uniform_index(7) < 7);
}

TEST_CASE("Jacobi eigensolver reconstructs the input") {
  Rng rng(5);
  for (std::size_t n : {1u, 2u, 6u, 30u}) {
    const DenseMatrix m = random_matrix(n, n, rng);
    const DenseMatrix s = add(m, transpose(m));
    const auto eig = eigh_symmetric(s);
    for (std::size_t i = 1; i < n; ++i) CHECK(eig.values[i - 1] >= eig.values[i]);
    DenseMatrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda(i, i) = eig.values[i];
    const DenseMatrix rebuilt = naive_matmul(naive_matmul(eig.vectors, lambda), transpose(eig.vectors));
    CHECK(max_abs_diff(rebuilt, s) <= 1e-9);
    CHECK(max_abs_diff(naive_matmul(transpose(eig.vectors), eig.vectors), DenseMatrix::identity(n)) <= 1e-9);
  }
}

TEST_CASE("Jacobi eigenvalues of a known matrix") {
  const auto eig = eigh_symmetric(DenseMatrix{{2, 1}, {1, 2}});
  CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(eigh_symmetric(DenseMatrix{{1, 2}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("LAPACK top-k agrees with Jacobi") {
  Rng rng(6);
  const DenseMatrix m = random_matrix(20, 20, rng);
  const DenseMatrix s = naive_matmul(m, transpose(m));
  const auto full = eigh_symmetric(s);
  const auto top = eigh_top_k(s, 4);
  REQUIRE(top.values.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(top.values[i] == doctest::Approx(full.values[i]).epsilon(1e-10));
    double dot = 0.0;
    for (std::size_t r = 0; r < 20; ++r) dot += top.vectors(r, i) * full.vectors(r, i);
    CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("tape backward: scalar loss required, unreachable parameters get zero") {
  Tape tape;
  Var a = tape.parameter(DenseMatrix{{1, 2}});
  Var unused = tape.parameter(DenseMatrix{{3}});
  CHECK_THROWS_AS(tape.backward(a), std::invalid_argument);
  Var loss = ad::sum(ad::square(a));
  tape.backward(loss);
  CHECK(tape.grad(a) == DenseMatrix{{2, 4}});
  CHECK(tape.grad(unused) == DenseMatrix{{0}});
}

TEST_CASE("gradient checks for every primitive") {
  Rng rng(11);
  const DenseMatrix a = random_matrix(6, 5, rng), b = random_matrix(5, 4, rng);
  const DenseMatrix c = random_matrix(6, 5, rng), row = random_matrix(1, 5, rng);
  const auto graph = random_graph(6, 10, rng).with_self_loops();
  std::vector<double> vals(graph.nnz());
  for (double& v : vals) v = rng.uniform(0.1, 1.0);
  const auto weighted = graph.with_values(vals);
  const DenseMatrix target = random_matrix(6, 5, rng);

  struct Case {
    const char* name;
    std::vector<DenseMatrix> params;
    Builder build;
  };
  const std::vector<Case> cases{
      {"matmul", {a, b}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::matmul(v[0], v[1])); }},
      {"spmm", {a}, [&](Tape&, const std::vector<Var>& v) { return scalarize(ad::spmm(weighted, v[0])); }},
      {"add", {a, c}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::add(v[0], v[1])); }},
      {"sub", {a, c}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::sub(v[0], v[1])); }},
      {"add_row", {a, row}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::add_row(v[0], v[1])); }},
      {"scale", {a}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::scale(v[0], -1.7)); }},
      {"relu", {a}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::relu(v[0])); }},
      {"elu", {a}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::elu(v[0])); }},
      {"leaky_relu", {a}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::leaky_relu(v[0], 0.2)); }},
      {"softmax_rows", {a}, [](Tape&, const std::vector<Var>& v) { return scalarize(ad::softmax_rows(v[0])); }},
      {"mean", {a}, [](Tape&, const std::vector<Var>& v) { return ad::mean(ad::square(v[0])); }},
      {"mse", {a}, [&](Tape&, const std::vector<Var>& v) { return ad::mse(v[0], target); }},
  };
  for (const auto& cs : cases) {
    CAPTURE(cs.name);
    const GradCheck g = check_op(cs.params, cs.build);
    CHECK(g.checked > 0);
    CHECK(g.max_rel_error < 1e-4);
  }
}

TEST_CASE("masked cross-entropy gradient and masking") {
  Rng rng(12);
  const DenseMatrix logits = random_matrix(30, 4, rng, -3, 3);
  std::vector<int> labels(30);
  Mask mask(30, 0);
  for (std::size_t i = 0; i < 30; ++i) {
    labels[i] = static_cast<int>(rng.uniform_index(4));
    mask[i] = i % 3 == 0;
  }
  const GradCheck g = check_op({logits}, [&](Tape&, const std::vector<Var>& v) {
    return ad::masked_cross_entropy(v[0], labels, mask);
  });
  CHECK(g.checked == 120);
  CHECK(g.max_rel_error < 1e-4);

  Tape tape;
  Var x = tape.parameter(logits);
  tape.backward(ad::masked_cross_entropy(x, labels, mask));
  for (std::size_t i = 0; i < 30; ++i)
    if (!mask[i])
      for (std::size_t k = 0; k < 4; ++k) CHECK(tape.grad(x)(i, k) == 0.0);

  CHECK_THROWS_AS(ad::masked_cross_entropy(x, labels, Mask(30, 0)), std::invalid_argument);
}

TEST_CASE("dropout keeps the expectation and is deterministic per stream") {
  Tape tape;
  Var x = tape.constant(DenseMatrix(200, 50, 1.0));
  Rng r1(9), r2(9);
  const DenseMatrix d1 = ad::dropout(x, 0.25, r1).value();
  const DenseMatrix d2 = ad::dropout(x, 0.25, r2).value();
  CHECK(d1 == d2);
  double mean = 0.0;
  for (double v : d1.data()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
    mean += v;
  }
  CHECK(mean / static_cast<double>(d1.size()) == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(ad::dropout(x, 1.0, r1), std::invalid_argument);
}

TEST_CASE("graph attention aggregation gradients") {
  Rng rng(13);
  const auto pattern = random_graph(8, 14, rng).with_self_loops();
  const DenseMatrix z = random_matrix(8, 3, rng), att = random_matrix(1, 6, rng);
  const GradCheck g = check_op({z, att}, [&](Tape&, const std::vector<Var>& v) {
    return scalarize(ad::gat_aggregate(v[0], v[1], pattern, 0.2));
  });
  CHECK(g.max_rel_error < 1e-4);
}
