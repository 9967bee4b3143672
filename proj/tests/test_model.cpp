#include <doctest.h>

#include "fixtures.hpp"
#include "rsd/errors.hpp"

using namespace rsd;

TEST_CASE("stick breaking examples") {
  auto q = stick_break(Eigen::Vector3d(1.0, 0.3, 0.7));
  CHECK(q[0] == 1.0);
  CHECK(q[1] == 0.0);
  CHECK(q[2] == 0.0);

  q = stick_break(Eigen::Vector3d(0.5, 0.5, 1.0));
  CHECK(q[0] == doctest::Approx(0.5));
  CHECK(q[1] == doctest::Approx(0.25));
  CHECK(q[2] == doctest::Approx(0.25));

  q = stick_break(Eigen::Vector4d(0.2, 0.2, 0.2, 1.0));
  CHECK(q[0] == doctest::Approx(0.2));
  CHECK(q[1] == doctest::Approx(0.16));
  CHECK(q[2] == doctest::Approx(0.128));
  CHECK(q[3] == doctest::Approx(0.512));

  // Last stick is forced to one.
  q = stick_break(Eigen::Vector3d(0.5, 0.5, 0.1));
  CHECK(q[2] == doctest::Approx(0.25));

  CHECK_THROWS_AS(stick_break(Eigen::Vector2d(1.5, 1.0)), DomainError);
  CHECK_THROWS_AS(stick_break(Eigen::Vector2d(-0.1, 1.0)), DomainError);
}

TEST_CASE("stick breaking lands on the simplex and is monotone") {
  RngStream rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const int K = 2 + static_cast<int>(rng.next_u64() % 30);
    Eigen::VectorXd u(K);
    for (int k = 0; k < K; ++k) u[k] = rng.uniform();
    const Eigen::VectorXd q = stick_break(u);
    REQUIRE(q.minCoeff() >= 0.0);
    REQUIRE(std::abs(q.sum() - 1.0) < 1e-12);

    const int g = static_cast<int>(rng.next_u64() % (K - 1));
    Eigen::VectorXd u2 = u;
    u2[g] = std::min(1.0, u[g] + 0.1);
    REQUIRE(stick_break(u2)[g] >= q[g]);
  }
}

TEST_CASE("init_state invariants, determinism and support") {
  RngStream data_rng(1);
  const Dataset d = test::random_dataset(50, 3, data_rng);
  for (PriorKind kind : {PriorKind::ridge, PriorKind::lasso}) {
    for (InitKind init : {InitKind::uniform, InitKind::spatial, InitKind::automatic}) {
      HyperParams hp;
      hp.prior_kind = kind;
      RngStream a(9), b(9);
      const MCMCState s1 = init_state(d, hp, a, init);
      const MCMCState s2 = init_state(d, hp, b, init);
      CHECK(s1.check_invariants(50).empty());
      CHECK(s1.g == s2.g);
      CHECK(s1.h == s2.h);
      CHECK(s1.beta == s2.beta);
      CHECK(s1.mu_x == s2.mu_x);
      if (kind == PriorKind::ridge) CHECK((s1.psi.array() == 100.0).all());
      if (kind == PriorKind::lasso) CHECK((s1.psi.array() == 1.0).all());
    }
  }

  HyperParams hp;
  hp.K = 2;
  RngStream r(3);
  const Dataset small = test::random_dataset(10, 2, r);
  const MCMCState st = init_state(small, hp, r);
  for (int g : st.g) CHECK((g == 0 || g == 1));
  CHECK(st.check_invariants(10).empty());
}

TEST_CASE("spatial initialization groups nearby points") {
  Eigen::MatrixXd S(6, 2);
  S << 0.1, 0.1, 0.11, 0.1, 0.1, 0.12, 0.9, 0.9, 0.91, 0.9, 0.9, 0.88;
  RngStream rng(2);
  const auto labels = kmeans_labels(S, 2, rng);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[0] == labels[2]);
  CHECK(labels[3] == labels[4]);
  CHECK(labels[3] == labels[5]);
  CHECK(labels[0] != labels[3]);
}

TEST_CASE("check_invariants reports violations") {
  MCMCState st = test::blank_state(3, 2, 1, 4);
  CHECK(st.check_invariants(4).empty());
  st.sigma_sq[1] = 0.0;
  CHECK_FALSE(st.check_invariants(4).empty());
  st = test::blank_state(3, 2, 1, 4);
  st.mu_x(0, 0) = 1.0;
  CHECK_FALSE(st.check_invariants(4).empty());
  st = test::blank_state(3, 2, 1, 4);
  st.q[0] += 0.1;
  CHECK_FALSE(st.check_invariants(4).empty());
}

TEST_CASE("validation of configuration and data") {
  HyperParams hp;
  CHECK_NOTHROW(hp.validate());
  hp.K = 1;
  CHECK_THROWS_AS(hp.validate(), ValidationError);
  hp = HyperParams{};
  hp.c = 0.0;
  CHECK_THROWS_AS(hp.validate(), ValidationError);

  ChainConfig cfg{100, 50, 1, 1};
  CHECK_NOTHROW(cfg.validate());
  cfg.thin = 2;  // 25 stored draws
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = ChainConfig{100, 100, 1, 1};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(ChainConfig::desk().stored_count() == 400);

  RngStream r(1);
  Dataset d = test::random_dataset(5, 2, r);
  CHECK_NOTHROW(d.validate());
  d.counts[3] = 0.5;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = test::random_dataset(5, 2, r);
  d.S(2, 0) = 1.2;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = test::random_dataset(5, 2, r);
  d.y[0] = std::nan("");
  CHECK_THROWS_AS(d.validate(), ValidationError);

  CHECK(prior_kind_from_string("lasso") == PriorKind::lasso);
  CHECK(init_kind_from_string("auto") == InitKind::automatic);
  CHECK(init_kind_from_string(to_string(InitKind::spatial)) == InitKind::spatial);
  CHECK_THROWS_AS(init_kind_from_string("random"), ValidationError);
  CHECK(resolve_init(InitKind::automatic, 1155, 4, 20) == InitKind::uniform);
  CHECK(resolve_init(InitKind::automatic, 563, 30, 20) == InitKind::spatial);
  CHECK(resolve_init(InitKind::uniform, 10, 30, 20) == InitKind::uniform);
  CHECK_THROWS_AS(prior_kind_from_string("elastic"), ValidationError);
}

TEST_CASE("dataset subset keeps rows in order") {
  RngStream r(4);
  Dataset d = test::random_dataset(6, 2, r);
  d.ids = {"a", "b", "c", "d", "e", "f"};
  const Dataset s = d.subset({4, 1});
  CHECK(s.n() == 2);
  CHECK(s.ids == std::vector<std::string>{"e", "b"});
  CHECK(s.X.row(0) == d.X.row(4));
  CHECK(s.y[1] == d.y[1]);
}
