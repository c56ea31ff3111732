#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "qsda/elastic.hpp"
#include "tests/automata_util.hpp"

using namespace qsda;

namespace {
EnvPtr list_env() { return make_env({"head"}, 2); }
EnvPtr plain_env() { return make_env({"head"}, 0); }

DataFormula head_le(const EnvPtr& env, Datum c) {
  return DataFormula::top(env).with_atom({1, env->pv_index("head"), 0, -1, c});
}
}  // namespace

TEST_CASE("elasticity is a plain scan over blank unary transitions") {
  auto env = list_env();
  CHECK(is_elastic(mini_sort(env)));
  CHECK_FALSE(is_elastic(stretch(mini_sort(env))));
  auto env0 = plain_env();
  CHECK(is_elastic(exact_lists(env0, {0, 1}, DataFormula::top(env0))));  // no blanks at all
  CHECK_FALSE(is_elastic(exact_lists(env0, {2}, DataFormula::top(env0))));
  CHECK(is_elastic(bottom_qsda(env0)));
  CHECK_THROWS_AS(validate_elastic(Eqsda{stretch(mini_sort(env))}), AnalysisError);
}

TEST_CASE("elastifying an elastic automaton changes nothing") {
  auto env = list_env();
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_variant(env, rng);
    auto e = elastify(v);
    CHECK(is_elastic(e.a));
    CHECK(struct_equal(e.a, normalize(v)));
  }
  CHECK(struct_equal(elastify(bottom_qsda(env)).a, bottom_qsda(env)));
}

TEST_CASE("stretched loops collapse back to the original") {
  auto env = list_env();
  Rng rng(47);
  for (int trial = 0; trial < 15; ++trial) {
    auto v = random_variant(env, rng);
    auto e = elastify(stretch(v));
    CHECK(struct_equal(e.a, normalize(v)));
    // idempotence
    CHECK(struct_equal(elastify(e.a).a, e.a));
  }
}

TEST_CASE("an exact-length recognizer elastifies to any-length") {
  auto env = plain_env();
  auto two_only = exact_lists(env, {2}, head_le(env, 3));
  auto lens_accepted = [&](const Qsda& a) {
    std::set<int> got;
    for (int len = 0; len <= 4; ++len)
      if (accepts_heap(a, mk_list(env, "head", std::vector<Datum>(len, 1))))
        got.insert(len);
    return got;
  };
  CHECK(lens_accepted(two_only) == std::set<int>{2});
  auto e = elastify(two_only);
  CHECK(lens_accepted(e.a) == std::set<int>{1, 2, 3, 4});
  // the data formula rides along unchanged
  CHECK(accepts_heap(e.a, mk_list(env, "head", {3, 0, 0})));
  CHECK_FALSE(accepts_heap(e.a, mk_list(env, "head", {5, 0, 0})));
}

TEST_CASE("elastification only ever grows the language") {
  auto env = list_env();
  Rng rng(813);
  int included = 0;
  for (int trial = 0; trial < 12; ++trial) {
    auto a = stretch(random_variant(env, rng));
    auto e = elastify(a);
    CHECK(order_leq(a, e.a));
    for (int h = 0; h < 5; ++h) {
      auto c = random_list(env, rng);
      for (const Tree& vt : valuations(encode(c), *env)) {
        if (accepts_valuation(a, vt)) {
          CHECK(accepts_valuation(e.a, vt));
          ++included;
        }
      }
    }
  }
  CHECK(included > 50);  // the inclusion direction actually fired
}

TEST_CASE("elastification is the most precise elastic upper bound") {
  auto env = list_env();
  Rng rng(271);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = stretch(random_variant(env, rng));
    auto bigger = elastify(lattice_join(a, random_variant(env, rng)));
    REQUIRE(order_leq(a, bigger.a));
    CHECK(order_leq(elastify(a).a, bigger.a));
  }
  // hand-built pair over the no-universal environment
  auto env0 = plain_env();
  auto a = exact_lists(env0, {2}, head_le(env0, 1));
  auto b = elastify(exact_lists(env0, {1, 2, 3}, head_le(env0, 5)));
  REQUIRE(order_leq(a, b.a));
  CHECK(order_leq(elastify(a).a, b.a));
}

TEST_CASE("the elastic join is a least upper bound with a neutral bottom") {
  auto env = list_env();
  Rng rng(667);
  Eqsda bot{bottom_qsda(env)};
  for (int trial = 0; trial < 12; ++trial) {
    auto e1 = elastify(random_variant(env, rng));
    auto e2 = elastify(stretch(random_variant(env, rng)));
    auto j = ejoin(e1, e2);
    CHECK(is_elastic(j.a));
    CHECK(order_leq(e1.a, j.a));
    CHECK(order_leq(e2.a, j.a));
    CHECK(struct_equal(ejoin(bot, e1).a, e1.a));
    CHECK(struct_equal(ejoin(e1, e1).a, e1.a));
  }
}

TEST_CASE("serialization carries the elastic marker") {
  auto env = list_env();
  auto e = elastify(mini_sort(env));
  auto back = eqsda_from_json(eqsda_to_json(e));
  CHECK(struct_equal(back.a, e.a));

  // plain automaton payload: marker missing
  CHECK_THROWS_AS(eqsda_from_json(qsda_to_json(e.a)), AnalysisError);

  // marker present but the table is not elastic
  auto j = nlohmann::json::parse(qsda_to_json(stretch(mini_sort(env))));
  j["elastic"] = true;
  CHECK_THROWS_AS(eqsda_from_json(j.dump()), AnalysisError);
}
