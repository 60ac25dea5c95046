// Copyright 2026 The embalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <map>
#include <sstream>

#include "embalign/config.hpp"
#include "embalign/random.hpp"

using namespace embalign;

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(Rng(42).next() != Rng(43).next());
}

TEST_CASE("below is unbiased and in range") {
  Rng rng(1);
  std::map<std::uint64_t, int> hist;
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  // Chi-square with 6 degrees of freedom; 22.46 is the 0.999 quantile.
  double chi = 0;
  for (auto [v, count] : hist) chi += (count - n / 7.0) * (count - n / 7.0) / (n / 7.0);
  CHECK(chi < 22.46);
  CHECK(rng.below(1) == 0);
  const std::uint64_t big = (std::uint64_t{1} << 63) + 12345;
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(big) < big);
}

TEST_CASE("uniform and normal moments") {
  Rng rng(2);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derived seeds depend on base and label") {
  CHECK(derive_seed(1, "gan/x") == derive_seed(1, "gan/x"));
  CHECK(derive_seed(1, "gan/x") != derive_seed(2, "gan/x"));
  CHECK(derive_seed(1, "gan/x") != derive_seed(1, "gan/y"));
  CHECK(derive_seed(1, "") != derive_seed(1, "a"));
}

TEST_CASE("config files") {
  std::istringstream in(
      "# comment\n"
      "seed = 5\n"
      "name = a b  # trailing comment\n"
      "\n"
      "[gan]\n"
      "hidden=64\n"
      "seed = 9\n");
  const auto c = Config::parse(in);
  CHECK(c.get("seed") == "5");
  CHECK(c.get("name") == "a b");
  CHECK(c.get("gan.hidden") == "64");
  CHECK(c.lookup("gan", "seed") == "9");
  CHECK(c.lookup("sgns", "seed") == "5");
  CHECK_FALSE(c.lookup("gan", "missing").has_value());

  std::istringstream bad1("[open\n");
  CHECK_THROWS_AS(Config::parse(bad1), std::invalid_argument);
  std::istringstream bad2("no equals sign\n");
  CHECK_THROWS_AS(Config::parse(bad2), std::invalid_argument);
  std::istringstream bad3(" = 3\n");
  CHECK_THROWS_AS(Config::parse(bad3), std::invalid_argument);
}

TEST_CASE("value parsers") {
  CHECK(parse_double("2.5", "k") == 2.5);
  CHECK(parse_double(" 1e-3 ", "k") == 1e-3);
  CHECK_THROWS_AS(parse_double("abc", "k"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1.5x", "k"), std::invalid_argument);
  CHECK(parse_int("-4", "k") == -4);
  CHECK_THROWS_AS(parse_int("4.5", "k"), std::invalid_argument);
  CHECK(parse_uint("17", "k") == 17);
  CHECK_THROWS_AS(parse_uint("-1", "k"), std::invalid_argument);
  CHECK(parse_bool("true", "k"));
  CHECK(parse_bool("1", "k"));
  CHECK_FALSE(parse_bool("off", "k"));
  CHECK_THROWS_AS(parse_bool("maybe", "k"), std::invalid_argument);
  CHECK(split_list("a, b,,c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_list("").empty());
}
