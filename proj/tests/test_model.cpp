#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <numbers>

#include "ruelle/ruelle.hpp"

using namespace ruelle;

namespace {

std::string expect_schema_path(const std::string& text) {
  try {
    parse_model_text(text);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(Model, BuiltinsLoad) {
  for (const auto& name : builtin_model_names()) {
    auto m = load_model("builtin:" + name);
    EXPECT_EQ(m.name, name);
    EXPECT_GT(detail::min_value(m.roof_fn()), 0.0);
    EXPECT_NO_THROW(m.potential_fn());
  }
  auto m = load_model("builtin:bernoulli-sqrt2");
  EXPECT_EQ(m.roof_fn().values(), (std::vector<double>{1.0, std::numbers::sqrt2}));
  EXPECT_NEAR(solve_Pf(m.potential_fn(), m.roof_fn()), 0.0, 1e-12);
  auto g = load_model("builtin:golden-mean");
  EXPECT_FALSE(g.shift.allowed(1, 1));
  EXPECT_THROW(load_model("builtin:nope"), SchemaError);
}

TEST(Model, FunctionTypes) {
  auto m = parse_model_text(R"({
    "alphabet_size": 2, "transition": [[1, 1], [1, 0]], "theta": 0.25,
    "functions": {
      "c":  {"type": "constant", "value": 2.5, "depth": 2},
      "fs": {"type": "first_symbol", "values": [1, 3]},
      "fl": {"type": "first_symbol_log", "values": [0.5, 2]},
      "t":  {"type": "table", "depth": 2, "values": {"00": 1, "01": 2, "10": 3}},
      "i":  {"type": "interaction", "depth": 3, "base": [1, 2], "amplitude": 0.5, "decay": 0.5}
    },
    "potential": "fl", "roof": "fs"})");
  EXPECT_EQ(m.theta, 0.25);
  EXPECT_EQ(m.function("c").depth(), 2);
  EXPECT_EQ(m.function("c").size(), 3u);
  EXPECT_NEAR(m.function("fl")(Word{1}), std::log(2.0), 1e-15);
  EXPECT_EQ(m.function("t")(Word{1, 0}), 3.0);
  EXPECT_EQ(m.function("t")(Word{0, 1}), 2.0);
  // base + 0.5 * (0.5 [x1 = x0] + 0.25 [x2 = x0])
  EXPECT_NEAR(m.function("i")(Word{0, 0, 0}), 1 + 0.25 + 0.125, 1e-15);
  EXPECT_NEAR(m.function("i")(Word{1, 0, 1}), 2 + 0.125, 1e-15);
  EXPECT_NEAR(m.function("i")(Word{0, 1, 0}), 1 + 0.125, 1e-15);
  EXPECT_EQ(m.roof, "fs");
}

TEST(Model, SchemaErrorsNameTheField) {
  EXPECT_EQ(expect_schema_path("{"), "$");
  EXPECT_EQ(expect_schema_path(R"({"functions": {}})"), "$.alphabet_size");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2})"), "$.functions");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "transition": [[1, 1]], "functions": {}})"), "$.transition");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "transition": [[1, 1], [1, 2]], "functions": {}})"), "$.transition[1][1]");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "transition": [[1, 0], [0, 1]], "functions": {}})"), "$.transition");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "theta": 1.5, "functions": {}})"), "$.theta");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "functions": {"f": {"type": "first_symbol", "values": [1]}}})"),
            "$.functions.f.values");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "functions": {"f": {"type": "wavelet"}}})"), "$.functions.f.type");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "functions": {"f": {"type": "table", "depth": 1, "values": {"0": 1}}}})"),
            "$.functions.f.values");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "transition": [[1, 1], [1, 0]],
      "functions": {"f": {"type": "table", "depth": 2, "values": {"00": 1, "01": 1, "10": 1, "11": 1}}}})"),
            "$.functions.f.values.11");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "functions": {"f": {"type": "constant", "value": 1}}, "roof": "g"})"),
            "$.roof");
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "functions": {"f": {"type": "constant", "value": -1}}, "roof": "f"})"),
            "$.functions.f");
  auto m = load_model("builtin:golden-mean");
  EXPECT_THROW(m.function("missing"), SchemaError);
}

TEST(Model, WordCapBoundsEnumeration) {
  EXPECT_EQ(expect_schema_path(R"({"alphabet_size": 2, "word_cap": 0, "functions": {}})"), "$.word_cap");
  auto m = parse_model_text(R"({"alphabet_size": 2, "word_cap": 64, "functions": {}})");
  EXPECT_EQ(m.shift.word_cap(), 64u);
  EXPECT_NO_THROW(enumerate_words(m.shift, 6));
  EXPECT_THROW(enumerate_words(m.shift, 7), CapacityError);
  EXPECT_EQ(load_model("builtin:golden-mean", 10).shift.word_cap(), 10u);
}

TEST(Model, MissingFileNamesPath) {
  try {
    load_model("/nonexistent/dir/model.json");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/model.json"), std::string::npos);
  }
}

TEST(Model, FileRoundTripAndHash) {
  const std::string path = ::testing::TempDir() + "ruelle_model_test.json";
  {
    std::ofstream out(path);
    out << detail::builtin_model_json("bernoulli-sqrt2").dump(2);
  }
  auto a = load_model(path);
  auto b = load_model("builtin:bernoulli-sqrt2");
  EXPECT_EQ(model_hash(a), model_hash(b));
  EXPECT_NE(model_hash(a), model_hash(load_model("builtin:constant-roof")));
  std::remove(path.c_str());
}

TEST(Model, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Observable, ParsesProfile) {
  auto m = load_model("builtin:bernoulli-sqrt2");
  auto j = nlohmann::json::parse(R"({"base": {"type": "first_symbol", "values": [1, 0]},
                                      "profile": {"breaks": [0, 0.5, 1], "coeffs": [[0, 2], [1]]}})");
  auto A = parse_observable(j, m.shift);
  EXPECT_EQ(A.base.values(), (std::vector<double>{1.0, 0.0}));
  EXPECT_NEAR(A.profile(0.25), 0.5, 1e-15);
  EXPECT_NEAR(A.profile(0.75), 1.0, 1e-15);
  auto bad = nlohmann::json::parse(R"({"base": {"type": "constant", "value": 1}, "profile": {"breaks": [0, 2], "coeffs": [[1]]}})");
  try {
    parse_observable(bad, m.shift);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "$.profile");
  }
}
