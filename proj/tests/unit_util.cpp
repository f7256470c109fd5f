#include <doctest.h>

#include <cstdlib>

#include "gapasym/cache.hpp"
#include "gapasym/kvdoc.hpp"
#include "gapasym/parallel.hpp"
#include "gapasym/special_functions.hpp"

using namespace gapasym;

TEST_CASE("kv parses scalars, arrays and tables") {
  const std::string text = R"(
# a comment
count = 3
width = 1.5
name = "hello \"world\""
flag = true
values = [1, 2.5, [3, 4]]

[inner]
depth = 2

[[items]]
id = 1
[[items]]
id = 2
)";
  const KvTable t = parse_kv(text);
  CHECK(t.at("count").as_int() == 3);
  CHECK(t.at("width").as_double() == 1.5);
  CHECK(t.at("name").as_string() == "hello \"world\"");
  CHECK(t.at("flag").as_bool() == true);
  const auto& vals = t.at("values").as_array();
  CHECK(vals.size() == 3);
  CHECK(vals[2].as_array()[1].as_int() == 4);
  CHECK(t.at("inner").as_table().at("depth").as_int() == 2);
  CHECK(t.at("items").as_array().size() == 2);
  CHECK(t.at("items").as_array()[1].as_table().at("id").as_int() == 2);
}

TEST_CASE("kv reports line and column on malformed input") {
  try {
    parse_kv("a = 1\nb 2\n");
    FAIL("expected a parse error");
  } catch (const KvParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK_THROWS(parse_kv("a = 1\na = 2\n"));
  CHECK_THROWS(parse_kv("a = [1, 2\n"));
  CHECK_THROWS(parse_kv("s = \"bad\\q\"\n"));
}

TEST_CASE("kv serialization round-trips") {
  KvTable t;
  t.insert("x", KvValue::of_float(-1.0 / 3.0));
  t.insert("n", KvValue::of_int(-7));
  t.insert("s", KvValue::of_string("a\nb"));
  std::vector<KvValue> arr{KvValue::of_float(2.0), KvValue::of_bool(false)};
  t.insert("arr", KvValue::of_array(std::move(arr)));
  KvTable inner;
  inner.insert("y", KvValue::of_float(3.25));
  t.insert("inner", KvValue::of_table(std::move(inner)));

  const std::string text = serialize_kv(t);
  const KvTable back = parse_kv(text);
  CHECK(back.at("x").as_double() == -1.0 / 3.0);  // 17 digits round-trip exactly
  CHECK(back.at("n").as_int() == -7);
  CHECK(back.at("s").as_string() == "a\nb");
  CHECK(back.at("arr").as_array()[0].as_double() == 2.0);
  CHECK(back.at("inner").as_table().at("y").as_double() == 3.25);
  CHECK(serialize_kv(back) == text);
}

TEST_CASE("g17 formatting round-trips doubles") {
  for (double v : {1.0 / 3.0, 2.863750982028913e-6, -9.19338471222e-11, 1e300}) {
    CHECK(std::strtod(format_g17(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("bessel K0 matches high-precision references to 1e-12") {
  const std::pair<double, double> refs[] = {
      {0.1, 2.42706902470201661251850602043},
      {0.3, 1.37246006054429737664488582444},
      {0.5, 0.92441907122766586178192416753},
      {1.0, 0.421024438240708333335627379213},
      {2.0, 0.113893872749533435652719574932},
      {4.0, 0.0111596760858530242697451959798},
      {8.0, 0.000146470705222815387096584408699},
      {10.0, 1.77800623161676518113011927995e-5},
      {16.0, 3.49941166393649893604550453251e-8},
      {20.0, 5.74123781533652429271670206162e-10},
      {25.0, 3.46416156221311435539853822297e-12}};
  for (const auto& [z, ref] : refs) {
    CHECK(std::abs(bessel_k0(z) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("block sums are independent of the thread count") {
  auto f = [](std::size_t i) {
    return std::complex<double>(std::sin(0.1 * i), std::cos(0.2 * i)) / double(i + 1);
  };
  const auto serial = block_sum(100000, f);
  for (int threads : {1, 2, 3, 7}) {
    set_thread_count(threads);
    const auto par = parallel_block_sum(100000, f);
    CHECK(par.real() == serial.real());
    CHECK(par.imag() == serial.imag());
  }
  set_thread_count(0);
}

TEST_CASE("fnv hash distinguishes payloads and is stable") {
  Fnv1a a, b, c;
  a.f64(1.0).i64(2);
  b.f64(1.0).i64(2);
  c.f64(1.0).i64(3);
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
  CHECK(a.hex().size() == 16);
}
