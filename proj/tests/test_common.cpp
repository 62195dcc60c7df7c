#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "cdrift/common.hpp"
#include "cdrift/stats.hpp"

using namespace cdrift;

TEST_CASE("splitmix64 is deterministic and well-mixed") {
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(1) != splitmix64(2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(splitmix64(i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("derive_seed separates labeled streams") {
  CHECK(derive_seed(42, "a") == derive_seed(42, "a"));
  CHECK(derive_seed(42, "a") != derive_seed(42, "b"));
  CHECK(derive_seed(42, "a") != derive_seed(43, "a"));
}

TEST_CASE("fnv1a64 matches reference vectors") {
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("fmt_double round-trips and is locale-free") {
  CHECK(fmt_double(0.5, 6) == "0.5");
  CHECK(fmt_double(1.0, 6) == "1");
  CHECK(fmt_double(-0.25, 10) == "-0.25");
  CHECK(std::stod(fmt_double(1.0 / 3.0, 17)) == 1.0 / 3.0);
}

TEST_CASE("csv escape and split are inverse for tricky fields") {
  std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"",
                                     "", "multi\nline"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  CHECK(csv_split(line) == fields);
}

TEST_CASE("split_lines handles trailing newline and CRLF") {
  auto lines = split_lines("a\nb\r\nc\n");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "a");
  CHECK(lines[1] == "b");
  CHECK(lines[2] == "c");
}

TEST_CASE("file io round-trips binary content") {
  auto path = std::filesystem::temp_directory_path() / "cdrift_io_test.bin";
  std::string payload("\x00\x01\xff binary \n data", 18);
  write_file(path.string(), payload);
  CHECK(read_file(path.string()) == payload);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_file(path.string()), Error);
}

TEST_CASE("little-endian io helpers round-trip") {
  std::stringstream buf;
  io::write_u32(buf, 0xdeadbeefu);
  io::write_u64(buf, 0x0123456789abcdefULL);
  io::write_f32(buf, 1.5f);
  io::write_i64(buf, -42);
  // Byte order is fixed little-endian regardless of host.
  std::string raw = buf.str();
  REQUIRE(raw.size() == 24);
  CHECK(static_cast<unsigned char>(raw[0]) == 0xef);
  CHECK(static_cast<unsigned char>(raw[3]) == 0xde);
  CHECK(io::read_u32(buf) == 0xdeadbeefu);
  CHECK(io::read_u64(buf) == 0x0123456789abcdefULL);
  CHECK(io::read_f32(buf) == 1.5f);
  CHECK(io::read_i64(buf) == -42);
}

TEST_CASE("chi-square survival function matches known values") {
  // 1 df: P(X > x) = erfc(sqrt(x/2)).
  for (double x : {0.5, 1.0, 3.84, 10.0})
    CHECK_THAT(chi_square_sf(x, 1), Catch::Matchers::WithinAbs(
                                        std::erfc(std::sqrt(x / 2.0)), 1e-12));
  // 2 df: P(X > x) = exp(-x/2).
  CHECK_THAT(chi_square_sf(5.0, 2),
             Catch::Matchers::WithinAbs(std::exp(-2.5), 1e-12));
  CHECK(chi_square_sf(0.0, 1) == 1.0);
}

TEST_CASE("normal distribution helpers") {
  CHECK_THAT(normal_cdf(0.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(normal_cdf(1.959963984540054),
             Catch::Matchers::WithinAbs(0.975, 1e-9));
  CHECK_THAT(normal_two_sided_p(1.959963984540054),
             Catch::Matchers::WithinAbs(0.05, 1e-9));
}

TEST_CASE("summary statistics") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(v) == 2.5);
  CHECK_THAT(population_sd(v),
             Catch::Matchers::WithinAbs(std::sqrt(1.25), 1e-15));
  CHECK(median_of(v) == 2.5);
  std::vector<double> odd{5.0, 1.0, 3.0};
  CHECK(median_of(odd) == 3.0);
}
