#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rac/cli.hpp"

namespace fs = std::filesystem;
using rac::run_command;

namespace {

struct Out {
  int code = 0;
  std::string out, err;
};

Out call(std::vector<std::string> args) {
  std::ostringstream o, e;
  Out r;
  r.code = run_command(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "ractool_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::vector<std::string> kSmall = {"--topics", "12", "--len", "800", "--sessions-per-topic", "5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("gen is reproducible") {
  const auto a = call(with({"gen", "--seed", "3"}, kSmall));
  const auto b = call(with({"gen", "--seed", "3"}, kSmall));
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("# ractool 0.1.0 seed=3 config=", 0) == 0);
  CHECK(call(with({"gen", "--seed", "4"}, kSmall)).out != a.out);
}

TEST_CASE("run from a trace file") {
  const fs::path trace = scratch() / "t.trace";
  REQUIRE(call(with({"gen", "--seed", "2", "--out", trace.string()}, kSmall)).code == 0);
  const auto r = call({"run", "--trace", trace.string(), "--policy", "rac", "--capacity", "0.1"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("# ractool", 0) == 0);
  CHECK(r.out.find("rac,") != std::string::npos);
  CHECK(call({"run", "--trace", trace.string(), "--policy", "rac", "--capacity", "0.1"}).out == r.out);
  const fs::path log = scratch() / "steps.log";
  const auto steps =
      call({"run", "--trace", trace.string(), "--policy", "lru", "--capacity-abs", "10", "--steps", log.string()});
  CHECK(steps.code == 0);
  CHECK(slurp(log).find("MISS 1") != std::string::npos);
}

TEST_CASE("errors map to exit codes") {
  const auto bad_policy = call(with({"run", "--policy", "nosuch"}, kSmall));
  CHECK(bad_policy.code == 1);
  CHECK(bad_policy.err.find("lru") != std::string::npos);
  CHECK(call({"run", "--trace", (scratch() / "missing.trace").string()}).code == 2);
  CHECK(call({"run", "--bogus"}).code == 1);
  CHECK(call({}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({"gen", "--config", (scratch() / "missing.cfg").string()}).code == 2);
}

TEST_CASE("config file with flag override") {
  const fs::path cfg = scratch() / "small.cfg";
  {
    std::ofstream f(cfg);
    f << "# small world\ntopics=12\nlen=800\nsessions_per_topic=5\ngamma=0.7\n";
  }
  const auto from_file = call({"gen", "--seed", "3", "--config", cfg.string(), "--gamma", "1.0"});
  CHECK(from_file.code == 0);
  const auto direct = call(with({"gen", "--seed", "3", "--gamma", "1.0"}, kSmall));
  // Same trace body; only the echoed config path differs.
  auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  CHECK(body(from_file.out) == body(direct.out));
}

TEST_CASE("sweep and report") {
  const fs::path results = scratch() / "sweep.csv";
  const auto args = with({"sweep", "--policy", "rac,lru", "--seed", "1-2", "--out", results.string(), "--jobs", "2"},
                         {"--topics", "12", "--len", "800", "--sessions-per-topic", "5"});
  REQUIRE(call(args).code == 0);
  const std::string first = slurp(results);
  REQUIRE(call(args).code == 0);
  CHECK(slurp(results) == first);
  const fs::path prefix = scratch() / "rep";
  const auto r = call({"report", results.string(), "--out", prefix.string()});
  CHECK(r.code == 0);
  const std::string summary = slurp(scratch() / "rep_summary.csv");
  CHECK(summary.find("mean_hr_norm") != std::string::npos);
  CHECK(summary.find("\nrac,") != std::string::npos);
  CHECK(call({"report", (scratch() / "nope.csv").string()}).code == 2);
}
