#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "mislab/report.hpp"

using namespace mislab;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mislab");
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  return {rc, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli_report") {
  TEST_CASE("grid syntax") {
    CHECK(parse_grid("500:5000:x2") == std::vector<std::size_t>{500, 1000, 2000, 4000});
    CHECK(parse_grid("10:30:+10") == std::vector<std::size_t>{10, 20, 30});
    CHECK(parse_grid("3,5,9") == std::vector<std::size_t>{3, 5, 9});
    CHECK(parse_grid("42") == std::vector<std::size_t>{42});
    CHECK_THROWS_AS(parse_grid("5,3"), UsageError);
    CHECK_THROWS_AS(parse_grid("1:10:x1"), UsageError);
    CHECK_THROWS_AS(parse_grid("1:10"), UsageError);
    CHECK_THROWS_AS(parse_grid("a,b"), UsageError);
    CHECK_THROWS_AS(parse_grid("10:1:+1"), UsageError);
  }

  TEST_CASE("edge probability accepts fractions only") {
    CHECK(parse_probability("2/3").p() == Rational(2, 3));
    CHECK_THROWS_AS(parse_probability("0.5"), UsageError);
    CHECK_THROWS_AS(parse_probability("1e-1"), UsageError);
    CHECK_THROWS_AS(parse_probability("1"), UsageError);
    CHECK_THROWS_AS(parse_probability("x/y"), UsageError);
  }

  TEST_CASE("exact mean and zeta examples") {
    const Run m = run({"exact-mean", "--p", "1/2", "--n", "3"});
    CHECK(m.status == cli::ok);
    CHECK(m.out.find("\n3,19/8\n") != std::string::npos);
    CHECK(m.out.rfind("# engine: mislab-1.0.0\n", 0) == 0);
    const Run z = run({"zeta", "--m", "2"});
    CHECK(z.status == cli::ok);
    CHECK(z.out.find("\n2,4/3,") != std::string::npos);
  }

  TEST_CASE("usage errors exit with status 1") {
    CHECK(run({}).status == cli::usage);
    CHECK(run({"no-such-command"}).status == cli::usage);
    CHECK(run({"exact-mean", "--p", "0.5", "--n", "3"}).status == cli::usage);
    CHECK(run({"exact-mean", "--n", "3"}).status == cli::usage);
    CHECK(run({"simulate", "--kind", "Y", "--n-grid", "10"}).status == cli::usage);
    const Run bad = run({"simulate", "--kind", "Y", "--p", "1/2", "--n-grid", "30,10"});
    CHECK(bad.status == cli::usage);
    CHECK(bad.err.find("increasing") != std::string::npos);
  }

  TEST_CASE("identity checks report success") {
    CHECK(run({"closed-forms", "--p", "1/3", "--n-max", "40"}).status == cli::ok);
    CHECK(run({"jn", "--p", "1/4", "--n-max", "40"}).status == cli::ok);
    const Run nu = run({"nu", "--n-max", "30"});
    CHECK(nu.status == cli::ok);
    CHECK(nu.out.find("# all_integral: true") != std::string::npos);
  }

  TEST_CASE("every analysis subcommand runs") {
    CHECK(run({"moments", "--p", "1/2", "--n-max", "30", "--mode", "exact", "--m-max", "3"}).status == cli::ok);
    CHECK(run({"asymptotic", "--p", "1/2", "--n-grid", "100,200"}).status == cli::ok);
    CHECK(run({"asymptotic", "--p", "1/2", "--n-grid", "100,200", "--formula", "saddle"}).status == cli::ok);
    CHECK(run({"asymptotic", "--p", "2/3", "--n-grid", "100", "--formula", "jn", "--format", "json"}).status == cli::ok);
    CHECK(run({"charlier", "--p", "1/2", "--n-grid", "50,100"}).status == cli::ok);
    CHECK(run({"alt-expansion", "--p", "1/2", "--x", "300", "--terms", "2"}).status == cli::ok);
    CHECK(run({"compare", "--p", "1/2", "--n-grid", "100:400:x2"}).status == cli::ok);
    CHECK(run({"z-limit", "--n-grid", "8,16", "--R", "500"}).status == cli::ok);
    CHECK(run({"normality", "--p", "1/2", "--n-grid", "10,20,40", "--R", "500", "--exact-n-grid", "50,100,200",
               "--calibration-reps", "50"})
              .status == cli::ok);
  }

  TEST_CASE("simulation reports are deterministic and thread-count independent") {
    const std::vector<std::string> base = {"simulate", "--kind", "X", "--p", "1/2", "--n-grid", "10,20", "--R", "200"};
    auto with = [&](const char* threads) {
      auto a = base;
      a.insert(a.end(), {"--threads", threads});
      return run(a);
    };
    const Run one = with("1"), four = with("4");
    CHECK(one.status == cli::ok);
    CHECK(one.out == four.out);
    CHECK(one.out.find("threads") == std::string::npos);
  }

  TEST_CASE("a cache hit yields the same report as a cold run") {
    const auto dir = std::filesystem::temp_directory_path() / "mislab_cli_cache";
    std::filesystem::remove_all(dir);
    const std::vector<std::string> args = {"moments", "--p", "1/3", "--n-max", "120", "--n-grid", "30:120:+30", "--bits", "192"};
    const Run cold = run(args);
    auto cached_args = args;
    cached_args.insert(cached_args.end(), {"--cache-dir", dir.string()});
    const Run first = run(cached_args);
    const Run hit = run(cached_args);
    CHECK(std::filesystem::exists(dir));
    CHECK(cold.out == first.out);
    CHECK(cold.out == hit.out);
    const Run verify = run({"cache", "--p", "1/3", "--n-max", "120", "--bits", "192", "--cache-dir", dir.string(), "--verify"});
    CHECK(verify.status == cli::ok);
    CHECK(verify.out.find("# verified_identical: true") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("cache directory falls back to the environment") {
    ::setenv("MISLAB_CACHE_DIR", "/tmp/from-env", 1);
    CHECK(resolve_cache_dir("") == "/tmp/from-env");
    CHECK(resolve_cache_dir("/x") == "/x");
    ::unsetenv("MISLAB_CACHE_DIR");
    CHECK(resolve_cache_dir("").empty());
  }

  TEST_CASE("report files are written when --out is given") {
    const auto path = std::filesystem::temp_directory_path() / "mislab_out_test.csv";
    const Run r = run({"exact-mean", "--p", "1/2", "--n-grid", "1:5:+1", "--out", path.string()});
    CHECK(r.status == cli::ok);
    CHECK(r.out.empty());
    CHECK(std::filesystem::file_size(path) > 0);
    std::filesystem::remove(path);
  }
}
