#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "test_support.hpp"

using namespace linconv;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(LINCONV_CLI_PATH) + " " + args;
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

CliRun shell(const std::string& script) {
  CliRun r;
  FILE* p = popen(("sh -c '" + script + "'").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("linconv_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string family(const std::string& example) {
    return write(example + ".json", to_json(catalogue(example).family).dump());
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, AnalyzeOutputIsAVerifiableReport) {
  const std::string fam = family("a11-switching");
  const CliRun r = run("analyze " + fam);
  ASSERT_EQ(r.code, 0) << r.out;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["strong"]["status"], "proven");
  EXPECT_EQ(j["tool"]["name"], "linconv");
  const std::string rep = write("rep.json", r.out);
  const CliRun v = run("verify " + rep + " " + fam);
  ASSERT_EQ(v.code, 0);
  EXPECT_TRUE(Json::parse(v.out)["pass"].get<bool>());
}

TEST_F(Cli, Pipes) {
  const std::string cli = LINCONV_CLI_PATH;
  // Catalogue family straight into analyze.
  CliRun a = shell(cli + " examples path-consensus | " + cli + " analyze -");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(Json::parse(a.out)["strong"]["status"], "proven");

  // Analyze into verify.
  const std::string fam = family("scalar-half-one");
  CliRun b = shell(cli + " analyze " + fam + " | " + cli + " verify - " + fam);
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_TRUE(Json::parse(b.out)["pass"].get<bool>());

  // Dual into analyze.
  CliRun c = shell(cli + " examples ct-duality | " + cli + " dual - | " + cli + " analyze -");
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_EQ(Json::parse(c.out)["strong"]["status"], "proven");
}

TEST_F(Cli, CertifyMethods) {
  const std::string fam = family("path-consensus");
  for (const char* m : {"strong-lmi", "weak-lmi", "cqlf"}) {
    const CliRun r = run(std::string("certify --method ") + m + " " + fam);
    ASSERT_EQ(r.code, 0) << m << r.out;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["certificate_method"], m);
    const std::string rep = write("cert.json", r.out);
    EXPECT_TRUE(Json::parse(run("verify " + rep + " " + fam).out)["pass"].get<bool>()) << m;
  }
  const std::string x = write("X.json", "[[1, 1], [-1, 1]]");
  const CliRun p = run("certify --method polyhedral --candidate " + x + " " + fam);
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_EQ(Json::parse(p.out)["strong"]["status"], "proven");
  const std::string rep = write("poly.json", p.out);
  EXPECT_TRUE(Json::parse(run("verify " + rep + " " + fam).out)["pass"].get<bool>());
  EXPECT_EQ(run("certify --method polyhedral " + fam + " 2>/dev/null").code, 1);
}

TEST_F(Cli, Simulate) {
  const std::string fam = family("a11-switching");
  const std::string csv = (dir_ / "traj.csv").string();
  const CliRun r = run("simulate " + fam + " --signal cycle:0,1 --x0 1,1 --horizon 200 --csv " + csv);
  ASSERT_EQ(r.code, 0) << r.out;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["trajectory"]["converged"].get<bool>());
  EXPECT_TRUE(j["diagnostics"].is_object());
  std::ifstream is(csv);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,x1,x2,w1,w2");

  const CliRun s = run("simulate " + family("spike-schedule") + " --signal spike --x0 1 --horizon 60 --dt 0.5");
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_NEAR(Json::parse(s.out)["trajectory"]["x_final"][0].get<double>(), 0.5, 1e-12);

  EXPECT_EQ(run("simulate " + fam + " --signal cycle:0,5 --x0 1,1 2>/dev/null").code, 1);
  EXPECT_EQ(run("simulate " + fam + " --signal wobble --x0 1,1 2>/dev/null").code, 1);
  EXPECT_EQ(run("simulate " + fam + " --x0 1 2>/dev/null").code, 1);
}

TEST_F(Cli, WeakKernelLaSalleRateDual) {
  const std::string diag = family("diag-kernels");
  CliRun w = run("weak-kernel " + diag + " --x 1,0");
  ASSERT_EQ(w.code, 0);
  EXPECT_TRUE(Json::parse(w.out)["member"].get<bool>());
  CliRun s = run("weak-kernel " + diag + " --scan 20");
  ASSERT_EQ(s.code, 0);
  EXPECT_TRUE(Json::parse(s.out)["witness_found"].get<bool>());
  EXPECT_EQ(run("weak-kernel " + diag + " 2>/dev/null").code, 1);

  const std::string p = write("P.json", R"({"P": [[1, 0], [0, 1]]})");
  CliRun l = run("lasalle " + diag + " --P " + p);
  ASSERT_EQ(l.code, 0);
  EXPECT_EQ(Json::parse(l.out)["components"].size(), 2u);

  CliRun r = run("rate " + family("path-consensus"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(Json::parse(r.out)["beta"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(run("rate " + family("pm-one-dt") + " 2>/dev/null").code, 1);

  CliRun d = run("dual " + family("dt-duality"));
  ASSERT_EQ(d.code, 0);
  EXPECT_TRUE(parse_family(d.out) == dual_family(catalogue("dt-duality").family));
}

TEST_F(Cli, ExamplesListing) {
  const CliRun r = run("examples");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["examples"].size(), catalogue_names().size());
  const CliRun one = run("examples rotation-dt");
  ASSERT_EQ(one.code, 0);
  EXPECT_TRUE(parse_family(one.out) == catalogue("rotation-dt").family);
  EXPECT_EQ(run("examples nope 2>/dev/null").code, 1);
}

TEST_F(Cli, ErrorsAndExitCodes) {
  const std::string err = (dir_ / "err.txt").string();
  EXPECT_EQ(run("analyze " + (dir_ / "missing.json").string() + " 2>" + err).code, 1);
  std::ifstream is(err);
  const Json e = Json::parse(is);
  EXPECT_EQ(e["error"]["kind"], "input");
  EXPECT_FALSE(e["error"]["message"].get<std::string>().empty());

  EXPECT_EQ(run("analyze " + write("bad.json", "{\"mode\": \"dt\"}") + " 2>/dev/null").code, 1);
  EXPECT_EQ(run("frobnicate 2>/dev/null").code, 1);
  EXPECT_EQ(run("2>/dev/null").code, 1);
  EXPECT_EQ(run("--tol -1 analyze " + family("pm-one-dt") + " 2>/dev/null").code, 1);

  // A report that does not match is a verification result, not an error.
  const std::string rep = write("r.json", run("analyze " + family("scalar-half-one")).out);
  const CliRun v = run("verify " + rep + " " + family("pm-one-dt"));
  EXPECT_EQ(v.code, 0);
  EXPECT_FALSE(Json::parse(v.out)["pass"].get<bool>());
}

TEST_F(Cli, OutFileAndSeed) {
  const std::string out = (dir_ / "o.json").string();
  const std::string fam = family("kolmogorov-row");
  ASSERT_EQ(run("--seed 7 --out " + out + " analyze " + fam).code, 0);
  std::ifstream is(out);
  const Json j = Json::parse(is);
  EXPECT_EQ(j["seed"], 7);
  const CliRun b = run("--seed 3 simulate " + fam + " --signal random --x0 1,0 --horizon 5");
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(Json::parse(b.out)["seed"], 3);
}
