#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <regex>

#include "fixtures.hpp"

namespace fx = s3dc::testing;

namespace {

struct Run {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string command = env + " " + S3DC_CLI_PATH + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { s3dc::save_object(fx::make_cube(), dir_ / "cube.obj"); }
  fx::TempDir dir_;
};

}  // namespace

TEST_F(Cli, SemanticCompressWritesFiftyEightBytes) {
  auto r = run("compress " + q(dir_ / "cube.obj") + " --mode semantic --chars 50 -o " + q(dir_ / "c.s3dc"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(std::filesystem::file_size(dir_ / "c.s3dc"), 58u);
  EXPECT_NE(r.output.find("compressed: 58 bytes"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("ratio: "), std::string::npos);
}

TEST_F(Cli, SeedMakesOutputReproducible) {
  const auto base = "compress " + q(dir_ / "cube.obj") + " --preset sem-100 --seed 9 -o ";
  ASSERT_EQ(run(base + q(dir_ / "a.s3dc")).exit_code, 0);
  ASSERT_EQ(run(base + q(dir_ / "b.s3dc")).exit_code, 0);
  EXPECT_EQ(s3dc::read_file(dir_ / "a.s3dc"), s3dc::read_file(dir_ / "b.s3dc"));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  const auto obj = q(dir_ / "cube.obj");
  const auto out = " -o " + q(dir_ / "x.s3dc");
  EXPECT_EQ(run("compress " + obj + " --mode structured" + out).exit_code, 2);
  EXPECT_EQ(run("compress " + obj + " --mode semantic -t 100" + out).exit_code, 2);
  EXPECT_EQ(run("compress " + obj + " --preset struct-250 --mode semantic" + out).exit_code, 2);
  EXPECT_EQ(run("compress " + obj + " --mode fancy" + out).exit_code, 2);
  EXPECT_EQ(run("compress " + q(dir_ / "missing.obj") + " --mode semantic" + out).exit_code, 2);
  EXPECT_EQ(run("compress " + obj + " --frobnicate" + out).exit_code, 2);
  EXPECT_EQ(run("eval --original " + obj + " --candidate nolabel -o " + q(dir_ / "r.csv")).exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("--help").exit_code, 0);
}

TEST_F(Cli, RuntimeFailuresExitOneWithStage) {
  fx::write_text(dir_ / "bad.s3dc", "NOPE\x01\x00\x00\x00");
  auto r = run("decompress " + q(dir_ / "bad.s3dc") + " -o " + q(dir_ / "out"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("unpack: "), std::string::npos) << r.output;
}

TEST_F(Cli, StructuredRoundTripThenEval) {
  s3dc::save_object(fx::make_textured_cube(), dir_ / "crate.obj");
  auto r = run("compress " + q(dir_ / "crate.obj") + " --preset struct-250 -o " + q(dir_ / "s.s3dc"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("edges: "), std::string::npos);
  r = run("decompress " + q(dir_ / "s.s3dc") + " -o " + q(dir_ / "rec"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  r = run("baseline " + q(dir_ / "crate.obj") + " --ratio 0.5 --quality 30 -o " + q(dir_ / "base"));
  ASSERT_EQ(r.exit_code, 0) << r.output;

  fx::write_text(dir_ / "rankings.txt", "0 1 2\n0 2 1\n1 0 2\n");
  r = run("eval --original " + q(dir_ / "crate.obj") + " --candidate texture=" + q(dir_ / "crate.obj") +
          " --candidate struct=" + q(dir_ / "rec") + " --candidate dec=" + q(dir_ / "base" / "object.obj") +
          " --rankings " + q(dir_ / "rankings.txt") + " --samples 2000 -o " + q(dir_ / "report.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto csv = fx::read_text(dir_ / "report.csv");
  EXPECT_EQ(csv.rfind("label,f,c,mr,ratio\ntexture,1,1,0.3333333333333333,1\n", 0), 0u) << csv;
  EXPECT_NE(csv.find("\nstruct,"), std::string::npos);
  EXPECT_NE(csv.find("\naverage,"), std::string::npos);
}

TEST_F(Cli, EvalOfOriginalAgainstItself) {
  auto r = run("eval --original " + q(dir_ / "cube.obj") + " --candidate same=" + q(dir_ / "cube.obj") + " -o " +
               q(dir_ / "r.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(std::regex_search(r.output, std::regex(R"(same\s+1\.00\s+1\.00\s+-\s+1e0)"))) << r.output;
}

TEST_F(Cli, ProfileOfConstantImagesIsAllHundred) {
  std::filesystem::create_directories(dir_ / "views");
  for (int i = 0; i < 4; ++i) {
    s3dc::write_file(dir_ / "views" / ("v" + std::to_string(i) + ".png"),
                     s3dc::encode_png(fx::solid_image(32, 32, 50 * i, 10, 200)));
  }
  auto r = run("profile-sparsity " + q(dir_ / "views") + " --resolutions 64 2048 --thresholds 100 250 500 750");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.output, m, std::regex(R"(\n\s+64 \|(.*)\|\s+(\S+)\n)"))) << r.output;
  EXPECT_NE(m[1].str().find("100.0"), std::string::npos);
  EXPECT_TRUE(std::regex_search(r.output, std::regex(R"(2048 \|(\s+100\.0 ±\s+0\.0 \|){4}\s+95\.45)"))) << r.output;
  EXPECT_EQ(r.output.find(" 99."), std::string::npos);
}

// The credential reaches the CLI only through the environment and must not
// show up in anything it prints or writes.
TEST_F(Cli, CredentialNeverEmitted) {
  const std::string secret = "sk-cli-93be0c7d1a";
  fx::write_text(dir_ / "http.conf",
                 "backend = http\ncaptioner.endpoint = http://127.0.0.1:9/v1\ncaptioner.retries = 1\n"
                 "captioner.backoff = 0.001\ncaptioner.timeout = 2\n");
  const auto env = "S3DC_CAPTIONER_API_KEY=" + secret + " S3DC_CONFIG=" + q(dir_ / "http.conf");
  auto r = run("compress " + q(dir_ / "cube.obj") + " --mode semantic -d 50 -o " + q(dir_ / "x.s3dc"), env);
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find("describe: "), std::string::npos) << r.output;
  EXPECT_EQ(r.output.find(secret), std::string::npos) << r.output;
  EXPECT_FALSE(std::filesystem::exists(dir_ / "x.s3dc"));
}
